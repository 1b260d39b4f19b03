"""External fact-check pipeline with model fallback.

Queries a claims:search-style service (request params `query` and `key`;
response `claims[].text` and `claims[].claimReview[]` with `textualRating`,
`publisher.name`, `url`, `reviewDate`). A match yields a maximal-confidence
result carrying the publisher's rating; service outages, quota errors and
malformed payloads all degrade to "no match" so the claim still gets a vote
via role-based model analysis.
"""

from __future__ import annotations

import copy
import hashlib
import logging
import re
import threading
import time
from dataclasses import dataclass
from typing import Any

import requests

from .errors import (
    ApiUnavailableError,
    CompletionTimeoutError,
    ParseFailureError,
    ProviderError,
    QuotaExceededError,
)
from .gateway import ExpertRoleSet, ModelProfile, role_based_analysis
from .model import (
    Claim,
    Label,
    PipelineId,
    PipelineResult,
    RouteTag,
    SourceAttribution,
    error_placeholder,
)

logger = logging.getLogger(__name__)

_ANALYZER_ERRORS = (ParseFailureError, CompletionTimeoutError, ProviderError)


@dataclass(frozen=True)
class FactCheckMatch:
    """The first review of the first claim returned by the external service."""

    matched_claim_text: str
    textual_rating: str
    publisher: str
    url: str
    review_date: str | None = None

    def __post_init__(self):
        if not self.url:
            raise ValueError("a fact-check match requires a URL")


class RatingMap:
    """Ordered, total mapping from publisher rating strings to labels.

    Each pattern is matched case-insensitively as a whole phrase (word
    boundaries on both ends) against the rating; the first matching rule
    wins and anything unmatched falls through to the terminal default.
    """

    def __init__(self, rules: list[tuple[str, Label]], default: Label = Label.NEI):
        self.rules = [
            (pattern, label, re.compile(rf"\b{re.escape(pattern.lower())}\b"))
            for pattern, label in rules
        ]
        self.default = default

    def apply(self, textual_rating: str) -> Label:
        folded = (textual_rating or "").lower()
        for _, label, pattern in self.rules:
            if pattern.search(folded):
                return label
        return self.default

    @classmethod
    def default_map(cls) -> "RatingMap":
        return cls(
            [
                ("mostly true", Label.TRUE),
                ("true", Label.TRUE),
                ("correct", Label.TRUE),
                ("accurate", Label.TRUE),
                ("mostly false", Label.FALSE),
                ("false", Label.FALSE),
                ("pants on fire", Label.FALSE),
                ("fake", Label.FALSE),
                ("incorrect", Label.FALSE),
                ("misleading", Label.FALSE),
            ]
        )

    @classmethod
    def from_rules(cls, rules: list[dict], default: str = "nei") -> "RatingMap":
        """Build from config entries [{"pattern": ..., "label": ...}, ...]."""
        from .model import parse_label

        return cls(
            [(rule["pattern"], parse_label(rule["label"])) for rule in rules],
            default=parse_label(default),
        )


class ResponseCache:
    """TTL cache of raw service responses keyed by claim fingerprint."""

    def __init__(self, ttl_seconds: float = 3600.0, clock=time.monotonic):
        self.ttl = ttl_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[float, Any]] = {}

    def get(self, key: str):
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                return None
            stamp, value = entry
            if self._clock() - stamp > self.ttl:
                del self._entries[key]
                return None
            return copy.deepcopy(value)

    def put(self, key: str, value) -> None:
        with self._lock:
            self._entries[key] = (self._clock(), copy.deepcopy(value))


def claim_fingerprint(claim_text: str) -> str:
    return hashlib.sha256(claim_text.strip().encode("utf-8")).hexdigest()


class _TokenBucket:
    """Simple per-key rate limiter; None rate disables it."""

    def __init__(self, rate_per_sec: float | None, burst: int = 5):
        self.rate = rate_per_sec
        self.capacity = burst
        self.tokens = float(burst)
        self.stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate is None:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
                self.stamp = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                needed = (1.0 - self.tokens) / self.rate
            time.sleep(needed)


class HttpFactCheckClient:
    """HTTP client for a claims:search-shaped endpoint."""

    def __init__(
        self,
        endpoint: str,
        api_key: str,
        *,
        session: requests.Session | None = None,
        timeout: float = 15.0,
        rate_per_sec: float | None = None,
    ):
        self.endpoint = endpoint
        self._api_key = api_key
        self._session = session or requests.Session()
        self.timeout = timeout
        self._bucket = _TokenBucket(rate_per_sec)

    def search_raw(self, claim_text: str) -> dict:
        self._bucket.acquire()
        try:
            resp = self._session.get(
                self.endpoint,
                params={"query": claim_text, "key": self._api_key},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ApiUnavailableError(f"fact-check service unreachable: {exc}") from exc
        if resp.status_code == 429:
            raise QuotaExceededError("fact-check service quota exceeded (HTTP 429)")
        if resp.status_code != 200:
            raise ApiUnavailableError(f"fact-check service returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ApiUnavailableError(f"fact-check service returned malformed JSON: {exc}") from exc


class ScriptedFactCheckClient:
    """Offline client answering from a script of claim text -> raw response.

    Script shape: {"matches": {<claim text>: <claims:search response>},
    "default": <response>}. A response of {"raise": "quota"|"unavailable"}
    scripts the corresponding failure.
    """

    def __init__(self, script: dict | None = None):
        script = script or {}
        self._matches: dict[str, Any] = script.get("matches", {})
        self._default: Any = script.get("default", {})
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def call_count(self) -> int:
        with self._lock:
            return len(self.calls)

    def search_raw(self, claim_text: str) -> dict:
        with self._lock:
            self.calls.append(claim_text)
        response = self._matches.get(claim_text.strip(), self._default)
        if isinstance(response, dict) and "raise" in response:
            if response["raise"] == "quota":
                raise QuotaExceededError("scripted quota error")
            raise ApiUnavailableError("scripted outage")
        return copy.deepcopy(response)


def query_external(claim: Claim, client, *, cache: ResponseCache | None = None, audit=None):
    """Query the external service; None means "no usable match".

    Service errors and malformed payloads degrade to None with a warning so
    the pipeline falls back instead of failing the claim. The first claim
    result's first review is taken; all candidates go to the audit log.
    """
    key = claim_fingerprint(claim.text)
    raw = cache.get(key) if cache is not None else None
    if raw is None:
        try:
            raw = client.search_raw(claim.text)
        except (ApiUnavailableError, QuotaExceededError) as exc:
            logger.warning("fact-check lookup degraded to no-match: %s", exc)
            return None
        if cache is not None:
            cache.put(key, raw)

    if audit is not None:
        audit({"claim_id": claim.id, "factcheck_response": raw})

    if not isinstance(raw, dict):
        logger.warning("fact-check response is not an object; treating as no match")
        return None
    claims = raw.get("claims")
    if not isinstance(claims, list) or not claims:
        return None
    first = claims[0]
    if not isinstance(first, dict):
        logger.warning("fact-check claim entry malformed; treating as no match")
        return None
    reviews = first.get("claimReview")
    if not isinstance(reviews, list) or not reviews or not isinstance(reviews[0], dict):
        return None
    review = reviews[0]
    url = str(review.get("url") or "").strip()
    rating = str(review.get("textualRating") or "").strip()
    publisher_obj = review.get("publisher")
    publisher = ""
    if isinstance(publisher_obj, dict):
        publisher = str(publisher_obj.get("name") or "").strip()
    if not url or not rating:
        logger.warning("fact-check review missing url or rating; treating as no match")
        return None
    review_date = review.get("reviewDate")
    return FactCheckMatch(
        matched_claim_text=str(first.get("text") or "").strip(),
        textual_rating=rating,
        publisher=publisher or "Unknown publisher",
        url=url,
        review_date=str(review_date) if isinstance(review_date, str) else None,
    )


def to_result(match: FactCheckMatch, rating_map: RatingMap) -> PipelineResult:
    """Convert an external match into a maximal-confidence pipeline result."""
    label = rating_map.apply(match.textual_rating)
    evidence = f"{match.publisher}: {match.textual_rating}"
    if match.matched_claim_text:
        evidence += f' (reviewed claim: "{match.matched_claim_text}")'
    return PipelineResult(
        label=label,
        evidence=evidence,
        source=SourceAttribution.external(match.url),
        confidence=1.0,
        pipeline_id=PipelineId.FACTCHECK,
        route=RouteTag.EXTERNAL_MATCH,
    )


def verify(
    claim: Claim,
    client,
    provider,
    analyzer_profile: ModelProfile | None,
    roles: ExpertRoleSet,
    *,
    rating_map: RatingMap | None = None,
    cache: ResponseCache | None = None,
    audit=None,
) -> PipelineResult:
    """Fact-check pipeline: external match first, LLM fallback otherwise.

    Passing provider/analyzer_profile as None disables the fallback stage
    (the external-only ablation); a no-match then yields a zero-confidence
    NEI record.
    """
    rating_map = rating_map or RatingMap.default_map()
    match = query_external(claim, client, cache=cache, audit=audit)
    if match is not None:
        return to_result(match, rating_map)

    if provider is None or analyzer_profile is None:
        return PipelineResult(
            label=Label.NEI,
            evidence="No external fact-check match",
            source=SourceAttribution.parametric(),
            confidence=0.0,
            pipeline_id=PipelineId.FACTCHECK,
            route=RouteTag.LLM_FALLBACK,
        )

    try:
        assessment = role_based_analysis(provider, analyzer_profile, claim.text, roles)
    except _ANALYZER_ERRORS as exc:
        logger.warning("fact-check fallback analyzer failed: %s", exc)
        return error_placeholder(
            PipelineId.FACTCHECK, f"fallback analyzer failed: {exc}", RouteTag.LLM_FALLBACK
        )
    return PipelineResult(
        label=assessment.label,
        evidence=assessment.evidence,
        source=SourceAttribution.parametric(),
        confidence=assessment.confidence,
        pipeline_id=PipelineId.FACTCHECK,
        route=RouteTag.LLM_FALLBACK,
    )
