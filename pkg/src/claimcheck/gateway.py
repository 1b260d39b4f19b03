"""Language-model gateway: provider contract, prompts, and output parsing.

Models are instructed to answer with a fenced JSON object carrying `label`,
`evidence`, `confidence` and `used_context`; the parser accepts only a
complete JSON block (fenced, or the whole completion), never fields mined
from prose. A failed parse earns exactly one repair retry, then the call
fails and the owning pipeline substitutes its error placeholder.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import requests

from .errors import (
    CompletionTimeoutError,
    ParseFailureError,
    ProviderError,
    UnrecognizedLabelError,
)
from .index import SearchHit
from .model import Label, PipelineId, parse_label

logger = logging.getLogger(__name__)

DEFAULT_EXPERT_ROLES = (
    "Financial Analyst",
    "Political Misinformation Specialist",
    "Government Policy Analyst",
    "Investigative Journalist",
)


class ModelId(enum.Enum):
    RAG_MODEL_1 = "rag_model_1"
    RAG_MODEL_2 = "rag_model_2"
    FACTCHECK_ANALYZER = "factcheck_analyzer"


PIPELINE_FOR_MODEL = {
    ModelId.RAG_MODEL_1: PipelineId.RAG1,
    ModelId.RAG_MODEL_2: PipelineId.RAG2,
    ModelId.FACTCHECK_ANALYZER: PipelineId.FACTCHECK,
}


@dataclass(frozen=True)
class ModelProfile:
    """Everything needed to address one completion model."""

    model_id: ModelId
    endpoint: str | None = None
    auth_token_env: str | None = None
    model_name: str | None = None
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0
    max_in_flight: int = 4
    max_retries: int = 3


@dataclass(frozen=True)
class ExpertRoleSet:
    """Ordered expert perspectives rendered into the role-based prompt."""

    roles: tuple[str, ...] = DEFAULT_EXPERT_ROLES

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        if not self.roles:
            raise ValueError("role set must be non-empty")
        if any(not r.strip() for r in self.roles):
            raise ValueError("role names must be non-empty")


@dataclass(frozen=True)
class ModelAssessment:
    """Structured verdict fragment parsed from a completion."""

    label: Label
    evidence: str
    confidence: float
    used_context: bool


def prompt_fingerprint(prompt: str) -> str:
    """Stable 16-hex-char fingerprint used to key scripted responses."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


# -- prompt construction -----------------------------------------------------

_OUTPUT_CONTRACT = (
    "Respond with exactly one fenced JSON block and nothing else:\n"
    "```json\n"
    '{"label": "true|false|nei", "evidence": "<your justification>", '
    '"confidence": <number between 0.0 and 1.0>, "used_context": <true|false>}\n'
    "```"
)


def combine_documents(hits: Sequence[SearchHit]) -> str:
    """Render retrieved hits, best first, as numbered evidence lines."""
    return "\n".join(
        f"[{i}] {hit.document.evidence_text} (source: {hit.document.origin})"
        for i, hit in enumerate(hits, start=1)
    )


def build_reasoning_prompt(claim_text: str, hits: Sequence[SearchHit]) -> str:
    """Hybrid-tier prompt: claim plus retrieved context, context-first instructions."""
    return (
        "You are a financial claim verification assistant.\n\n"
        f"Claim:\n{claim_text}\n\n"
        f"Retrieved context:\n{combine_documents(hits)}\n\n"
        "Evaluate the claim using the provided context. Decide whether the claim "
        "is true, false, or nei (not enough information). Set \"used_context\" to "
        "true if the retrieved context was relevant and sufficient for your "
        "verdict; set it to false if you had to rely on your own knowledge "
        "instead. Report your confidence on a 0.0 to 1.0 scale.\n\n"
        + _OUTPUT_CONTRACT
    )


def build_role_prompt(claim_text: str, roles: ExpertRoleSet) -> str:
    """Low-similarity prompt: reason as each expert in order, one verdict."""
    role_lines = "\n".join(f"{i}. {role}" for i, role in enumerate(roles.roles, start=1))
    return (
        "You are a financial claim verification assistant with no retrieved "
        "context available.\n\n"
        f"Claim:\n{claim_text}\n\n"
        "Analyze the claim from each of the following expert perspectives, in "
        "order, then issue one integrated verdict (true, false, or nei) with "
        "your confidence on a 0.0 to 1.0 scale:\n"
        f"{role_lines}\n\n"
        + _OUTPUT_CONTRACT
    )


REPAIR_INSTRUCTION = (
    "Your previous reply could not be parsed. Answer the task again, responding "
    "with ONLY the fenced JSON block in the requested format."
)


def build_repair_prompt(original_prompt: str) -> str:
    return f"{original_prompt}\n\n{REPAIR_INSTRUCTION}"


# -- providers ----------------------------------------------------------------


class MockCompletionProvider:
    """Scripted provider for deterministic offline runs.

    Resolution order per call: an exact (model_id, prompt fingerprint) entry,
    then ordered substring rules, then the script's default. Rules may script
    failures via {"raise": "timeout"} or {"raise": "provider_error"}. Every
    call is recorded for call-count assertions.
    """

    def __init__(self, script: dict | None = None):
        script = script or {}
        self._responses: dict[str, dict[str, str]] = script.get("responses", {})
        self._rules: list[dict] = list(script.get("rules", []))
        self._default: str | None = script.get("default")
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_script_file(cls, path) -> "MockCompletionProvider":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            script = yaml.safe_load(text)
        else:
            script = json.loads(text)
        return cls(script)

    def call_count(self, model_id: ModelId | None = None) -> int:
        with self._lock:
            if model_id is None:
                return len(self.calls)
            return sum(1 for mid, _ in self.calls if mid == model_id.value)

    def _resolve(self, model_id: str, prompt: str, fingerprint: str):
        table = self._responses.get(model_id, {})
        if fingerprint in table:
            return table[fingerprint]
        for rule in self._rules:
            if rule.get("model_id") not in (None, model_id):
                continue
            needle = rule.get("prompt_contains")
            if needle is not None and needle not in prompt:
                continue
            return rule.get("response")
        return self._default

    def complete(self, profile: ModelProfile, prompt: str) -> str:
        fingerprint = prompt_fingerprint(prompt)
        with self._lock:
            self.calls.append((profile.model_id.value, fingerprint))
        response = self._resolve(profile.model_id.value, prompt, fingerprint)
        if response is None:
            raise ProviderError(
                f"no scripted response for {profile.model_id.value}/{fingerprint}"
            )
        if isinstance(response, dict):
            kind = response.get("raise")
            if kind == "timeout":
                raise CompletionTimeoutError("scripted timeout")
            raise ProviderError("scripted provider error", status=response.get("status"))
        return response


class HttpCompletionProvider:
    """Chat/completions-style HTTP provider with retry and an in-flight cap."""

    def __init__(self, session: requests.Session | None = None):
        self._session = session or requests.Session()
        self._gates: dict[str, threading.Semaphore] = {}
        self._gate_lock = threading.Lock()

    def _gate(self, profile: ModelProfile) -> threading.Semaphore:
        with self._gate_lock:
            gate = self._gates.get(profile.model_id.value)
            if gate is None:
                gate = threading.Semaphore(max(1, profile.max_in_flight))
                self._gates[profile.model_id.value] = gate
            return gate

    def complete(self, profile: ModelProfile, prompt: str) -> str:
        if not profile.endpoint:
            raise ProviderError(f"no endpoint configured for {profile.model_id.value}")
        if not prompt:
            raise ValueError("prompt must be non-empty")
        headers = {"Content-Type": "application/json"}
        if profile.auth_token_env:
            token = os.environ.get(profile.auth_token_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": profile.model_name or profile.model_id.value,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": profile.temperature,
            "max_tokens": profile.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(profile.max_retries):
            if attempt:
                time.sleep((0.5 * 2 ** (attempt - 1)) * (1.0 + random.random() * 0.25))
            try:
                with self._gate(profile):
                    resp = self._session.post(
                        profile.endpoint, json=body, headers=headers, timeout=profile.timeout
                    )
            except requests.Timeout as exc:
                raise CompletionTimeoutError(f"{profile.model_id.value}: {exc}") from exc
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, TypeError, ValueError) as exc:
                    raise ProviderError(f"malformed completion payload: {exc}") from exc
            last_error = ProviderError(
                f"{profile.model_id.value}: HTTP {resp.status_code}", status=resp.status_code
            )
            if resp.status_code not in (429, 500, 502, 503, 504):
                break
        if isinstance(last_error, ProviderError):
            raise last_error
        raise ProviderError(f"{profile.model_id.value}: {last_error}")


def complete(provider, profile: ModelProfile, prompt: str) -> str:
    if not prompt:
        raise ValueError("prompt must be non-empty")
    return provider.complete(profile, prompt)


# -- structured output parsing -------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*\n?(.*?)```", re.DOTALL)


def _candidate_blocks(raw: str) -> list[str]:
    blocks = [m.group(1).strip() for m in _FENCE_RE.finditer(raw)]
    stripped = raw.strip()
    if not blocks and stripped.startswith("{") and stripped.endswith("}"):
        blocks.append(stripped)
    return blocks


def parse_assessment(raw: str, *, force_used_context: bool | None = None) -> ModelAssessment:
    """Parse a completion into a ModelAssessment, or raise ParseFailureError.

    Only complete JSON blocks are considered; the first block with a valid
    label, non-empty evidence and numeric confidence wins. Confidence
    outside [0, 1] is clamped with a warning rather than rejected.
    """
    problems: list[str] = []
    for block in _candidate_blocks(raw or ""):
        try:
            data = json.loads(block)
        except json.JSONDecodeError as exc:
            problems.append(f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(data, dict):
            problems.append("JSON block is not an object")
            continue
        try:
            label = parse_label(data.get("label"))
        except UnrecognizedLabelError as exc:
            problems.append(str(exc))
            continue
        evidence = data.get("evidence")
        if not isinstance(evidence, str) or not evidence.strip():
            problems.append("missing or empty 'evidence'")
            continue
        confidence = data.get("confidence")
        if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
            problems.append("missing or non-numeric 'confidence'")
            continue
        confidence = float(confidence)
        if not 0.0 <= confidence <= 1.0:
            logger.warning("model confidence %s outside [0, 1]; clamping", confidence)
            confidence = min(1.0, max(0.0, confidence))
        used_context = data.get("used_context", False)
        if not isinstance(used_context, bool):
            problems.append("'used_context' must be a boolean")
            continue
        if force_used_context is not None:
            used_context = force_used_context
        return ModelAssessment(
            label=label, evidence=evidence, confidence=confidence, used_context=used_context
        )
    raise ParseFailureError(
        "no parseable JSON assessment in completion"
        + (f" ({'; '.join(problems[:3])})" if problems else "")
    )


def _complete_and_parse(
    provider, profile: ModelProfile, prompt: str, *, force_used_context: bool | None
) -> ModelAssessment:
    raw = complete(provider, profile, prompt)
    try:
        return parse_assessment(raw, force_used_context=force_used_context)
    except ParseFailureError:
        logger.warning("%s: unparseable completion; issuing repair retry", profile.model_id.value)
        repaired = complete(provider, profile, build_repair_prompt(prompt))
        return parse_assessment(repaired, force_used_context=force_used_context)


def model_reasoning(
    provider, profile: ModelProfile, claim_text: str, hits: Sequence[SearchHit]
) -> ModelAssessment:
    """Hybrid context-plus-model evaluation over retrieved hits."""
    if not hits:
        raise ValueError("model_reasoning requires non-empty context")
    prompt = build_reasoning_prompt(claim_text, hits)
    return _complete_and_parse(provider, profile, prompt, force_used_context=None)


def role_based_analysis(
    provider, profile: ModelProfile, claim_text: str, roles: ExpertRoleSet
) -> ModelAssessment:
    """Expert-perspective analysis with no retrieved context; purely parametric."""
    prompt = build_role_prompt(claim_text, roles)
    return _complete_and_parse(provider, profile, prompt, force_used_context=False)
