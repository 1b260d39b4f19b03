"""Retrieval-augmented verification with three-tier similarity routing.

The router is total and exclusive over the retrieval score s_max:

  no hits                      -> role-based analysis, parametric source
  s_max >= theta_high (tier 1) -> answer read directly from the best hit's
                                  stored metadata; no model call at all
  theta_med <= s_max < theta_high (tier 2) -> model reasoning over the
                                  combined retrieved context; confidence is
                                  the mean of s_max and the model's own
  s_max < theta_med (tier 3)   -> role-based analysis, parametric source

Tier 1 uses an inclusive >= comparison at theta_high; the comparison
helpers on TierThresholds are the single place that encodes boundary
semantics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import (
    CompletionTimeoutError,
    EmptyTextError,
    ParseFailureError,
    ProviderError,
    RemoteUnavailableError,
    UnrecognizedLabelError,
)
from .gateway import (
    DEFAULT_EXPERT_ROLES,
    PIPELINE_FOR_MODEL,
    ExpertRoleSet,
    ModelProfile,
    model_reasoning,
    role_based_analysis,
)
from .index import DEFAULT_K, DEFAULT_NPROBE, SearchHit
from .model import (
    Claim,
    PipelineResult,
    RouteTag,
    SourceAttribution,
    error_placeholder,
    parse_label,
)

logger = logging.getLogger(__name__)

_GATEWAY_ERRORS = (ParseFailureError, CompletionTimeoutError, ProviderError)


@dataclass(frozen=True)
class TierThresholds:
    """Similarity cut-offs separating the three processing tiers."""

    theta_high: float = 0.6
    theta_med: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.theta_med <= self.theta_high <= 1.0:
            raise ValueError(
                f"thresholds must satisfy 0 <= theta_med <= theta_high <= 1, "
                f"got ({self.theta_high}, {self.theta_med})"
            )

    def is_high(self, score: float) -> bool:
        return score >= self.theta_high

    def is_medium(self, score: float) -> bool:
        return self.theta_med <= score < self.theta_high


@dataclass(frozen=True)
class RagConfig:
    """Per-pipeline configuration: thresholds, retrieval depth, model, roles."""

    profile: ModelProfile
    thresholds: TierThresholds = field(default_factory=TierThresholds)
    k: int = DEFAULT_K
    nprobe: int = DEFAULT_NPROBE
    roles: ExpertRoleSet = field(default_factory=ExpertRoleSet)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def verify(claim: Claim, index, embedder, provider, config: RagConfig, audit=None) -> PipelineResult:
    """Run one RAG pipeline over a claim and produce its result.

    Gateway failures in the model-backed tiers collapse into the standard
    error placeholder; tier 1 never touches a model. `audit`, when given,
    receives one trace dict per call.
    """
    pipeline_id = PIPELINE_FOR_MODEL[config.profile.model_id]
    trace: dict = {"claim_id": claim.id, "pipeline_id": pipeline_id.value}

    try:
        query = embedder.embed(claim.text)
    except (EmptyTextError, RemoteUnavailableError) as exc:
        logger.warning("%s: embedding failed: %s", pipeline_id.value, exc)
        return _audited(
            error_placeholder(pipeline_id, f"embedding failed: {exc}", RouteTag.TIER3_ROLEBASED),
            trace,
            audit,
        )

    hits: list[SearchHit] = index.search(query, k=config.k, nprobe=config.nprobe)
    trace["doc_ids"] = [h.document.doc_id for h in hits]

    if not hits:
        trace["s_max"] = None
        return _audited(_role_based(claim, provider, config, pipeline_id), trace, audit)

    s_max = hits[0].score
    d_best = hits[0].document
    trace["s_max"] = s_max

    if config.thresholds.is_high(s_max):
        try:
            label = parse_label(d_best.label.value if hasattr(d_best.label, "value") else d_best.label)
        except UnrecognizedLabelError:
            # Stored label escaped canonicalization; never emit it raw.
            # Degrade to the hybrid tier as if s_max were in the medium band.
            logger.warning(
                "document %s carries unrecognized label; degrading to tier 2", d_best.doc_id
            )
            return _audited(
                _hybrid(claim, provider, config, pipeline_id, hits, s_max, d_best), trace, audit
            )
        evidence = d_best.evidence_text or d_best.claim_text
        return _audited(
            PipelineResult(
                label=label,
                evidence=evidence,
                source=SourceAttribution.retrieved(d_best.origin),
                confidence=_clamp01(s_max),
                pipeline_id=pipeline_id,
                route=RouteTag.TIER1_DIRECT,
            ),
            trace,
            audit,
        )

    if config.thresholds.is_medium(s_max):
        return _audited(
            _hybrid(claim, provider, config, pipeline_id, hits, s_max, d_best), trace, audit
        )

    return _audited(_role_based(claim, provider, config, pipeline_id), trace, audit)


def _hybrid(claim, provider, config, pipeline_id, hits, s_max, d_best) -> PipelineResult:
    try:
        assessment = model_reasoning(provider, config.profile, claim.text, hits)
    except _GATEWAY_ERRORS as exc:
        logger.warning("%s: model reasoning failed: %s", pipeline_id.value, exc)
        return error_placeholder(pipeline_id, f"model reasoning failed: {exc}", RouteTag.TIER2_HYBRID)
    if assessment.used_context:
        source = SourceAttribution.retrieved(d_best.origin)
    else:
        source = SourceAttribution.parametric()
    confidence = (_clamp01(s_max) + assessment.confidence) / 2.0
    return PipelineResult(
        label=assessment.label,
        evidence=assessment.evidence,
        source=source,
        confidence=confidence,
        pipeline_id=pipeline_id,
        route=RouteTag.TIER2_HYBRID,
    )


def _role_based(claim, provider, config, pipeline_id) -> PipelineResult:
    try:
        assessment = role_based_analysis(provider, config.profile, claim.text, config.roles)
    except _GATEWAY_ERRORS as exc:
        logger.warning("%s: role-based analysis failed: %s", pipeline_id.value, exc)
        return error_placeholder(
            pipeline_id, f"role-based analysis failed: {exc}", RouteTag.TIER3_ROLEBASED
        )
    return PipelineResult(
        label=assessment.label,
        evidence=assessment.evidence,
        source=SourceAttribution.parametric(),
        confidence=assessment.confidence,
        pipeline_id=pipeline_id,
        route=RouteTag.TIER3_ROLEBASED,
    )


def _audited(result: PipelineResult, trace: dict, audit) -> PipelineResult:
    if audit is not None:
        trace["route"] = result.route.value
        trace["label"] = result.label.value
        trace["confidence"] = result.confidence
        audit(trace)
    return result
