"""Results normalization and confidence-based verdict integration.

Integration is a selection, not an average: an external fact-check result
wins outright; otherwise the highest-confidence result wins, with ties
broken by the fixed priority factcheck > rag1 > rag2; and when every
pipeline reports zero confidence the engine emits the fixed NEI record
instead of forcing a classification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import UnrecognizedLabelError
from .model import (
    NEI_DEFAULT_EVIDENCE,
    DecisionRule,
    Label,
    PipelineId,
    PipelineResult,
    RouteTag,
    SourceAttribution,
    SourceKind,
    VerdictReport,
    parse_label,
)

logger = logging.getLogger(__name__)

CONFIDENCE_DECIMALS = 4

# Tie-break priority when confidences are equal (lower rank wins).
_PRIORITY = {PipelineId.FACTCHECK: 0, PipelineId.RAG1: 1, PipelineId.RAG2: 2}


@dataclass(frozen=True)
class NormalizedResult(PipelineResult):
    """A PipelineResult with canonical label and clamped, rounded confidence.

    `original_label` records the raw label when normalization had to map an
    unrecognized one to NEI. Normalization is total, so this type does not
    re-enforce the evidence invariant on foreign inputs.
    """

    original_label: str | None = None

    _validate_evidence = False

    def to_dict(self) -> dict[str, Any]:
        data = super().to_dict()
        if self.original_label is not None:
            data["original_label"] = self.original_label
        return data


def _normalize_confidence(confidence) -> float:
    try:
        value = float(confidence)
    except (TypeError, ValueError):
        value = 0.0
    return round(min(1.0, max(0.0, value)), CONFIDENCE_DECIMALS)


def normalize(result: PipelineResult | Mapping[str, Any]) -> NormalizedResult:
    """Normalize one pipeline result; total and idempotent.

    Accepts in-process PipelineResults or raw mappings (e.g. replayed trace
    records). Labels fold to canonical lowercase; an unrecognized raw label
    maps to NEI with the original preserved in the annotation. Confidence is
    clamped to [0, 1] and rounded to 4 decimal places.
    """
    if isinstance(result, Mapping):
        raw_label = result.get("label")
        original = None
        try:
            label = parse_label(raw_label)
        except UnrecognizedLabelError:
            label = Label.NEI
            original = str(raw_label)
            logger.warning("normalizing unrecognized label %r to nei", raw_label)
        source = result.get("source")
        if isinstance(source, Mapping):
            source = SourceAttribution(SourceKind(source["kind"]), source["reference"])
        return NormalizedResult(
            label=label,
            evidence=str(result.get("evidence", "")),
            source=source,
            confidence=_normalize_confidence(result.get("confidence")),
            pipeline_id=PipelineId(result["pipeline_id"]),
            route=RouteTag(result["route"]),
            original_label=original,
        )

    return NormalizedResult(
        label=result.label,
        evidence=result.evidence,
        source=result.source,
        confidence=_normalize_confidence(result.confidence),
        pipeline_id=result.pipeline_id,
        route=result.route,
        original_label=getattr(result, "original_label", None),
    )


def nei_default_report(claim_id: str, contributing: tuple) -> VerdictReport:
    """The fixed all-pipelines-silent verdict."""
    return VerdictReport(
        claim_id=claim_id,
        label=Label.NEI,
        evidence=NEI_DEFAULT_EVIDENCE,
        source=SourceAttribution.no_evidence(),
        confidence=0.0,
        contributing=contributing,
        decision_rule=DecisionRule.NEI_DEFAULT,
    )


def integrate(
    claim_id: str,
    rag1: NormalizedResult,
    rag2: NormalizedResult,
    factcheck: NormalizedResult,
) -> VerdictReport:
    """Combine three normalized results into the final verdict.

    Branches, in order: external fact-check priority; the all-zero-confidence
    NEI default; argmax confidence with the fixed priority tie-break.
    """
    if rag1.pipeline_id is not PipelineId.RAG1:
        raise ValueError(f"first result must come from rag1, got {rag1.pipeline_id}")
    if rag2.pipeline_id is not PipelineId.RAG2:
        raise ValueError(f"second result must come from rag2, got {rag2.pipeline_id}")
    if factcheck.pipeline_id is not PipelineId.FACTCHECK:
        raise ValueError(f"third result must come from factcheck, got {factcheck.pipeline_id}")

    contributing = (rag1, rag2, factcheck)

    if factcheck.source.kind is SourceKind.EXTERNAL_FACTCHECK:
        winner, rule = factcheck, DecisionRule.FACTCHECK_PRIORITY
    elif all(r.confidence == 0.0 for r in contributing):
        return nei_default_report(claim_id, contributing)
    else:
        winner = max(contributing, key=lambda r: (r.confidence, -_PRIORITY[r.pipeline_id]))
        rule = DecisionRule.ARGMAX_CONFIDENCE

    return VerdictReport(
        claim_id=claim_id,
        label=winner.label,
        evidence=winner.evidence,
        source=winner.source,
        confidence=winner.confidence,
        contributing=contributing,
        decision_rule=rule,
    )
