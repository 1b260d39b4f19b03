"""Core domain types: claims, labels, pipeline results, and verdict reports.

Everything here is immutable after construction and safe to share across
concurrently running pipelines.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

from .errors import UnrecognizedLabelError

PARAMETRIC_REFERENCE = "Parametric Knowledge"
NO_EVIDENCE_REFERENCE = "No evidence"
NEI_DEFAULT_EVIDENCE = "Insufficient information"


class Label(enum.Enum):
    """Closed three-class verdict vocabulary. Serialized form is lowercase."""

    TRUE = "true"
    FALSE = "false"
    NEI = "nei"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.value


def parse_label(raw: str) -> Label:
    """Parse a label string case-insensitively into the canonical form.

    Raises UnrecognizedLabelError for anything outside {true, false, nei};
    callers decide whether an unrecognized label should degrade to NEI.
    """
    if not isinstance(raw, str):
        raise UnrecognizedLabelError(repr(raw))
    folded = raw.strip().lower()
    for label in Label:
        if folded == label.value:
            return label
    raise UnrecognizedLabelError(raw)


class PipelineId(enum.Enum):
    RAG1 = "rag1"
    RAG2 = "rag2"
    FACTCHECK = "factcheck"


class RouteTag(enum.Enum):
    """Trace of which processing branch produced a result."""

    TIER1_DIRECT = "tier1_direct"
    TIER2_HYBRID = "tier2_hybrid"
    TIER3_ROLEBASED = "tier3_rolebased"
    EXTERNAL_MATCH = "external_match"
    LLM_FALLBACK = "llm_fallback"


_RAG_ROUTES = {RouteTag.TIER1_DIRECT, RouteTag.TIER2_HYBRID, RouteTag.TIER3_ROLEBASED}
_FACTCHECK_ROUTES = {RouteTag.EXTERNAL_MATCH, RouteTag.LLM_FALLBACK}


class SourceKind(enum.Enum):
    RETRIEVED = "retrieved"
    EXTERNAL_FACTCHECK = "external_factcheck"
    PARAMETRIC = "parametric"


class DecisionRule(enum.Enum):
    FACTCHECK_PRIORITY = "factcheck_priority"
    ARGMAX_CONFIDENCE = "argmax_confidence"
    NEI_DEFAULT = "nei_default"


@dataclass(frozen=True)
class Claim:
    """A statement under verification."""

    id: str
    text: str
    posted_at: str | None = None
    author: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("claim text must be non-empty")


@dataclass(frozen=True)
class SourceAttribution:
    """Where a result's evidence came from.

    kind=retrieved carries a document id or origin URL, kind=external_factcheck
    carries the fact-check URL, and kind=parametric always carries the literal
    "Parametric Knowledge" (with the single exception of the fixed "No evidence"
    sentinel emitted by the NEI-default verdict branch).
    """

    kind: SourceKind
    reference: str

    def __post_init__(self):
        if not isinstance(self.kind, SourceKind):
            object.__setattr__(self, "kind", SourceKind(self.kind))
        if not self.reference:
            raise ValueError("source reference must be non-empty")
        if self.kind is SourceKind.PARAMETRIC and self.reference not in (
            PARAMETRIC_REFERENCE,
            NO_EVIDENCE_REFERENCE,
        ):
            raise ValueError(
                f"parametric source must reference {PARAMETRIC_REFERENCE!r}, "
                f"got {self.reference!r}"
            )

    @classmethod
    def parametric(cls) -> "SourceAttribution":
        return cls(SourceKind.PARAMETRIC, PARAMETRIC_REFERENCE)

    @classmethod
    def no_evidence(cls) -> "SourceAttribution":
        return cls(SourceKind.PARAMETRIC, NO_EVIDENCE_REFERENCE)

    @classmethod
    def retrieved(cls, reference: str) -> "SourceAttribution":
        return cls(SourceKind.RETRIEVED, reference)

    @classmethod
    def external(cls, url: str) -> "SourceAttribution":
        return cls(SourceKind.EXTERNAL_FACTCHECK, url)

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "reference": self.reference}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SourceAttribution":
        return cls(SourceKind(data["kind"]), data["reference"])


@dataclass(frozen=True)
class PipelineResult:
    """One pipeline's verdict for a claim.

    Construction enforces the cross-field invariants: confidence in [0, 1],
    non-empty evidence whenever the result asserts anything (label != nei or
    confidence > 0), route tags consistent with the producing pipeline, and
    external fact-check attribution only on the fact-check pipeline's
    external-match route.
    """

    label: Label
    evidence: str
    source: SourceAttribution
    confidence: float
    pipeline_id: PipelineId
    route: RouteTag

    _validate_evidence = True

    def __post_init__(self):
        if isinstance(self.label, str):
            object.__setattr__(self, "label", parse_label(self.label))
        if not isinstance(self.confidence, (int, float)) or isinstance(self.confidence, bool):
            raise ValueError("confidence must be a real number")
        object.__setattr__(self, "confidence", float(self.confidence))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self._validate_evidence and not self.evidence:
            if self.label is not Label.NEI or self.confidence > 0:
                raise ValueError("evidence required when label != nei or confidence > 0")
        if self.pipeline_id in (PipelineId.RAG1, PipelineId.RAG2):
            if self.route not in _RAG_ROUTES:
                raise ValueError(f"RAG results must carry a tier route, got {self.route}")
        elif self.route not in _FACTCHECK_ROUTES:
            raise ValueError("fact-check results must carry external_match or llm_fallback")
        if self.source.kind is SourceKind.EXTERNAL_FACTCHECK:
            if self.route is not RouteTag.EXTERNAL_MATCH:
                raise ValueError("external_factcheck attribution requires the external_match route")
        if self.route is RouteTag.EXTERNAL_MATCH and self.source.kind is not SourceKind.EXTERNAL_FACTCHECK:
            raise ValueError("external_match results must carry external_factcheck attribution")

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label.value,
            "evidence": self.evidence,
            "source": self.source.to_dict(),
            "confidence": self.confidence,
            "pipeline_id": self.pipeline_id.value,
            "route": self.route.value,
        }


def error_placeholder(pipeline_id: PipelineId, message: str, route: RouteTag) -> PipelineResult:
    """Stand-in result for an errored or timed-out pipeline.

    Verdict integration assumes three results exist, so failures are folded
    into a zero-confidence NEI record instead of propagating.
    """
    return PipelineResult(
        label=Label.NEI,
        evidence=f"<pipeline error: {message}>",
        source=SourceAttribution.parametric(),
        confidence=0.0,
        pipeline_id=pipeline_id,
        route=route,
    )


def disabled_placeholder(pipeline_id: PipelineId) -> PipelineResult:
    """Zero-confidence record for a pipeline excluded by an ablation variant."""
    route = RouteTag.LLM_FALLBACK if pipeline_id is PipelineId.FACTCHECK else RouteTag.TIER3_ROLEBASED
    return PipelineResult(
        label=Label.NEI,
        evidence="<pipeline disabled>",
        source=SourceAttribution.parametric(),
        confidence=0.0,
        pipeline_id=pipeline_id,
        route=route,
    )


@dataclass(frozen=True)
class VerdictReport:
    """The integrated final output with attribution and route trace.

    Always embeds exactly three contributing results (rag1, rag2, factcheck);
    errored pipelines contribute their placeholder records.
    """

    claim_id: str
    label: Label
    evidence: str
    source: SourceAttribution
    confidence: float
    contributing: tuple[PipelineResult, ...]
    decision_rule: DecisionRule

    def __post_init__(self):
        if len(self.contributing) != 3:
            raise ValueError("a verdict embeds exactly three contributing results")
        object.__setattr__(self, "contributing", tuple(self.contributing))

    def to_dict(self) -> dict[str, Any]:
        """Canonical serialization; field names are part of the wire contract."""
        return {
            "claim_id": self.claim_id,
            "label": self.label.value,
            "evidence": self.evidence,
            "source": self.source.to_dict(),
            "confidence": self.confidence,
            "contributing": [r.to_dict() for r in self.contributing],
            "decision_rule": self.decision_rule.value,
        }

    def to_json(self, *, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)
