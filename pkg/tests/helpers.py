"""Shared test helpers: canned providers, response builders, corpus factories."""

from __future__ import annotations

import json

import numpy as np

from claimcheck import EvidenceDocument, Label, SearchHit


def fenced(label: str, confidence: float, *, evidence: str = "because reasons", used_context=None) -> str:
    """A well-formed fenced-JSON model response."""
    payload = {"label": label, "evidence": evidence, "confidence": confidence}
    if used_context is not None:
        payload["used_context"] = used_context
    return "```json\n" + json.dumps(payload) + "\n```"


class FunctionProvider:
    """Completion provider driven by a plain callable; records every call."""

    def __init__(self, fn):
        self.fn = fn
        self.calls: list[tuple[str, str]] = []

    def complete(self, profile, prompt):
        self.calls.append((profile.model_id.value, prompt))
        return self.fn(profile, prompt)

    def call_count(self, model_id=None) -> int:
        if model_id is None:
            return len(self.calls)
        return sum(1 for mid, _ in self.calls if mid == model_id.value)


class FixedHitsIndex:
    """Index stub returning preset hits regardless of the query."""

    def __init__(self, hits):
        self.hits = list(hits)

    def search(self, query, k, nprobe=8):
        return self.hits[:k]


def doc(
    doc_id: str = "d1",
    *,
    claim_text: str = "stored claim",
    evidence_text: str = "stored evidence sentence",
    label: Label = Label.TRUE,
    origin: str = "https://example.org/source",
) -> EvidenceDocument:
    return EvidenceDocument(
        doc_id=doc_id,
        claim_text=claim_text,
        evidence_text=evidence_text,
        label=label,
        origin=origin,
    )


def hit(score: float, document: EvidenceDocument | None = None) -> SearchHit:
    return SearchHit(document=document or doc(), score=score)


def random_unit_vectors(n: int, d: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((n, d))
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def write_corpus(path, records: list[dict]) -> str:
    path.write_text(json.dumps(records, indent=1), encoding="utf-8")
    return str(path)


def corpus_record(
    claim: str,
    label: str = "true",
    *,
    evidence: list[str] | None = None,
    sources: list[str] | None = None,
    **extra,
) -> dict:
    record = {
        "claim": claim,
        "label": label,
        "evidence": ["supporting sentence"] if evidence is None else evidence,
        "sources": ["https://example.org/a"] if sources is None else sources,
    }
    record.update(extra)
    return record
