#!/usr/bin/env python3
"""Three-tier similarity routing inside a retrieval pipeline.

A claim's fate depends on the best retrieval score s_max:
  s_max >= 0.6        answer read straight from the stored record (no model)
  0.4 <= s_max < 0.6  model reasons over the retrieved context; confidence
                      is the mean of s_max and the model's own
  s_max < 0.4         role-based analysis from parametric knowledge only

This demo drives the router with a stub index (so s_max is exact) and a
scripted model, then walks s_max across both boundaries.
"""

import json

from claimcheck import (
    Claim,
    EvidenceDocument,
    HashedBagOfWordsEmbedder,
    Label,
    ModelId,
    ModelProfile,
    RagConfig,
    SearchHit,
    rag_verify,
)


class FixedIndex:
    """Search stub returning one preset hit (or none)."""

    def __init__(self, hits):
        self.hits = hits

    def search(self, query, k, nprobe=8):
        return self.hits[:k]


class ScriptedModel:
    """Completion provider with canned answers; counts calls per prompt kind."""

    def __init__(self):
        self.reasoning_calls = 0
        self.role_calls = 0

    def complete(self, profile, prompt):
        if "Retrieved context:" in prompt:
            self.reasoning_calls += 1
            payload = {"label": "false", "evidence": "the retrieved filings contradict the claim",
                       "confidence": 0.9, "used_context": True}
        else:
            self.role_calls += 1
            payload = {"label": "nei", "evidence": "expert panels find no decisive signal",
                       "confidence": 0.3, "used_context": False}
        return "```json\n" + json.dumps(payload) + "\n```"


def main():
    stored = EvidenceDocument(
        doc_id="kb-001",
        claim_text="Aurora Bank reported record profits in 2023",
        evidence_text="Aurora Bank's audited filings show record 2023 profits.",
        label=Label.TRUE,
        origin="https://news.example/aurora/profits",
    )
    claim = Claim(id="demo", text="Aurora Bank reported record profits in 2023")
    embedder = HashedBagOfWordsEmbedder(384)
    config = RagConfig(profile=ModelProfile(model_id=ModelId.RAG_MODEL_1))

    print(f"{'s_max':>6}  {'route':<16} {'label':<6} {'conf':>6}  source")
    for s_max in (0.95, 0.61, 0.60, 0.59, 0.45, 0.40, 0.39, 0.10, None):
        model = ScriptedModel()
        hits = [] if s_max is None else [SearchHit(document=stored, score=s_max)]
        result = rag_verify(claim, FixedIndex(hits), embedder, model, config)
        shown = "k=0 " if s_max is None else f"{s_max:>5.2f}"
        print(f"{shown:>6}  {result.route.value:<16} {result.label.value:<6} "
              f"{result.confidence:>6.3f}  {result.source.reference}")

    print("\ntier-2 confidence is the mean of s_max and the model's confidence:")
    for s_max in (0.40, 0.50, 0.59):
        model = ScriptedModel()
        result = rag_verify(
            claim, FixedIndex([SearchHit(document=stored, score=s_max)]), embedder, model, config
        )
        print(f"  ({s_max:.2f} + 0.90) / 2 = {result.confidence:.3f}")

    model = ScriptedModel()
    rag_verify(claim, FixedIndex([SearchHit(document=stored, score=0.9)]), embedder, model, config)
    print(f"\ntier-1 purity: model calls during a tier-1 claim = "
          f"{model.reasoning_calls + model.role_calls}")


if __name__ == "__main__":
    main()
