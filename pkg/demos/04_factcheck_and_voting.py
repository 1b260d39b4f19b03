#!/usr/bin/env python3
"""The fact-check pipeline and verdict integration.

An external match is authoritative: it carries the publisher's rating at
confidence 1.0 and wins the vote outright. Without a match the pipeline
falls back to role-based model analysis, and the verdict engine picks the
highest-confidence pipeline (ties: factcheck > rag1 > rag2). When every
pipeline is silent the verdict is the fixed NEI record, not a guess.
"""

import json

from claimcheck import (
    Claim,
    ExpertRoleSet,
    HttpFactCheckClient,
    Label,
    ModelId,
    ModelProfile,
    PipelineId,
    PipelineResult,
    RatingMap,
    RouteTag,
    SourceAttribution,
    factcheck_verify,
    integrate,
    normalize,
)
from claimcheck.testing import MockFactCheckServer, factcheck_payload


class ScriptedModel:
    def complete(self, profile, prompt):
        payload = {"label": "false", "evidence": "panel analysis finds the claim implausible",
                   "confidence": 0.55, "used_context": False}
        return "```json\n" + json.dumps(payload) + "\n```"


def rag_result(pid, label, confidence):
    return normalize(
        PipelineResult(
            label=label,
            evidence=f"{pid.value} evidence",
            source=SourceAttribution.parametric(),
            confidence=confidence,
            pipeline_id=pid,
            route=RouteTag.TIER2_HYBRID,
        )
    )


def main():
    claim_hit = Claim(id="c1", text="The treasury burned 2 billion in reserves overnight.")
    claim_miss = Claim(id="c2", text="A regional lender quietly updated its fee schedule.")

    store = {claim_hit.text: factcheck_payload(claim_hit.text, "Pants on Fire!",
                                               publisher="Example Fact Desk",
                                               url="https://factcheck.example/reserves")}
    analyzer = ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER)

    print("rating map (word-boundary phrase rules, first match wins):")
    ratings = ["Pants on Fire!", "Mostly True", "Half Right", "untrue", "Incorrect"]
    rating_map = RatingMap.default_map()
    for rating in ratings:
        print(f"  {rating!r:<18} -> {rating_map.apply(rating).value}")

    with MockFactCheckServer(store) as server:
        client = HttpFactCheckClient(server.url, api_key="demo-key")

        print("\nexternal match (authoritative):")
        r3_hit = factcheck_verify(claim_hit, client, ScriptedModel(), analyzer, ExpertRoleSet())
        print(f"  label={r3_hit.label.value} confidence={r3_hit.confidence} "
              f"route={r3_hit.route.value}")
        print(f"  evidence: {r3_hit.evidence}")

        print("\nno match -> role-based fallback:")
        r3_miss = factcheck_verify(claim_miss, client, ScriptedModel(), analyzer, ExpertRoleSet())
        print(f"  label={r3_miss.label.value} confidence={r3_miss.confidence} "
              f"route={r3_miss.route.value} source={r3_miss.source.reference}")

    print("\nverdict integration:")
    r1 = rag_result(PipelineId.RAG1, Label.TRUE, 0.72)
    r2 = rag_result(PipelineId.RAG2, Label.NEI, 0.31)

    verdict = integrate(claim_hit.id, r1, r2, normalize(r3_hit))
    print(f"  with external match : {verdict.label.value} via {verdict.decision_rule.value}")

    verdict = integrate(claim_miss.id, r1, r2, normalize(r3_miss))
    print(f"  argmax of (0.72, 0.31, 0.55): {verdict.label.value} "
          f"@ {verdict.confidence} via {verdict.decision_rule.value}")

    silent = [rag_result(PipelineId.RAG1, Label.NEI, 0.0), rag_result(PipelineId.RAG2, Label.NEI, 0.0)]
    r3_silent = normalize(
        PipelineResult(
            label=Label.NEI, evidence="", source=SourceAttribution.parametric(),
            confidence=0.0, pipeline_id=PipelineId.FACTCHECK, route=RouteTag.LLM_FALLBACK,
        )
    )
    verdict = integrate("c3", silent[0], silent[1], r3_silent)
    print(f"  all pipelines silent: label={verdict.label.value!r} "
          f"evidence={verdict.evidence!r} source={verdict.source.reference!r} "
          f"confidence={verdict.confidence}")

    print("\ncanonical verdict JSON:")
    print("  " + verdict.to_json())


if __name__ == "__main__":
    main()
