#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus, mock provider script, and the
frozen golden metrics file.

The 20 claim families come in three closeness profiles so the bundled
evaluation exercises every retrieval tier: families 0-7 are near-paraphrases
(direct-extraction tier), 8-13 share entity and event only (hybrid tier),
and 14-19 share just the entity across structurally unrelated sentences
(role-based tier). Everything is arithmetic on the family index, so reruns
are byte-stable. Run from the repository root:

    python3 scripts/gen_bundled_data.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "claimcheck" / "data"
GOLDEN = ROOT / "tests" / "data" / "golden_metrics.json"

ENTITIES = [
    "Aurora Bank", "Zenith Motors", "Borealis Fund", "Cascade Energy",
    "Meridian Foods", "Atlas Semiconductors", "Harbor Logistics", "Vertex Pharma",
    "Quantum Textiles", "Summit Airlines", "Pioneer Mining", "Crescent Media",
    "Juniper Retail", "Falcon Aerospace", "Marble Insurance", "Orchid Biotech",
    "Redwood Timber", "Glacier Shipping", "Ember Utilities", "Lantern Telecom",
]

EVENTS = [
    "quarterly profit", "vehicle recall", "asset freeze", "pipeline contract",
    "export license", "factory expansion", "fleet upgrade", "drug approval",
    "supply agreement", "route expansion", "ore discovery", "subscriber growth",
    "store closures", "defense order", "premium hike", "trial results",
    "harvest yield", "port acquisition", "rate request", "spectrum purchase",
]

LABELS = ("true", "false", "nei")

# Medium families (8-13): members share the entity, the event, and the year,
# wrapped in family-specific scaffolding so cross-family overlap stays low.
MEDIUM_TEMPLATES = [
    (
        "{E} secured a {V} valued at {amount} million dollars in {year}.",
        "Critics allege {E} fabricated its {V} numbers during {year}.",
        "Whether the {E} {V} continues past {year} remains unclear.",
    ),
    (
        "{E} announced that its {V} reached {amount} million dollars in {year}.",
        "Watchdogs accuse {E} of inflating {V} results throughout {year}.",
        "Nobody knows if the {E} {V} pace will hold into {year}.",
    ),
    (
        "{E} confirmed the {V} added {amount} million dollars during {year}.",
        "Reports suggest {E} misrepresented {V} totals for {year}.",
        "Observers still debate how long the {E} {V} can last beyond {year}.",
    ),
    (
        "{E} posted a {V} of {amount} million dollars for {year}.",
        "Insiders claim {E} overstated the {V} midway through {year}.",
        "It is an open question if {E} revisits the {V} terms in {year}.",
    ),
    (
        "{E} recorded the {V} at {amount} million dollars across {year}.",
        "Auditors say {E} distorted {V} entries late in {year}.",
        "Few can tell whether the {V} benefits {E} beyond {year}.",
    ),
    (
        "{E} registered a {V} totaling {amount} million dollars over {year}.",
        "Petitions argue {E} falsified the {V} filings from {year}.",
        "Speculation persists on {E} renegotiating its {V} before {year} ends.",
    ),
]

# Structurally unrelated sentence triples for the loose families (14-19);
# members share only the entity name.
LOOSE_TEMPLATES = [
    (
        "The {V} lifted {E} shares by four percent on heavy volume.",
        "A viral post claims {E} secretly funds offshore shell ventures.",
        "Leadership changes at {E} remain the subject of unconfirmed rumors.",
    ),
    (
        "{E} finished its {V} ahead of schedule, board minutes show.",
        "Screenshots allege that {E} falsified safety inspection records.",
        "Whether {E} will relocate headquarters is still an open question.",
    ),
    (
        "Union delegates ratified the {E} {V} without objection.",
        "An anonymous blog accuses {E} of bribing municipal officials.",
        "Speculation continues over possible layoffs at {E}.",
    ),
    (
        "Customs data list the {E} {V} among the largest this decade.",
        "Chain messages assert {E} laundered customer deposits abroad.",
        "Nobody has verified the succession plans circulating about {E}.",
    ),
    (
        "Insurers settled the {E} {V} dispute out of court.",
        "A forged memo purports to show {E} hiding toxic liabilities.",
        "Analysts are divided on what the next move from {E} could be.",
    ),
    (
        "Parliament approved the {E} {V} by a wide margin.",
        "Posts circulating online say {E} staged its own audit.",
        "It is unclear whether {E} intends to contest the draft ruling.",
    ),
]


def family_profile(f: int) -> str:
    if f < 8:
        return "tier1"
    if f < 14:
        return "tier2"
    return "tier3"


def claims_for_family(f: int) -> dict[str, str]:
    entity, event = ENTITIES[f], EVENTS[f]
    year = 2020 + (f % 5)
    amount = 10 + 7 * f
    profile = family_profile(f)
    if profile == "tier1":
        return {
            "true": f"{entity} reported a {event} worth {amount} million dollars in {year}.",
            "false": f"{entity} reported a {event} worth {amount * 3} million dollars in {year}.",
            "nei": f"{entity} may restate the {event} of {amount} million dollars reported in {year}.",
        }
    if profile == "tier2":
        template = MEDIUM_TEMPLATES[f - 8]
    else:
        template = LOOSE_TEMPLATES[f - 14]
    return {
        label: template[i].format(E=entity, V=event, amount=amount, year=year)
        for i, label in enumerate(LABELS)
    }


def evidence_sentences(f: int, label: str) -> list[str]:
    entity, event = ENTITIES[f], EVENTS[f]
    count = (f + LABELS.index(label)) % 3 + 1
    stems = [
        f"{entity} filings describe the {event} in detail.",
        f"Regulators commented on the {entity} {event} during {2020 + (f % 5)}.",
        f"Independent auditors reviewed the {event} figures released by {entity}.",
    ]
    return stems[:count]


def build_corpus() -> list[dict]:
    records = []
    for f in range(len(ENTITIES)):
        family_claims = claims_for_family(f)
        slug = ENTITIES[f].split()[0].lower()
        for label in LABELS:
            records.append(
                {
                    "id": f"syn-{f:02d}-{label}",
                    "claim": family_claims[label],
                    "label": label.upper() if f % 4 == 0 else label,  # mixed-case raw labels
                    "evidence": evidence_sentences(f, label),
                    "sources": [f"https://news.example/{slug}/{label}"],
                    "author": f"desk-{f % 3}",
                    "date": f"{2020 + (f % 5)}-0{1 + (f % 9)}-15",
                }
            )
    return records


def check_similarity_bands(corpus: list[dict]) -> None:
    """Regeneration guard: each profile must land in its similarity band."""
    import numpy as np

    from claimcheck import HashedBagOfWordsEmbedder

    emb = HashedBagOfWordsEmbedder(384)
    vecs = {r["id"]: emb.embed(r["claim"]) for r in corpus}
    for record in corpus:
        f = int(record["id"].split("-")[1])
        profile = family_profile(f)
        sibling_sims, other_sims = [], []
        for peer in corpus:
            if peer["id"] == record["id"]:
                continue
            sim = float(np.dot(vecs[record["id"]], vecs[peer["id"]]))
            peer_family = int(peer["id"].split("-")[1])
            (sibling_sims if peer_family == f else other_sims).append(sim)
        if profile == "tier1":
            assert max(sibling_sims) >= 0.63, (record["id"], max(sibling_sims))
        elif profile == "tier2":
            best = max(sibling_sims)
            assert 0.405 <= best <= 0.585, (record["id"], best)
            assert max(other_sims) < 0.585, (record["id"], max(other_sims))
        else:
            assert max(sibling_sims + other_sims) < 0.37, (
                record["id"],
                max(sibling_sims + other_sims),
            )


def fenced(label: str, confidence: float, evidence: str, used_context: bool) -> str:
    payload = {
        "label": label,
        "evidence": evidence,
        "confidence": round(confidence, 2),
        "used_context": used_context,
    }
    return "```json\n" + json.dumps(payload) + "\n```"


def build_mock_script(corpus: list[dict]) -> dict:
    rules = []
    for f, entity in enumerate(ENTITIES):
        rules.append(
            {
                "model_id": "rag_model_1",
                "prompt_contains": entity,
                "response": fenced(
                    LABELS[f % 3],
                    0.5 + (f % 5) * 0.08,
                    f"Assessment of the {entity} claim from available reporting.",
                    f % 2 == 0,
                ),
            }
        )
        rules.append(
            {
                "model_id": "rag_model_2",
                "prompt_contains": entity,
                "response": fenced(
                    LABELS[(f + 1) % 3],
                    0.35 + (f % 4) * 0.1,
                    f"Cross-checked view on the {entity} claim.",
                    True,
                ),
            }
        )
        rules.append(
            {
                "model_id": "factcheck_analyzer",
                "prompt_contains": entity,
                "response": fenced(
                    LABELS[(f + 2) % 3],
                    0.45 + (f % 3) * 0.12,
                    f"Expert-panel style reading of the {entity} claim.",
                    False,
                ),
            }
        )
    model_script = {
        "rules": rules,
        "default": fenced("nei", 0.2, "No scripted opinion for this claim.", False),
    }

    rating_for = {"true": "Mostly True", "false": "Pants on Fire!", "nei": "Unproven"}
    matches = {}
    for record in corpus:
        family = int(record["id"].split("-")[1])
        if family % 5 != 0:
            continue
        label = record["id"].rsplit("-", 1)[1]
        slug = record["claim"].split()[0].lower()
        matches[record["claim"]] = {
            "claims": [
                {
                    "text": record["claim"],
                    "claimReview": [
                        {
                            "textualRating": rating_for[label],
                            "publisher": {"name": "Example Fact Desk"},
                            "url": f"https://factcheck.example/{slug}/{label}",
                            "reviewDate": record["date"],
                        }
                    ],
                }
            ]
        }
    return {"model": model_script, "factcheck": {"matches": matches, "default": {}}}


def regenerate_golden() -> dict:
    from claimcheck import (
        HashedBagOfWordsEmbedder,
        MockCompletionProvider,
        ModelId,
        ModelProfile,
        ProviderBundle,
        RunConfig,
        ScriptedFactCheckClient,
        SplitSpec,
        SystemVariant,
        evaluate,
    )
    from claimcheck.bundled import bundled_corpus_path, bundled_mock_script_path

    script = json.loads(bundled_mock_script_path().read_text(encoding="utf-8"))
    bundle = ProviderBundle(
        embedder=HashedBagOfWordsEmbedder(384),
        completion_provider=MockCompletionProvider(script["model"]),
        factcheck_client=ScriptedFactCheckClient(script["factcheck"]),
        rag1_profile=ModelProfile(model_id=ModelId.RAG_MODEL_1),
        rag2_profile=ModelProfile(model_id=ModelId.RAG_MODEL_2),
        analyzer_profile=ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER),
    )
    run = evaluate(
        RunConfig(
            variant=SystemVariant.FINVET_FULL,
            corpus_path=str(bundled_corpus_path()),
            split=SplitSpec(train_fraction=0.85, seed=42),
        ),
        bundle,
    )
    routes = {}
    rules = {}
    for row in run.per_claim:
        rules[row["decision_rule"]] = rules.get(row["decision_rule"], 0) + 1
        for route in row["routes"].values():
            routes[route] = routes.get(route, 0) + 1
    print("decision rules:", dict(sorted(rules.items())))
    print("routes:", dict(sorted(routes.items())))
    print("accuracy:", run.metrics.accuracy, "n:", run.metrics.n)
    return run.metrics.to_dict()


def main() -> None:
    corpus = build_corpus()
    assert len(corpus) == 60
    for label in LABELS:
        assert sum(1 for r in corpus if r["label"].lower() == label) == 20
    check_similarity_bands(corpus)
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "synthetic_corpus.json").write_text(
        json.dumps(corpus, indent=1) + "\n", encoding="utf-8"
    )
    script = build_mock_script(corpus)
    (DATA / "mock_providers.json").write_text(
        json.dumps(script, indent=1) + "\n", encoding="utf-8"
    )
    print(f"wrote {DATA / 'synthetic_corpus.json'} ({len(corpus)} records)")
    print(f"wrote {DATA / 'mock_providers.json'} ({len(script['model']['rules'])} model rules, "
          f"{len(script['factcheck']['matches'])} fact-check matches)")

    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    metrics = regenerate_golden()
    GOLDEN.write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {GOLDEN}")


if __name__ == "__main__":
    main()
