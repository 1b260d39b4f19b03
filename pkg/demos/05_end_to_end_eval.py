#!/usr/bin/env python3
"""Offline end-to-end evaluation on the bundled synthetic corpus.

Runs the full ensemble and every ablation over the same 85/15 split with
scripted providers, then renders a comparison table, and finishes with a
small threshold sweep showing how tier-1 usage responds to theta_high.
"""

import json

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
    render_comparison_table,
    threshold_sweep,
)
from claimcheck.bundled import bundled_corpus_path, bundled_mock_script_path


def make_bundle() -> ProviderBundle:
    script = json.loads(bundled_mock_script_path().read_text(encoding="utf-8"))
    return ProviderBundle(
        embedder=HashedBagOfWordsEmbedder(384),
        completion_provider=MockCompletionProvider(script["model"]),
        factcheck_client=ScriptedFactCheckClient(script["factcheck"]),
        rag1_profile=ModelProfile(model_id=ModelId.RAG_MODEL_1),
        rag2_profile=ModelProfile(model_id=ModelId.RAG_MODEL_2),
        analyzer_profile=ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER),
    )


def make_run(variant: SystemVariant) -> RunConfig:
    return RunConfig(
        variant=variant,
        corpus_path=str(bundled_corpus_path()),
        split=SplitSpec(train_fraction=0.85, seed=42),
        trace=True,
    )


def main():
    rows = []
    route_lines = []
    for variant in SystemVariant:
        run = evaluate(make_run(variant), make_bundle())
        rows.append((variant.value, run.metrics))
        routes = {}
        for row in run.per_claim:
            for route in row["routes"].values():
                routes[route] = routes.get(route, 0) + 1
        route_lines.append(f"  {variant.value:<26} {dict(sorted(routes.items()))}")

    print("bundled corpus: 60 claims, 20 per label; split 51 train / 9 test (seed 42)\n")
    print(render_comparison_table(rows))
    print("\nroutes taken per variant (3 pipeline slots x 9 claims):")
    print("\n".join(route_lines))

    print("\nthreshold sweep (full system), tier-1 usage responds to theta_high:")
    grid = [(0.2, 0.1), (0.4, 0.1), (0.6, 0.1), (0.8, 0.1)]
    for point in threshold_sweep(make_run(SystemVariant.FINVET_FULL), make_bundle(), grid):
        print(f"  theta_high={point.theta_high:.1f}  tier1 usage={point.tier1_fraction:.2f}  "
              f"weighted F1={point.metrics.weighted['f1']:.2f}")


if __name__ == "__main__":
    main()
