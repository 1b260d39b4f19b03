"""Acceptance suite: one test per criterion, at the stated scale and tolerance.

The terminal summary (see conftest) prints one PASS/FAIL line per criterion.
"""

import json
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import accuracy_score, precision_recall_fscore_support

import claimcheck.factcheck as factcheck_mod
from claimcheck import (
    Claim,
    DecisionRule,
    ExpertRoleSet,
    HashedBagOfWordsEmbedder,
    HttpFactCheckClient,
    IvfFlatIndex,
    Label,
    ModelId,
    ModelProfile,
    PipelineId,
    RagConfig,
    RouteTag,
    SourceKind,
    SplitSpec,
    cli,
    integrate,
    metrics_from_confusion,
    parse_corpus,
    rag_verify,
    split_records,
)
from claimcheck.bundled import bundled_corpus_path, bundled_mock_script_path
from claimcheck.evalharness import build_context
from claimcheck.testing import MockFactCheckServer, factcheck_payload
from helpers import FixedHitsIndex, FunctionProvider, fenced, hit, random_unit_vectors
from test_index import linear_scan_oracle, make_doc
from test_verdict import random_triple, reference_integrate

pytestmark = pytest.mark.acceptance


# -- criterion 1 ----------------------------------------------------------------


def test_c01_verdict_integration_oracle():
    rnd = random.Random(20240101)
    start = time.perf_counter()
    agreements = 0
    for _ in range(10_000):
        r1, r2, r3 = random_triple(rnd)
        verdict = integrate("c", r1, r2, r3)
        _, label, evidence, source_ref, confidence, rule = reference_integrate(r1, r2, r3)
        assert verdict.label is label
        assert verdict.evidence == evidence
        assert verdict.source.reference == source_ref
        assert verdict.confidence == confidence
        assert verdict.decision_rule.value == rule
        agreements += 1
    elapsed = time.perf_counter() - start
    assert agreements == 10_000
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"


# -- criterion 2 ----------------------------------------------------------------


def test_c02_tier_routing_table():
    claim = Claim(id="c", text="routing table probe claim")
    embedder = HashedBagOfWordsEmbedder(64)
    expected = {
        -1.0: RouteTag.TIER3_ROLEBASED,
        0.0: RouteTag.TIER3_ROLEBASED,
        0.39: RouteTag.TIER3_ROLEBASED,
        0.40: RouteTag.TIER2_HYBRID,
        0.59: RouteTag.TIER2_HYBRID,
        0.60: RouteTag.TIER1_DIRECT,  # inclusive boundary
        0.61: RouteTag.TIER1_DIRECT,
        1.0: RouteTag.TIER1_DIRECT,
    }

    def scripted(profile, prompt):
        if "Retrieved context:" in prompt:
            return fenced("false", 0.8, used_context=True)
        return fenced("nei", 0.3)

    for s_max, route in expected.items():
        provider = FunctionProvider(scripted)
        config = RagConfig(profile=ModelProfile(model_id=ModelId.RAG_MODEL_1))
        result = rag_verify(claim, FixedHitsIndex([hit(s_max)]), embedder, provider, config)
        assert result.route is route, f"s_max={s_max}: got {result.route}"
        if route is RouteTag.TIER1_DIRECT:
            assert provider.call_count() == 0, f"tier 1 must make zero model calls (s={s_max})"
        elif route is RouteTag.TIER2_HYBRID:
            assert provider.call_count() == 1
            assert "Retrieved context:" in provider.calls[0][1]
        else:
            assert provider.call_count() == 1
            assert "expert perspectives" in provider.calls[0][1]

    # k = 0: no documents retrieved -> role-based analysis, parametric source.
    provider = FunctionProvider(scripted)
    config = RagConfig(profile=ModelProfile(model_id=ModelId.RAG_MODEL_1))
    result = rag_verify(claim, FixedHitsIndex([]), embedder, provider, config)
    assert result.route is RouteTag.TIER3_ROLEBASED
    assert result.source.reference == "Parametric Knowledge"
    assert provider.call_count() == 1
    assert "expert perspectives" in provider.calls[0][1]


# -- criterion 3 ----------------------------------------------------------------


def test_c03_tier2_confidence_formula():
    claim = Claim(id="c", text="confidence formula probe claim")
    embedder = HashedBagOfWordsEmbedder(64)
    rnd = random.Random(77)
    for _ in range(1000):
        s_max = rnd.uniform(0.4, 0.6 - 1e-12)
        model_conf = rnd.random()
        provider = FunctionProvider(lambda p, q, c=model_conf: fenced("true", c, used_context=True))
        config = RagConfig(profile=ModelProfile(model_id=ModelId.RAG_MODEL_1))
        result = rag_verify(claim, FixedHitsIndex([hit(s_max)]), embedder, provider, config)
        assert result.route is RouteTag.TIER2_HYBRID
        assert abs(result.confidence - (s_max + model_conf) / 2.0) <= 1e-9


# -- criterion 4 ----------------------------------------------------------------


def _clustered_unit_vectors(n: int, d: int, centers: np.ndarray, sigma: float, seed: int):
    # Per-coordinate noise of sigma=0.08 puts within-cluster cosine around
    # 0.54, in the range of real sentence-embedding corpora.
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, len(centers), size=n)
    points = centers[assign] + sigma * rng.standard_normal((n, d))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def test_c04_ann_exactness_and_recall():
    start = time.perf_counter()

    # Exactness at full probe, on adversarially structureless vectors.
    vectors = random_unit_vectors(1000, 384, seed=42)
    doc_vecs = {f"doc{i:05d}": vectors[i] for i in range(1000)}
    queries = random_unit_vectors(100, 384, seed=43)
    index = IvfFlatIndex(384)
    index.train(vectors, nlist=16, seed=0)
    for i, vec in enumerate(vectors):
        index.add(make_doc(f"doc{i:05d}"), vec)
    index.freeze()
    for query in queries:
        expected = linear_scan_oracle(doc_vecs, query, k=10)
        hits = index.search(query, k=10, nprobe=index.nlist)
        assert [h.document.doc_id for h in hits] == [doc_id for _, doc_id in expected]
        for got, (score, _) in zip(hits, expected):
            assert abs(got.score - score) <= 1e-6

    # recall@10 with nlist=32, nprobe=8. Probing a subset of lists can only
    # beat chance when the corpus has cluster structure to invert, so this
    # half uses clustered synthetic vectors (uniform random directions in
    # 384-d are centroid-blind by construction).
    rng = np.random.default_rng(40)
    centers = rng.standard_normal((40, 384))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    clustered = _clustered_unit_vectors(1000, 384, centers, sigma=0.08, seed=44)
    clustered_queries = _clustered_unit_vectors(100, 384, centers, sigma=0.08, seed=45)
    clustered_docs = {f"doc{i:05d}": clustered[i] for i in range(1000)}
    index32 = IvfFlatIndex(384)
    index32.train(clustered, nlist=32, seed=0)
    for i, vec in enumerate(clustered):
        index32.add(make_doc(f"doc{i:05d}"), vec)
    index32.freeze()
    recalls = []
    for query in clustered_queries:
        truth = {doc_id for _, doc_id in linear_scan_oracle(clustered_docs, query, k=10)}
        got = {h.document.doc_id for h in index32.search(query, k=10, nprobe=8)}
        recalls.append(len(truth & got) / 10.0)
    mean_recall = sum(recalls) / len(recalls)
    elapsed = time.perf_counter() - start
    assert mean_recall >= 0.9, f"recall@10 = {mean_recall:.3f}"
    assert elapsed < 10.0, f"build+query took {elapsed:.2f}s"


# -- criterion 5 ----------------------------------------------------------------


def test_c05_factcheck_contract_fuzz():
    rnd = random.Random(9)
    ratings = ["True", "Mostly False", "Pants on Fire!", "Unproven", "Half Right", "Accurate"]
    store = {}
    behaviors = {}
    for i in range(120):
        text = f"fuzzed claim number {i} about entity {i % 13}"
        kind = rnd.choice(["match", "no_match", "malformed", "quota"])
        behaviors[text] = kind
        if kind == "match":
            store[text] = factcheck_payload(
                text, rnd.choice(ratings), url=f"https://fc.example/{i}"
            )
        elif kind == "no_match":
            store[text] = {"claims": []} if rnd.random() < 0.5 else {}
        elif kind == "malformed":
            store[text] = rnd.choice(
                [
                    {"__malformed__": True},
                    {"claims": "oops"},
                    {"claims": [{"text": text, "claimReview": []}]},
                    {"claims": [{"text": text, "claimReview": [{"textualRating": ""}]}]},
                ]
            )
        else:
            store[text] = {"__status__": 429}

    analyzer = ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER)
    roles = ExpertRoleSet()
    with MockFactCheckServer(store) as server:
        client = HttpFactCheckClient(server.url, api_key="fuzz-key")
        for text, kind in behaviors.items():
            provider = FunctionProvider(lambda p, q: fenced("nei", 0.4, evidence="fallback view"))
            result = factcheck_mod.verify(
                Claim(id=text, text=text), client, provider, analyzer, roles
            )
            if result.route is RouteTag.EXTERNAL_MATCH:
                assert kind == "match"
                assert result.confidence == 1.0
                assert result.source.kind is SourceKind.EXTERNAL_FACTCHECK
                assert result.source.reference.startswith("https://")
                assert provider.call_count() == 0
            else:
                assert kind != "match"
                assert result.route is RouteTag.LLM_FALLBACK
                assert result.source.kind is SourceKind.PARAMETRIC
                assert result.source.reference == "Parametric Knowledge"
                assert provider.call_count() >= 1, "degraded path must engage the LLM fallback"


# -- criterion 6 ----------------------------------------------------------------


def test_c06_nei_default_byte_exact():
    from claimcheck.verdict import NormalizedResult

    rnd = random.Random(6)
    sources = [
        lambda: __import__("claimcheck").SourceAttribution.parametric(),
        lambda: __import__("claimcheck").SourceAttribution.retrieved("https://doc.example/x"),
    ]
    rag_routes = [RouteTag.TIER1_DIRECT, RouteTag.TIER2_HYBRID, RouteTag.TIER3_ROLEBASED]
    for _ in range(1000):
        def zero_result(pid):
            route = RouteTag.LLM_FALLBACK if pid is PipelineId.FACTCHECK else rnd.choice(rag_routes)
            return NormalizedResult(
                label=rnd.choice(list(Label)),
                evidence=rnd.choice(["", "<pipeline error: x>", "weak evidence"]),
                source=rnd.choice(sources)(),
                confidence=0.0,
                pipeline_id=pid,
                route=route,
            )

        verdict = integrate(
            "c", zero_result(PipelineId.RAG1), zero_result(PipelineId.RAG2), zero_result(PipelineId.FACTCHECK)
        )
        assert verdict.decision_rule is DecisionRule.NEI_DEFAULT
        payload = verdict.to_dict()
        assert payload["label"] == "nei"
        assert payload["evidence"] == "Insufficient information"
        assert payload["source"]["reference"] == "No evidence"
        assert payload["confidence"] == 0.0


# -- criterion 7 ----------------------------------------------------------------


def test_c07_metrics_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        confusion = rng.integers(0, 15, size=(3, 3))
        if confusion.sum() == 0:
            confusion[1][1] = 1
        m = metrics_from_confusion(confusion.tolist())
        y_true, y_pred = [], []
        for i in range(3):
            for j in range(3):
                y_true += [i] * int(confusion[i][j])
                y_pred += [j] * int(confusion[i][j])
        assert abs(m.accuracy - accuracy_score(y_true, y_pred)) <= 1e-9
        for average, mine in (("weighted", m.weighted), ("macro", m.macro)):
            p, r, f1, _ = precision_recall_fscore_support(
                y_true, y_pred, labels=[0, 1, 2], average=average, zero_division=0
            )
            assert abs(mine["precision"] - p) <= 1e-9
            assert abs(mine["recall"] - r) <= 1e-9
            assert abs(mine["f1"] - f1) <= 1e-9
        # Weighted recall collapses to accuracy whenever every gold label
        # belongs to the label set, so comparison tables show Acc = Rec.
        assert abs(m.weighted["recall"] - m.accuracy) <= 1e-9


# -- criterion 8 ----------------------------------------------------------------


def _write_run_config(path) -> None:
    path.write_text(
        "variant: finvet_full\n"
        "corpus: bundled\n"
        "split:\n  train_fraction: 0.85\n  seed: 42\n"
        "providers:\n  mode: mock\n"
        f"  mock_script: {bundled_mock_script_path()}\n",
        encoding="utf-8",
    )


def test_c08_offline_end_to_end_determinism(tmp_path, capsys):
    start = time.perf_counter()
    run_config = tmp_path / "run.yaml"
    _write_run_config(run_config)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["evaluate", str(run_config), "--out", str(out_a)]) == 0
    assert cli.main(["evaluate", str(run_config), "--out", str(out_b)]) == 0
    capsys.readouterr()

    bytes_a = (out_a / "metrics.json").read_bytes()
    bytes_b = (out_b / "metrics.json").read_bytes()
    golden = Path(__file__).parent / "data" / "golden_metrics.json"
    assert bytes_a == bytes_b, "two runs must be byte-identical"
    assert bytes_a == golden.read_bytes(), "run must reproduce the frozen golden metrics"
    assert (out_a / "per_claim.jsonl").read_bytes() == (out_b / "per_claim.jsonl").read_bytes()
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"end-to-end evaluation took {elapsed:.2f}s"


# -- criterion 9 ----------------------------------------------------------------


def test_c09_split_protocol_and_leakage_guard():
    records = parse_corpus(bundled_corpus_path())
    assert len(records) == 60
    train, test = split_records(records, SplitSpec(train_fraction=0.85, seed=42))
    assert (len(train), len(test)) == (51, 9)
    train2, test2 = split_records(records, SplitSpec(train_fraction=0.85, seed=42))
    assert [r.record_id for r in train] == [r.record_id for r in train2]
    assert {r.record_id for r in train}.isdisjoint({r.record_id for r in test})

    # The harness applies the guard on every run: the built index must not
    # contain any test claim id.
    from claimcheck import (
        MockCompletionProvider,
        ProviderBundle,
        RunConfig,
        ScriptedFactCheckClient,
        SystemVariant,
    )

    script = json.loads(bundled_mock_script_path().read_text(encoding="utf-8"))
    ctx = build_context(
        RunConfig(
            variant=SystemVariant.FINVET_FULL,
            corpus_path=str(bundled_corpus_path()),
            split=SplitSpec(train_fraction=0.85, seed=42),
        ),
        ProviderBundle(
            embedder=HashedBagOfWordsEmbedder(384),
            completion_provider=MockCompletionProvider(script["model"]),
            factcheck_client=ScriptedFactCheckClient(script["factcheck"]),
            rag1_profile=ModelProfile(model_id=ModelId.RAG_MODEL_1),
            rag2_profile=ModelProfile(model_id=ModelId.RAG_MODEL_2),
            analyzer_profile=ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER),
        ),
    )
    test_ids = {r.record_id for r in ctx.test}
    indexed_records = {d.split("#", 1)[0] for d in ctx.index.doc_ids}
    assert indexed_records & test_ids == set()

    from claimcheck import LeakageError
    from claimcheck.evalharness import check_leakage

    with pytest.raises(LeakageError):
        check_leakage(ctx.index, [ctx.train[0]])


# -- criterion 10 (optional, live) -----------------------------------------------


@pytest.mark.skipif(
    not os.environ.get("CLAIMCHECK_LIVE_EVAL"),
    reason="live directional check requires CLAIMCHECK_LIVE_EVAL=1 plus provider credentials",
)
def test_c10_directional_live_ensemble(tmp_path):
    """With real providers configured, the full ensemble should beat each ablation."""
    import yaml

    from claimcheck import SystemVariant, evaluate
    from claimcheck.config import build_providers, load_config
    from claimcheck.evalharness import RunConfig

    config_path = os.environ.get("CLAIMCHECK_LIVE_CONFIG")
    corpus_path = os.environ.get("CLAIMCHECK_LIVE_CORPUS")
    assert config_path and corpus_path, "set CLAIMCHECK_LIVE_CONFIG and CLAIMCHECK_LIVE_CORPUS"
    config = load_config(config_path)
    scores = {}
    for variant in (
        SystemVariant.FINVET_FULL,
        SystemVariant.FACTCHECK_PIPELINE_ONLY,
        SystemVariant.RAG1_ONLY,
        SystemVariant.RAG2_ONLY,
    ):
        providers, configured = build_providers(config)
        assert configured
        run = evaluate(
            RunConfig(variant=variant, corpus_path=corpus_path, split=config.split_spec()),
            providers,
        )
        scores[variant] = run.metrics.weighted["f1"]
    full = scores.pop(SystemVariant.FINVET_FULL)
    for variant, score in scores.items():
        assert full >= score, f"{variant.value} beat the full ensemble ({score} > {full})"
