import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimcheck import (
    Claim,
    HashedBagOfWordsEmbedder,
    Label,
    ModelId,
    ModelProfile,
    PipelineId,
    RagConfig,
    RouteTag,
    SourceKind,
    TierThresholds,
    rag_verify,
)
from helpers import FixedHitsIndex, FunctionProvider, doc, fenced, hit

EMBEDDER = HashedBagOfWordsEmbedder(64)
CLAIM = Claim(id="c1", text="interest rates rose sharply")
PROFILE = ModelProfile(model_id=ModelId.RAG_MODEL_1)


def reasoning_or_role(profile, prompt):
    # Distinguishable canned answers for the two prompt families.
    if "Retrieved context:" in prompt:
        return fenced("false", 0.9, evidence="hybrid answer", used_context=True)
    return fenced("nei", 0.3, evidence="role answer")


def run(s_max: float | None, provider=None, *, document=None, thresholds=None):
    provider = provider or FunctionProvider(reasoning_or_role)
    hits = [] if s_max is None else [hit(s_max, document or doc())]
    config = RagConfig(profile=PROFILE, thresholds=thresholds or TierThresholds())
    result = rag_verify(CLAIM, FixedHitsIndex(hits), EMBEDDER, provider, config)
    return result, provider


class TestThresholds:
    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            TierThresholds(theta_high=0.4, theta_med=0.6)

    def test_boundary_semantics(self):
        t = TierThresholds()
        assert t.is_high(0.60) and t.is_high(0.61) and not t.is_high(0.59)
        assert t.is_medium(0.40) and t.is_medium(0.59) and not t.is_medium(0.60)
        assert not t.is_medium(0.39)


class TestRouting:
    @pytest.mark.parametrize(
        "s_max,expected_route",
        [
            (-1.0, RouteTag.TIER3_ROLEBASED),
            (0.0, RouteTag.TIER3_ROLEBASED),
            (0.39, RouteTag.TIER3_ROLEBASED),
            (0.40, RouteTag.TIER2_HYBRID),
            (0.59, RouteTag.TIER2_HYBRID),
            (0.60, RouteTag.TIER1_DIRECT),
            (0.61, RouteTag.TIER1_DIRECT),
            (1.0, RouteTag.TIER1_DIRECT),
        ],
    )
    def test_tier_selection(self, s_max, expected_route):
        result, _ = run(s_max)
        assert result.route is expected_route

    def test_no_hits_goes_role_based(self):
        result, provider = run(None)
        assert result.route is RouteTag.TIER3_ROLEBASED
        assert result.source.kind is SourceKind.PARAMETRIC
        assert len(provider.calls) == 1
        assert "expert perspectives" in provider.calls[0][1]

    def test_tier1_makes_no_model_calls(self):
        result, provider = run(0.75)
        assert result.route is RouteTag.TIER1_DIRECT
        assert provider.calls == []

    @given(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
    @settings(max_examples=200)
    def test_routing_total_and_exclusive(self, s_max):
        t = TierThresholds()
        memberships = [t.is_high(s_max), t.is_medium(s_max), s_max < t.theta_med]
        assert sum(memberships) == 1


class TestTier1:
    def test_metadata_passthrough(self):
        stored = doc(
            "d9",
            evidence_text="the filings confirm it",
            label=Label.FALSE,
            origin="https://origin.example/x",
        )
        result, _ = run(0.82, document=stored)
        assert result.label is Label.FALSE
        assert result.evidence == "the filings confirm it"
        assert result.source.kind is SourceKind.RETRIEVED
        assert result.source.reference == "https://origin.example/x"
        assert result.confidence == pytest.approx(0.82)
        assert result.pipeline_id is PipelineId.RAG1

    def test_confidence_equals_similarity_and_monotone(self):
        low, _ = run(0.65)
        high, _ = run(0.95)
        assert low.confidence == pytest.approx(0.65)
        assert high.confidence > low.confidence

    def test_empty_evidence_falls_back_to_claim_text(self):
        stored = doc("d1", evidence_text="", claim_text="claim-only record")
        result, _ = run(0.9, document=stored)
        assert result.evidence == "claim-only record"

    def test_similarity_epsilon_above_one_clamped(self):
        result, _ = run(1.0 + 5e-16)
        assert result.confidence == 1.0

    def test_unrecognized_stored_label_degrades_to_tier2(self):
        stored = doc("bad")
        object.__setattr__(stored, "label", "half-true")
        result, provider = run(0.95, document=stored)
        assert result.route is RouteTag.TIER2_HYBRID
        assert result.label is Label.FALSE  # from the hybrid scripted answer
        assert len(provider.calls) == 1


class TestTier2:
    def test_confidence_is_average(self):
        result, _ = run(0.5)
        assert result.confidence == pytest.approx((0.5 + 0.9) / 2)
        assert result.label is Label.FALSE
        assert result.evidence == "hybrid answer"

    def test_used_context_keeps_retrieved_source(self):
        result, _ = run(0.5)
        assert result.source.kind is SourceKind.RETRIEVED
        assert result.source.reference == doc().origin

    def test_insufficient_context_marks_parametric(self):
        provider = FunctionProvider(
            lambda p, q: fenced("nei", 0.4, used_context=False, evidence="own knowledge")
        )
        result, _ = run(0.5, provider)
        assert result.source.kind is SourceKind.PARAMETRIC
        assert result.source.reference == "Parametric Knowledge"

    def test_context_contains_all_hits_in_score_order(self):
        provider = FunctionProvider(reasoning_or_role)
        hits = [
            hit(0.55, doc("a", evidence_text="first evidence")),
            hit(0.45, doc("b", evidence_text="second evidence")),
        ]
        config = RagConfig(profile=PROFILE)
        rag_verify(CLAIM, FixedHitsIndex(hits), EMBEDDER, provider, config)
        prompt = provider.calls[0][1]
        assert prompt.index("[1] first evidence") < prompt.index("[2] second evidence")

    @given(
        st.floats(min_value=0.4, max_value=0.6, exclude_max=True),
        st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=100)
    def test_confidence_bounds(self, s_max, model_conf):
        provider = FunctionProvider(lambda p, q: fenced("true", model_conf, used_context=True))
        result, _ = run(s_max, provider)
        t = TierThresholds()
        assert t.theta_med / 2 - 1e-12 <= result.confidence <= (t.theta_high + 1) / 2 + 1e-12

    def test_gateway_failure_yields_placeholder(self):
        provider = FunctionProvider(lambda p, q: "never json")
        result, _ = run(0.5, provider)
        assert result.label is Label.NEI
        assert result.confidence == 0.0
        assert result.evidence.startswith("<pipeline error:")
        assert result.route is RouteTag.TIER2_HYBRID


class TestTier3:
    def test_parametric_and_model_confidence(self):
        provider = FunctionProvider(lambda p, q: fenced("nei", 0.3, evidence="role answer"))
        result, _ = run(0.2, provider)
        assert result.route is RouteTag.TIER3_ROLEBASED
        assert result.source.reference == "Parametric Knowledge"
        assert result.confidence == pytest.approx(0.3)

    def test_gateway_failure_yields_placeholder(self):
        provider = FunctionProvider(lambda p, q: "never json")
        result, _ = run(0.1, provider)
        assert result.confidence == 0.0
        assert result.route is RouteTag.TIER3_ROLEBASED


class TestPipelineErrors:
    def test_embedder_failure_yields_placeholder(self):
        class BrokenEmbedder:
            dimension = 64

            def embed(self, text):
                from claimcheck import RemoteUnavailableError

                raise RemoteUnavailableError("endpoint down")

        provider = FunctionProvider(reasoning_or_role)
        config = RagConfig(profile=PROFILE)
        result = rag_verify(CLAIM, FixedHitsIndex([]), BrokenEmbedder(), provider, config)
        assert result.label is Label.NEI and result.confidence == 0.0
        assert "embedding failed" in result.evidence

    def test_rag2_profile_maps_to_rag2(self):
        provider = FunctionProvider(reasoning_or_role)
        config = RagConfig(profile=ModelProfile(model_id=ModelId.RAG_MODEL_2))
        result = rag_verify(CLAIM, FixedHitsIndex([hit(0.9)]), EMBEDDER, provider, config)
        assert result.pipeline_id is PipelineId.RAG2
