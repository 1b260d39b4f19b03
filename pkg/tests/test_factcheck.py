import pytest

from claimcheck import (
    ApiUnavailableError,
    Claim,
    ExpertRoleSet,
    FactCheckMatch,
    HttpFactCheckClient,
    Label,
    ModelId,
    ModelProfile,
    PipelineId,
    QuotaExceededError,
    RatingMap,
    ResponseCache,
    RouteTag,
    ScriptedFactCheckClient,
    SourceKind,
    factcheck_verify,
)
from claimcheck.factcheck import query_external, to_result
from claimcheck.testing import MockFactCheckServer, factcheck_payload
from helpers import FunctionProvider, fenced

CLAIM = Claim(id="c1", text="the deficit doubled last year")
ANALYZER = ModelProfile(model_id=ModelId.FACTCHECK_ANALYZER)
ROLES = ExpertRoleSet()


class TestRatingMap:
    default = RatingMap.default_map()

    @pytest.mark.parametrize(
        "rating,expected",
        [
            ("Pants on Fire!", Label.FALSE),
            ("Mostly True", Label.TRUE),
            ("Mostly False", Label.FALSE),
            ("Unproven", Label.NEI),
            ("TRUE", Label.TRUE),
            ("Incorrect", Label.FALSE),
            ("untrue", Label.NEI),  # no word-boundary match inside "untrue"
            ("", Label.NEI),
        ],
    )
    def test_default_map(self, rating, expected):
        assert self.default.apply(rating) is expected

    def test_first_matching_rule_wins(self):
        custom = RatingMap([("four pinocchios", Label.FALSE), ("pinocchios", Label.NEI)])
        assert custom.apply("Four Pinocchios") is Label.FALSE
        assert custom.apply("Two Pinocchios") is Label.NEI

    def test_from_rules(self):
        custom = RatingMap.from_rules([{"pattern": "legit", "label": "true"}])
        assert custom.apply("Totally Legit") is Label.TRUE
        assert custom.apply("whatever") is Label.NEI


class TestQueryExternal:
    def _client(self, payload):
        return ScriptedFactCheckClient({"matches": {CLAIM.text: payload}})

    def test_wire_mapping(self):
        payload = factcheck_payload(
            "the deficit doubled", "False", publisher="Checker", url="https://c.example/r/9"
        )
        match = query_external(CLAIM, self._client(payload))
        assert match == FactCheckMatch(
            matched_claim_text="the deficit doubled",
            textual_rating="False",
            publisher="Checker",
            url="https://c.example/r/9",
            review_date="2024-01-01",
        )

    def test_empty_claims_array(self):
        assert query_external(CLAIM, self._client({"claims": []})) is None

    def test_missing_url_ignored(self):
        payload = factcheck_payload("x", "False")
        payload["claims"][0]["claimReview"][0]["url"] = ""
        assert query_external(CLAIM, self._client(payload)) is None

    def test_quota_degrades_to_none(self):
        client = ScriptedFactCheckClient({"matches": {CLAIM.text: {"raise": "quota"}}})
        assert query_external(CLAIM, client) is None

    def test_outage_degrades_to_none(self):
        client = ScriptedFactCheckClient({"matches": {CLAIM.text: {"raise": "unavailable"}}})
        assert query_external(CLAIM, client) is None

    @pytest.mark.parametrize(
        "payload",
        [
            [],
            {"claims": "not a list"},
            {"claims": [42]},
            {"claims": [{"text": "x", "claimReview": "nope"}]},
            {"claims": [{"text": "x", "claimReview": [{"textualRating": ""}]}]},
        ],
    )
    def test_malformed_payloads_are_no_match(self, payload):
        assert query_external(CLAIM, self._client(payload)) is None

    def test_first_claim_first_review_selected(self):
        payload = {
            "claims": [
                {
                    "text": "first claim",
                    "claimReview": [
                        {"textualRating": "False", "publisher": {"name": "A"}, "url": "https://a/1"},
                        {"textualRating": "True", "publisher": {"name": "B"}, "url": "https://b/2"},
                    ],
                },
                {"text": "second claim", "claimReview": []},
            ]
        }
        match = query_external(CLAIM, self._client(payload))
        assert (match.publisher, match.url) == ("A", "https://a/1")

    def test_cache_hit_skips_client(self):
        payload = factcheck_payload("x", "True")
        client = self._client(payload)
        cache = ResponseCache(ttl_seconds=60)
        first = query_external(CLAIM, client, cache=cache)
        second = query_external(CLAIM, client, cache=cache)
        assert client.call_count() == 1
        assert first == second

    def test_cache_expires(self):
        now = {"t": 0.0}
        cache = ResponseCache(ttl_seconds=10, clock=lambda: now["t"])
        client = self._client(factcheck_payload("x", "True"))
        query_external(CLAIM, client, cache=cache)
        now["t"] = 5.0
        query_external(CLAIM, client, cache=cache)
        assert client.call_count() == 1  # within TTL
        now["t"] = 50.0
        query_external(CLAIM, client, cache=cache)
        assert client.call_count() == 2  # expired


class TestToResult:
    def test_maximal_confidence_and_attribution(self):
        match = FactCheckMatch("claim text", "Pants on Fire!", "PolitiFact", "https://pf/1")
        result = to_result(match, RatingMap.default_map())
        assert result.label is Label.FALSE
        assert result.confidence == 1.0
        assert result.source.kind is SourceKind.EXTERNAL_FACTCHECK
        assert result.source.reference == "https://pf/1"
        assert result.route is RouteTag.EXTERNAL_MATCH
        assert result.evidence == 'PolitiFact: Pants on Fire! (reviewed claim: "claim text")'


class TestVerifyPipeline:
    def test_match_short_circuits(self):
        client = ScriptedFactCheckClient(
            {"matches": {CLAIM.text: factcheck_payload("x", "Mostly True")}}
        )
        provider = FunctionProvider(lambda p, q: fenced("false", 0.99))
        result = factcheck_verify(CLAIM, client, provider, ANALYZER, ROLES)
        assert result.route is RouteTag.EXTERNAL_MATCH
        assert result.confidence == 1.0
        assert provider.calls == []

    def test_fallback_passthrough(self):
        client = ScriptedFactCheckClient({})
        provider = FunctionProvider(lambda p, q: fenced("false", 0.85))
        result = factcheck_verify(CLAIM, client, provider, ANALYZER, ROLES)
        assert (result.label, result.confidence) == (Label.FALSE, 0.85)
        assert result.source.reference == "Parametric Knowledge"
        assert result.route is RouteTag.LLM_FALLBACK
        assert result.pipeline_id is PipelineId.FACTCHECK

    def test_analyzer_timeout_yields_placeholder(self):
        from claimcheck import CompletionTimeoutError

        def boom(profile, prompt):
            raise CompletionTimeoutError("deadline")

        result = factcheck_verify(CLAIM, ScriptedFactCheckClient({}), FunctionProvider(boom), ANALYZER, ROLES)
        assert (result.label, result.confidence) == (Label.NEI, 0.0)
        assert result.evidence.startswith("<pipeline error:")
        assert result.route is RouteTag.LLM_FALLBACK

    def test_analyzer_disabled(self):
        result = factcheck_verify(CLAIM, ScriptedFactCheckClient({}), None, None, ROLES)
        assert (result.label, result.confidence) == (Label.NEI, 0.0)
        assert result.route is RouteTag.LLM_FALLBACK
        assert result.source.kind is SourceKind.PARAMETRIC

    def test_degraded_service_engages_fallback(self):
        client = ScriptedFactCheckClient({"matches": {CLAIM.text: {"raise": "quota"}}})
        provider = FunctionProvider(lambda p, q: fenced("nei", 0.4))
        result = factcheck_verify(CLAIM, client, provider, ANALYZER, ROLES)
        assert result.route is RouteTag.LLM_FALLBACK
        assert result.source.reference == "Parametric Knowledge"


class TestHttpClient:
    def test_match_over_the_wire(self):
        store = {CLAIM.text: factcheck_payload("wire claim", "False", url="https://wire/1")}
        with MockFactCheckServer(store) as server:
            client = HttpFactCheckClient(server.url, api_key="k-123")
            match = query_external(CLAIM, client)
            assert match.url == "https://wire/1"
            assert match.matched_claim_text == "wire claim"

    def test_empty_response_is_no_match(self):
        with MockFactCheckServer({}) as server:
            client = HttpFactCheckClient(server.url, api_key="k-123")
            assert query_external(CLAIM, client) is None

    def test_http_429_raises_quota(self):
        store = {CLAIM.text: {"__status__": 429}}
        with MockFactCheckServer(store) as server:
            client = HttpFactCheckClient(server.url, api_key="k-123")
            with pytest.raises(QuotaExceededError):
                client.search_raw(CLAIM.text)
            # And the pipeline-level wrapper degrades instead of failing.
            assert query_external(CLAIM, client) is None

    def test_malformed_json_raises_unavailable(self):
        store = {CLAIM.text: {"__malformed__": True}}
        with MockFactCheckServer(store) as server:
            client = HttpFactCheckClient(server.url, api_key="k-123")
            with pytest.raises(ApiUnavailableError):
                client.search_raw(CLAIM.text)

    def test_missing_key_rejected_by_server(self):
        with MockFactCheckServer({}) as server:
            client = HttpFactCheckClient(server.url, api_key="")
            with pytest.raises(ApiUnavailableError):
                client.search_raw(CLAIM.text)

    def test_unreachable_endpoint(self):
        client = HttpFactCheckClient("http://127.0.0.1:1/nowhere", api_key="k", timeout=0.5)
        with pytest.raises(ApiUnavailableError):
            client.search_raw("x")
