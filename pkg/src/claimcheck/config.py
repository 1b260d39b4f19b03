"""Layered configuration: defaults < config file < environment < CLI flags.

One human-readable YAML file holds every tunable the engine exposes
(thresholds, retrieval depth, index geometry, provider endpoints, the
rating map, the expert role list). API keys never live in the file; the
file names the environment variables that hold them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .embedding import DEFAULT_DIMENSION, EmbedderConfig, build_embedder
from .errors import ConfigError
from .factcheck import HttpFactCheckClient, RatingMap, ResponseCache, ScriptedFactCheckClient
from .gateway import (
    DEFAULT_EXPERT_ROLES,
    ExpertRoleSet,
    HttpCompletionProvider,
    MockCompletionProvider,
    ModelId,
    ModelProfile,
)
from .ingest import SplitSpec
from .rag import TierThresholds

GOOGLE_FACTCHECK_ENDPOINT = "https://factchecktools.googleapis.com/v1alpha1/claims:search"

# Settings overridable from the environment, and the variables that carry them.
ENV_OVERRIDES: dict[str, str] = {
    "theta_high": "CLAIMCHECK_THETA_HIGH",
    "theta_med": "CLAIMCHECK_THETA_MED",
    "k": "CLAIMCHECK_K",
    "nprobe": "CLAIMCHECK_NPROBE",
    "seed": "CLAIMCHECK_SEED",
    "train_fraction": "CLAIMCHECK_TRAIN_FRACTION",
    "workers": "CLAIMCHECK_WORKERS",
}

_FLOAT_FIELDS = {"theta_high", "theta_med", "train_fraction"}
_INT_FIELDS = {"k", "nprobe", "seed", "workers", "nlist", "dimension"}


@dataclass(frozen=True)
class ModelEndpoint:
    endpoint: str | None = None
    model_name: str | None = None
    auth_token_env: str | None = "MODEL_API_TOKEN"
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0


@dataclass(frozen=True)
class AppConfig:
    """Resolved engine configuration."""

    theta_high: float = 0.6
    theta_med: float = 0.4
    k: int = 5
    nprobe: int = 8
    nlist: int | None = None
    seed: int = 42
    train_fraction: float = 0.85
    dimension: int = DEFAULT_DIMENSION
    embedder_kind: str = "deterministic_local"
    embedder_endpoint: str | None = None
    embedder_token_env: str | None = "EMBEDDER_API_TOKEN"
    provider_mode: str = "mock"  # mock | live
    mock_script: str | None = None
    rag1: ModelEndpoint = field(default_factory=ModelEndpoint)
    rag2: ModelEndpoint = field(default_factory=ModelEndpoint)
    analyzer: ModelEndpoint = field(default_factory=ModelEndpoint)
    factcheck_endpoint: str = GOOGLE_FACTCHECK_ENDPOINT
    factcheck_api_key_env: str = "FACTCHECK_API_KEY"
    factcheck_cache_ttl: float = 3600.0
    roles: tuple[str, ...] = DEFAULT_EXPERT_ROLES
    rating_rules: tuple | None = None  # ((pattern, label), ...) or None for the default map
    workers: int = 4
    deadline: float = 60.0
    trace: bool = False

    def thresholds(self) -> TierThresholds:
        return TierThresholds(theta_high=self.theta_high, theta_med=self.theta_med)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(train_fraction=self.train_fraction, seed=self.seed)

    def role_set(self) -> ExpertRoleSet:
        return ExpertRoleSet(tuple(self.roles))

    def rating_map(self) -> RatingMap:
        if self.rating_rules is None:
            return RatingMap.default_map()
        return RatingMap.from_rules([{"pattern": p, "label": l} for p, l in self.rating_rules])


def _read_file_layer(path) -> dict[str, Any]:
    """Flatten the nested YAML schema into AppConfig field names."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")

    flat: dict[str, Any] = {}
    thresholds = data.get("thresholds", {})
    flat.update({k: thresholds[k] for k in ("theta_high", "theta_med") if k in thresholds})
    retrieval = data.get("retrieval", {})
    flat.update({k: retrieval[k] for k in ("k", "nprobe", "nlist") if k in retrieval})
    split = data.get("split", {})
    if "train_fraction" in split:
        flat["train_fraction"] = split["train_fraction"]
    if "seed" in split:
        flat["seed"] = split["seed"]
    embedder = data.get("embedder", {})
    if "kind" in embedder:
        flat["embedder_kind"] = embedder["kind"]
    if "dimension" in embedder:
        flat["dimension"] = embedder["dimension"]
    if "endpoint" in embedder:
        flat["embedder_endpoint"] = embedder["endpoint"]
    if "auth_token_env" in embedder:
        flat["embedder_token_env"] = embedder["auth_token_env"]
    providers = data.get("providers", {})
    if "mode" in providers:
        flat["provider_mode"] = providers["mode"]
    if "mock_script" in providers:
        flat["mock_script"] = providers["mock_script"]
    for name in ("rag1", "rag2", "analyzer"):
        if name in providers:
            flat[name] = ModelEndpoint(**providers[name])
    factcheck = data.get("factcheck", {})
    if "endpoint" in factcheck:
        flat["factcheck_endpoint"] = factcheck["endpoint"]
    if "api_key_env" in factcheck:
        flat["factcheck_api_key_env"] = factcheck["api_key_env"]
    if "cache_ttl" in factcheck:
        flat["factcheck_cache_ttl"] = factcheck["cache_ttl"]
    if "roles" in data:
        flat["roles"] = tuple(data["roles"])
    if "rating_map" in data:
        flat["rating_rules"] = tuple((r["pattern"], r["label"]) for r in data["rating_map"])
    runtime = data.get("runtime", {})
    flat.update({k: runtime[k] for k in ("workers", "deadline", "trace") if k in runtime})
    return flat


def _env_layer(env: Mapping[str, str]) -> dict[str, Any]:
    layer: dict[str, Any] = {}
    for field_name, var in ENV_OVERRIDES.items():
        if var in env and env[var] != "":
            layer[field_name] = env[var]
    return layer


def _coerce(field_name: str, value):
    if value is None:
        return None
    try:
        if field_name in _FLOAT_FIELDS:
            return float(value)
        if field_name in _INT_FIELDS:
            return int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {field_name}: {value!r}") from exc
    return value


def load_config(
    file_path=None,
    *,
    env: Mapping[str, str] | None = None,
    flags: Mapping[str, Any] | None = None,
) -> AppConfig:
    """Resolve configuration with precedence flags > env > file > defaults."""
    env = os.environ if env is None else env
    layers: list[dict[str, Any]] = []
    if file_path is not None:
        layers.append(_read_file_layer(file_path))
    layers.append(_env_layer(env))
    if flags:
        layers.append({k: v for k, v in flags.items() if v is not None})

    merged: dict[str, Any] = {}
    for layer in layers:  # later layers win
        merged.update(layer)
    merged = {k: _coerce(k, v) for k, v in merged.items()}
    try:
        config = AppConfig(**merged)
    except TypeError as exc:
        raise ConfigError(f"unknown configuration key: {exc}") from exc
    # Fail fast on invalid threshold geometry.
    config.thresholds()
    config.split_spec()
    return config


# -- provider construction -----------------------------------------------------


def _profile(model_id: ModelId, ep: ModelEndpoint) -> ModelProfile:
    return ModelProfile(
        model_id=model_id,
        endpoint=ep.endpoint,
        auth_token_env=ep.auth_token_env,
        model_name=ep.model_name,
        temperature=ep.temperature,
        max_tokens=ep.max_tokens,
        timeout=ep.timeout,
    )


def load_mock_script(path) -> dict:
    import json

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        return yaml.safe_load(text) or {}
    return json.loads(text)


class _UnconfiguredFactCheckClient:
    """Placeholder client when no API key is present; always degrades."""

    def search_raw(self, claim_text: str):
        from .errors import ApiUnavailableError

        raise ApiUnavailableError("no fact-check API key configured")


def build_providers(config: AppConfig, *, env: Mapping[str, str] | None = None):
    """Construct the provider bundle the pipelines run against.

    Returns (bundle, configured) where `configured` is False when live mode
    has no usable provider at all (no model endpoint and no fact-check key).
    """
    from .evalharness import ProviderBundle

    env = os.environ if env is None else env
    embedder = build_embedder(
        EmbedderConfig(
            kind=config.embedder_kind,
            dimension=config.dimension,
            endpoint=config.embedder_endpoint,
            auth_token_env=config.embedder_token_env,
        )
    )

    if config.provider_mode == "mock":
        script = load_mock_script(config.mock_script) if config.mock_script else {}
        completion = MockCompletionProvider(script.get("model", script))
        factcheck_client = ScriptedFactCheckClient(script.get("factcheck", {}))
        configured = True
    elif config.provider_mode == "live":
        completion = HttpCompletionProvider()
        api_key = env.get(config.factcheck_api_key_env, "")
        if api_key:
            factcheck_client = HttpFactCheckClient(config.factcheck_endpoint, api_key)
        else:
            factcheck_client = _UnconfiguredFactCheckClient()
        any_model = any(ep.endpoint for ep in (config.rag1, config.rag2, config.analyzer))
        configured = bool(any_model or api_key)
    else:
        raise ConfigError(f"unknown provider mode: {config.provider_mode!r}")

    bundle = ProviderBundle(
        embedder=embedder,
        completion_provider=completion,
        factcheck_client=factcheck_client,
        rag1_profile=_profile(ModelId.RAG_MODEL_1, config.rag1),
        rag2_profile=_profile(ModelId.RAG_MODEL_2, config.rag2),
        analyzer_profile=_profile(ModelId.FACTCHECK_ANALYZER, config.analyzer),
        roles=config.role_set(),
        rating_map=config.rating_map(),
        factcheck_cache=ResponseCache(ttl_seconds=config.factcheck_cache_ttl),
    )
    return bundle, configured
