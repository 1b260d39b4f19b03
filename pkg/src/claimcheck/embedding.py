"""Sentence-embedding providers behind a single contract.

Two kinds ship: a deterministic local embedder (hashed bag of words) that
makes the whole engine runnable offline, and a remote HTTP embedder that
targets a hosted sentence-transformer. Both emit unit-normalized float64
vectors of a fixed dimension, so inner product downstream is cosine
similarity.

The local scheme is pinned bit-exactly so tests reproduce anywhere:
lowercased alphanumeric tokens from the trimmed, NFC-normalized text; each
token hashed with 64-bit FNV-1a over its UTF-8 bytes; bucket = hash mod d;
sign = +1 if (hash >> 32) is even else -1; one signed count per occurrence;
then L2 normalization.
"""

from __future__ import annotations

import logging
import os
import random
import re
import threading
import time
import unicodedata
from dataclasses import dataclass

import numpy as np
import requests

from .errors import EmptyTextError, RemoteUnavailableError

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION = 384

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_U64_MASK = (1 << 64) - 1

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64_MASK
    return h


def preprocess(text: str) -> str:
    """Trim and NFC-normalize; no other preprocessing is applied."""
    return unicodedata.normalize("NFC", text.strip())


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens of the preprocessed text."""
    return _TOKEN_RE.findall(preprocess(text).lower())


@dataclass(frozen=True)
class EmbedderConfig:
    """Configuration for building an embedding provider."""

    kind: str = "deterministic_local"  # or "remote_http"
    dimension: int = DEFAULT_DIMENSION
    endpoint: str | None = None
    auth_token_env: str | None = None
    timeout: float = 30.0
    max_in_flight: int = 4
    max_retries: int = 3

    def __post_init__(self):
        if self.kind not in ("deterministic_local", "remote_http"):
            raise ValueError(f"unknown embedder kind: {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "remote_http" and not self.endpoint:
            raise ValueError("remote_http embedder requires an endpoint")


class HashedBagOfWordsEmbedder:
    """Deterministic local embedder: a pure function of the token multiset.

    By construction the output is invariant under token reordering and case
    changes, and sensitive to token substitution.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyTextError("cannot embed empty text")
        tokens = tokenize(text)
        if not tokens:
            raise EmptyTextError(f"text has no alphanumeric tokens: {text!r}")
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            h = fnv1a64(token.encode("utf-8"))
            bucket = h % self.dimension
            sign = 1.0 if ((h >> 32) % 2 == 0) else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Signed counts cancelled exactly; the scheme cannot represent
            # this token multiset, so treat it like contentless text.
            raise EmptyTextError(f"token signs cancel to a zero vector: {text!r}")
        return vec / norm

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return _map_embed(self.embed, texts)


class RemoteHttpEmbedder:
    """Remote embedder speaking `POST {"inputs": [...]} -> [[floats], ...]`.

    Bounded in-flight requests via a semaphore; exponential backoff with
    jitter on transient failures. Vectors are unit-normalized at this
    boundary regardless of what the endpoint returns.
    """

    def __init__(self, config: EmbedderConfig, session: requests.Session | None = None):
        if config.kind != "remote_http":
            raise ValueError("RemoteHttpEmbedder requires a remote_http config")
        self.config = config
        self.dimension = config.dimension
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max(1, config.max_in_flight))

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token_env:
            token = os.environ.get(self.config.auth_token_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, texts: list[str]) -> list[list[float]]:
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            if attempt:
                delay = (0.5 * 2 ** (attempt - 1)) * (1.0 + random.random() * 0.25)
                time.sleep(delay)
            try:
                with self._gate:
                    resp = self._session.post(
                        self.config.endpoint,
                        json={"inputs": texts},
                        headers=self._headers(),
                        timeout=self.config.timeout,
                    )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code == 200:
                return resp.json()
            last_error = RemoteUnavailableError(f"embedding endpoint returned {resp.status_code}")
            if 400 <= resp.status_code < 500 and resp.status_code != 429:
                break
        raise RemoteUnavailableError(f"embedding endpoint unavailable: {last_error}")

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        for i, text in enumerate(texts):
            if not text or not text.strip():
                raise EmptyTextError(f"texts[{i}] is empty")
        if not texts:
            return []
        rows = self._post(list(texts))
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise RemoteUnavailableError("embedding endpoint returned a malformed batch")
        out = []
        for i, row in enumerate(rows):
            vec = np.asarray(row, dtype=np.float64)
            if vec.shape != (self.dimension,):
                raise RemoteUnavailableError(
                    f"embedding endpoint returned dimension {vec.shape} for texts[{i}], "
                    f"expected ({self.dimension},)"
                )
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise RemoteUnavailableError(f"embedding endpoint returned a zero vector for texts[{i}]")
            out.append(vec / norm)
        return out


class CachingEmbedder:
    """Thread-safe memoizing wrapper; shares embeddings across evaluation runs."""

    def __init__(self, inner):
        self.inner = inner
        self.dimension = inner.dimension
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        with self._lock:
            hit = self._cache.get(text)
        if hit is not None:
            return hit
        vec = self.inner.embed(text)
        with self._lock:
            self._cache.setdefault(text, vec)
        return vec

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return _map_embed(self.embed, texts)


def _map_embed(embed_one, texts: list[str]) -> list[np.ndarray]:
    out = []
    for i, text in enumerate(texts):
        try:
            out.append(embed_one(text))
        except (EmptyTextError, RemoteUnavailableError) as exc:
            raise type(exc)(f"texts[{i}]: {exc}") from exc
    return out


def build_embedder(config: EmbedderConfig):
    if config.kind == "deterministic_local":
        return HashedBagOfWordsEmbedder(config.dimension)
    return RemoteHttpEmbedder(config)
