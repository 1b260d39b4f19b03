#!/usr/bin/env python3
"""Embedding providers: the deterministic local scheme and its remote twin.

The local embedder is a pure function of the token multiset (hashed bag of
words), which is what makes the whole engine reproducible offline. The
remote provider speaks `POST {"inputs": [...]}`; here it is pointed at the
bundled mock server, which answers with the same scheme.
"""

import numpy as np

from claimcheck import EmbedderConfig, HashedBagOfWordsEmbedder, RemoteHttpEmbedder
from claimcheck.testing import MockEmbeddingServer


def cosine(a, b):
    return float(np.dot(a, b))


def main():
    emb = HashedBagOfWordsEmbedder(dimension=384)

    a = "interest rates rose sharply"
    b = "RATES rose interest SHARPLY"       # same tokens, order/case changed
    c = "interest rates fell sharply"       # one token substituted
    d = "central bank policy meeting today"  # different topic

    print("deterministic local embedder (384-d, unit norm)")
    print(f"  norm of embed(a)              = {np.linalg.norm(emb.embed(a)):.9f}")
    print(f"  cosine(a, a)                  = {cosine(emb.embed(a), emb.embed(a)):.6f}")
    print(f"  cosine(a, reordered/recased)  = {cosine(emb.embed(a), emb.embed(b)):.6f}")
    print(f"  cosine(a, one-word swap)      = {cosine(emb.embed(a), emb.embed(c)):.6f}")
    print(f"  cosine(a, unrelated claim)    = {cosine(emb.embed(a), emb.embed(d)):.6f}")

    print("\nsmall-dimension walkthrough (d=8): buckets and signs are fixed by FNV-1a")
    tiny = HashedBagOfWordsEmbedder(dimension=8)
    for text in ("alpha beta", "alpha gamma"):
        print(f"  embed({text!r}) = {np.round(tiny.embed(text), 4)}")
    print(f"  cosine = {cosine(tiny.embed('alpha beta'), tiny.embed('alpha gamma')):.4f}"
          "  (one shared bucket of two)")

    print("\nremote provider against the bundled mock endpoint")
    with MockEmbeddingServer(dimension=384) as server:
        remote = RemoteHttpEmbedder(
            EmbedderConfig(kind="remote_http", dimension=384, endpoint=server.url)
        )
        local_vec, remote_vec = emb.embed(a), remote.embed(a)
        print(f"  endpoint          = {server.url}")
        print(f"  local vs remote   = {cosine(local_vec, remote_vec):.6f} (same scheme)")
        batch = remote.embed_batch([a, c, d])
        print(f"  batch of 3 texts  -> {len(batch)} vectors, all unit norm: "
              f"{all(abs(np.linalg.norm(v) - 1) < 1e-6 for v in batch)}")


if __name__ == "__main__":
    main()
