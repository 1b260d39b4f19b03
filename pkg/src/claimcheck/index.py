"""IVF-flat vector index over unit vectors, with exact rerank and persistence.

The index clusters vectors into `nlist` inverted lists via a coarse k-means
quantizer and scans the `nprobe` closest lists exactly at query time. All
vectors are unit-norm, so inner product is cosine similarity and searching
with nprobe = nlist reproduces a brute-force exact scan.

Build phase (train/add) is single-writer; after `freeze()` search is
lock-free for any number of concurrent readers.
"""

from __future__ import annotations

import io
import json
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CorruptIndexFileError,
    DuplicateDocIdError,
    InsufficientTrainingDataError,
    UntrainedIndexError,
)
from .model import Label, parse_label

MAGIC = b"CGIX"
FORMAT_VERSION = 1

DEFAULT_K = 5
DEFAULT_NPROBE = 8
MAX_NLIST = 256
FLAT_SCAN_THRESHOLD = 64  # below this corpus size, degrade to one list

KMEANS_MAX_ITERATIONS = 25
KMEANS_SHIFT_TOLERANCE = 1e-4
UNIT_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EvidenceDocument:
    """An indexed claim-evidence record with provenance metadata."""

    doc_id: str
    claim_text: str
    evidence_text: str
    label: Label
    origin: str
    issuer: str | None = None
    date: str | None = None

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if not self.origin:
            raise ValueError("origin must be non-empty")
        if isinstance(self.label, str):
            object.__setattr__(self, "label", parse_label(self.label))

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "claim_text": self.claim_text,
            "evidence_text": self.evidence_text,
            "label": self.label.value,
            "origin": self.origin,
            "issuer": self.issuer,
            "date": self.date,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvidenceDocument":
        return cls(
            doc_id=data["doc_id"],
            claim_text=data["claim_text"],
            evidence_text=data["evidence_text"],
            label=parse_label(data["label"]),
            origin=data["origin"],
            issuer=data.get("issuer"),
            date=data.get("date"),
        )


@dataclass(frozen=True)
class SearchHit:
    """A retrieved document plus its cosine-similarity score."""

    document: EvidenceDocument
    score: float


def default_nlist(doc_count: int) -> int:
    """ceil(sqrt(N)) clamped to [1, 256]; tiny corpora degrade to a flat scan."""
    if doc_count < FLAT_SCAN_THRESHOLD:
        return 1
    return max(1, min(MAX_NLIST, math.ceil(math.sqrt(doc_count))))


def _as_matrix(vectors, dimension: int) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2 or mat.shape[1] != dimension:
        raise ValueError(f"expected vectors of dimension {dimension}, got shape {mat.shape}")
    return mat


def spherical_kmeans(
    sample: np.ndarray, nlist: int, *, seed: int = 0
) -> np.ndarray:
    """K-means over unit vectors with inner-product assignment.

    Initialization draws nlist distinct sample rows from a seeded generator.
    Iterates at most KMEANS_MAX_ITERATIONS times or until the largest
    centroid shift drops below KMEANS_SHIFT_TOLERANCE. Empty clusters are
    re-seeded from the farthest point of the largest cluster. Centroids are
    re-normalized each round so assignment stays a cosine argmax.
    """
    n = sample.shape[0]
    if n < nlist:
        raise InsufficientTrainingDataError(
            f"need at least nlist={nlist} training vectors, got {n}"
        )
    rng = np.random.default_rng(seed)
    centroids = sample[rng.permutation(n)[:nlist]].copy()

    for _ in range(KMEANS_MAX_ITERATIONS):
        sims = sample @ centroids.T  # (n, nlist)
        assign = np.argmax(sims, axis=1)
        new_centroids = np.zeros_like(centroids)
        counts = np.bincount(assign, minlength=nlist)

        for c in range(nlist):
            members = sample[assign == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)

        used_positions: set[int] = set()
        for c in np.flatnonzero(counts == 0):
            donor = int(np.argmax(counts))
            donor_positions = np.flatnonzero(assign == donor)
            donor_sims = sims[donor_positions, donor]
            for pos in donor_positions[np.argsort(donor_sims, kind="stable")]:
                if int(pos) not in used_positions:
                    used_positions.add(int(pos))
                    new_centroids[c] = sample[pos]
                    break

        norms = np.linalg.norm(new_centroids, axis=1, keepdims=True)
        for c in np.flatnonzero(norms[:, 0] == 0.0):
            # Mean cancelled to zero; keep the previous centroid direction.
            new_centroids[c] = centroids[c]
            norms[c, 0] = 1.0
        new_centroids = new_centroids / norms

        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < KMEANS_SHIFT_TOLERANCE:
            break
    return centroids


class IvfFlatIndex:
    """Inverted-file index with flat (uncompressed) storage per list."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._centroids: np.ndarray | None = None
        self._doc_ids: list[str] = []
        self._vectors: list[np.ndarray] = []
        self._assignments: list[int] = []
        self._lists: list[list[int]] = []
        self._doc_store: dict[str, EvidenceDocument] = {}
        self._frozen_matrix: np.ndarray | None = None

    # -- properties ---------------------------------------------------------

    @property
    def trained(self) -> bool:
        return self._centroids is not None

    @property
    def nlist(self) -> int:
        self._require_trained()
        return int(self._centroids.shape[0])

    def __len__(self) -> int:
        return len(self._doc_ids)

    @property
    def doc_ids(self) -> list[str]:
        return list(self._doc_ids)

    def get_document(self, doc_id: str) -> EvidenceDocument:
        return self._doc_store[doc_id]

    def _require_trained(self):
        if self._centroids is None:
            raise UntrainedIndexError("index must be trained before use")

    @classmethod
    def empty(cls, dimension: int) -> "IvfFlatIndex":
        """A trained, document-free index for retrieval-less runs."""
        index = cls(dimension)
        seed_vec = np.zeros((1, dimension))
        seed_vec[0, 0] = 1.0
        index.train(seed_vec, nlist=1)
        return index

    # -- build --------------------------------------------------------------

    def train(self, sample, nlist: int, *, seed: int = 0) -> None:
        """Fit the coarse quantizer on a sample of unit vectors."""
        if nlist < 1:
            raise ValueError("nlist must be positive")
        mat = _as_matrix(sample, self.dimension)
        self._centroids = spherical_kmeans(mat, nlist, seed=seed)
        self._lists = [[] for _ in range(nlist)]

    def add(self, doc: EvidenceDocument, vec) -> None:
        """Assign the vector to its closest centroid and store the document."""
        self._require_trained()
        if doc.doc_id in self._doc_store:
            raise DuplicateDocIdError(f"doc_id already indexed: {doc.doc_id!r}")
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if vec.shape != (self.dimension,):
            raise ValueError(f"vector dimension {vec.shape} != index dimension {self.dimension}")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise ValueError(f"vector must be unit-norm, got norm {norm}")
        cid = int(np.argmax(self._centroids @ vec))
        position = len(self._doc_ids)
        self._doc_ids.append(doc.doc_id)
        self._vectors.append(vec)
        self._assignments.append(cid)
        self._lists[cid].append(position)
        self._doc_store[doc.doc_id] = doc
        self._frozen_matrix = None

    def freeze(self) -> None:
        """Stack vectors into one read-only matrix for lock-free search."""
        if self._vectors:
            mat = np.vstack(self._vectors)
            mat.setflags(write=False)
            self._frozen_matrix = mat

    # -- search -------------------------------------------------------------

    def search(self, query, k: int, nprobe: int = DEFAULT_NPROBE) -> list[SearchHit]:
        """Exact inner-product scan over the nprobe closest inverted lists.

        Hits come back in non-increasing score order, ties broken by
        ascending doc_id. With nprobe = nlist this equals brute force.
        """
        self._require_trained()
        if k < 1:
            raise ValueError("k must be positive")
        if not self._doc_ids:
            return []
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.shape != (self.dimension,):
            raise ValueError(f"query dimension {query.shape} != index dimension {self.dimension}")
        nprobe = max(1, min(nprobe, self.nlist))

        centroid_scores = self._centroids @ query
        probe_order = np.lexsort((np.arange(self.nlist), -centroid_scores))[:nprobe]
        positions = [p for c in probe_order for p in self._lists[c]]
        if not positions:
            return []

        matrix = self._frozen_matrix
        if matrix is not None:
            candidate = matrix[positions]
        else:
            candidate = np.vstack([self._vectors[p] for p in positions])
        scores = candidate @ query

        order = sorted(
            range(len(positions)),
            key=lambda i: (-scores[i], self._doc_ids[positions[i]]),
        )[:k]
        return [
            SearchHit(document=self._doc_store[self._doc_ids[positions[i]]], score=float(scores[i]))
            for i in order
        ]

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        """Write the little-endian binary format with a CRC32 trailer."""
        self._require_trained()
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<HIIQ", FORMAT_VERSION, self.dimension, self.nlist, len(self)))
        buf.write(np.ascontiguousarray(self._centroids, dtype="<f8").tobytes())
        for c in range(self.nlist):
            entries = self._lists[c]
            buf.write(struct.pack("<Q", len(entries)))
            for pos in entries:
                doc_id_bytes = self._doc_ids[pos].encode("utf-8")
                buf.write(struct.pack("<I", len(doc_id_bytes)))
                buf.write(doc_id_bytes)
                buf.write(np.ascontiguousarray(self._vectors[pos], dtype="<f8").tobytes())
        store_json = json.dumps(
            {doc_id: doc.to_dict() for doc_id, doc in self._doc_store.items()},
            sort_keys=True,
        ).encode("utf-8")
        buf.write(struct.pack("<Q", len(store_json)))
        buf.write(store_json)
        payload = buf.getvalue()
        checksum = zlib.crc32(payload) & 0xFFFFFFFF
        Path(path).write_bytes(payload + struct.pack("<I", checksum))

    @classmethod
    def load(cls, path) -> "IvfFlatIndex":
        raw = Path(path).read_bytes()
        if len(raw) < len(MAGIC) + struct.calcsize("<HIIQ") + 4:
            raise CorruptIndexFileError("index file truncated")
        payload, trailer = raw[:-4], raw[-4:]
        (stored_crc,) = struct.unpack("<I", trailer)
        if (zlib.crc32(payload) & 0xFFFFFFFF) != stored_crc:
            raise CorruptIndexFileError("checksum mismatch")
        if payload[: len(MAGIC)] != MAGIC:
            raise CorruptIndexFileError(f"bad magic: {payload[:4]!r}")
        offset = len(MAGIC)
        try:
            version, dimension, nlist, count = struct.unpack_from("<HIIQ", payload, offset)
            offset += struct.calcsize("<HIIQ")
            if version != FORMAT_VERSION:
                raise CorruptIndexFileError(
                    f"unsupported format version {version}, expected {FORMAT_VERSION}"
                )
            index = cls(dimension)
            centroid_bytes = nlist * dimension * 8
            index._centroids = (
                np.frombuffer(payload, dtype="<f8", count=nlist * dimension, offset=offset)
                .reshape(nlist, dimension)
                .copy()
            )
            offset += centroid_bytes
            index._lists = [[] for _ in range(nlist)]
            vec_bytes = dimension * 8
            for c in range(nlist):
                (n_entries,) = struct.unpack_from("<Q", payload, offset)
                offset += 8
                for _ in range(n_entries):
                    (id_len,) = struct.unpack_from("<I", payload, offset)
                    offset += 4
                    doc_id = payload[offset : offset + id_len].decode("utf-8")
                    offset += id_len
                    vec = np.frombuffer(payload, dtype="<f8", count=dimension, offset=offset).copy()
                    offset += vec_bytes
                    position = len(index._doc_ids)
                    index._doc_ids.append(doc_id)
                    index._vectors.append(vec)
                    index._assignments.append(c)
                    index._lists[c].append(position)
            (store_len,) = struct.unpack_from("<Q", payload, offset)
            offset += 8
            store = json.loads(payload[offset : offset + store_len].decode("utf-8"))
            offset += store_len
        except (struct.error, UnicodeDecodeError, ValueError, json.JSONDecodeError) as exc:
            raise CorruptIndexFileError(f"index file unreadable: {exc}") from exc
        if offset != len(payload):
            raise CorruptIndexFileError("trailing bytes after document store")
        if len(index._doc_ids) != count:
            raise CorruptIndexFileError("entry count mismatch")
        try:
            index._doc_store = {
                doc_id: EvidenceDocument.from_dict(d) for doc_id, d in store.items()
            }
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise CorruptIndexFileError(f"document store unreadable: {exc}") from exc
        missing = set(index._doc_ids) - set(index._doc_store)
        if missing:
            raise CorruptIndexFileError(f"documents missing from store: {sorted(missing)[:3]}")
        index.freeze()
        return index


def brute_force_search(
    documents: Sequence[tuple[EvidenceDocument, np.ndarray]], query: np.ndarray, k: int
) -> list[SearchHit]:
    """Reference linear scan with the same ordering contract as the index."""
    scored = [(float(np.dot(vec, query)), doc) for doc, vec in documents]
    scored.sort(key=lambda pair: (-pair[0], pair[1].doc_id))
    return [SearchHit(document=doc, score=score) for score, doc in scored[:k]]
