"""Corpus ingestion: parse claim records, split train/test, build the index.

The corpus file is a JSON array of objects with fields `claim`, `label`,
`evidence` (array of strings), `sources` (array of strings) and optional
`author`/`date`/`id`. Articles are decomposed into one indexed document per
evidence sentence so retrieval returns a sentence plus its provenance;
records without evidence are still indexed (claim-only) but flagged.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedFileError, TooFewRecordsError, UnrecognizedLabelError
from .index import EvidenceDocument, IvfFlatIndex, default_nlist
from .model import parse_label

logger = logging.getLogger(__name__)

# Canonical field -> accepted aliases, in priority order. Extend via the
# field_aliases argument for corpus releases with renamed columns.
DEFAULT_FIELD_ALIASES: dict[str, tuple[str, ...]] = {
    "claim": ("claim",),
    "label": ("label",),
    "evidence": ("evidence",),
    "sources": ("sources",),
    "author": ("author",),
    "date": ("date",),
    "id": ("id",),
}


@dataclass(frozen=True)
class CorpusRecord:
    """One raw corpus entry; the label is kept verbatim until ingestion."""

    record_id: str
    claim: str
    label: str
    evidence: tuple[str, ...]
    sources: tuple[str, ...]
    author: str | None = None
    date: str | None = None


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/test partition parameters."""

    train_fraction: float = 0.85
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


@dataclass
class IngestionReport:
    """Counts and anomalies from a knowledge-base build."""

    records: int = 0
    documents: int = 0
    quarantined: list[dict] = field(default_factory=list)
    zero_evidence: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "documents": self.documents,
            "quarantined": self.quarantined,
            "zero_evidence": self.zero_evidence,
        }


def _lookup(obj: dict, canonical: str, aliases: dict[str, tuple[str, ...]]):
    for name in aliases.get(canonical, (canonical,)):
        if name in obj:
            return obj[name]
    return None


def parse_corpus(path, field_aliases: dict[str, tuple[str, ...]] | None = None) -> list[CorpusRecord]:
    """Parse a corpus file into records, validating the documented schema.

    Labels are carried through raw; parseability is judged at ingestion time
    so unrecognized labels can be quarantined with context rather than lost.
    """
    aliases = dict(DEFAULT_FIELD_ALIASES)
    if field_aliases:
        aliases.update({k: tuple(v) for k, v in field_aliases.items()})

    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedFileError(f"{path}: unreadable: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedFileError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, list):
        raise MalformedFileError(f"{path}: expected a JSON array of records")

    records: list[CorpusRecord] = []
    for i, obj in enumerate(data):
        where = f"{path}: record {i}"
        if not isinstance(obj, dict):
            raise MalformedFileError(f"{where}: expected an object")
        claim = _lookup(obj, "claim", aliases)
        if not isinstance(claim, str) or not claim.strip():
            raise MalformedFileError(f"{where}: missing or empty field 'claim'")
        label = _lookup(obj, "label", aliases)
        if not isinstance(label, str):
            raise MalformedFileError(f"{where}: missing field 'label'")
        evidence = _lookup(obj, "evidence", aliases)
        if not isinstance(evidence, list) or not all(isinstance(e, str) for e in evidence):
            raise MalformedFileError(f"{where}: field 'evidence' must be an array of strings")
        sources = _lookup(obj, "sources", aliases)
        if not isinstance(sources, list) or not all(isinstance(s, str) for s in sources):
            raise MalformedFileError(f"{where}: field 'sources' must be an array of strings")
        author = _lookup(obj, "author", aliases)
        date = _lookup(obj, "date", aliases)
        record_id = _lookup(obj, "id", aliases) or f"rec{i:04d}"
        records.append(
            CorpusRecord(
                record_id=str(record_id),
                claim=claim,
                label=label,
                evidence=tuple(evidence),
                sources=tuple(sources),
                author=author if isinstance(author, str) else None,
                date=date if isinstance(date, str) else None,
            )
        )
    return records


def split_records(
    records: list[CorpusRecord], spec: SplitSpec
) -> tuple[list[CorpusRecord], list[CorpusRecord]]:
    """Deterministic shuffled split; |train| = round(train_fraction * N).

    Rounding is half-up, and the result is clamped so both sides are
    non-empty. Same seed, same partition.
    """
    n = len(records)
    if n < 2:
        raise TooFewRecordsError(f"need at least 2 records to split, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = int(math.floor(spec.train_fraction * n + 0.5))
    n_train = max(1, min(n - 1, n_train))
    train = [records[i] for i in perm[:n_train]]
    test = [records[i] for i in perm[n_train:]]
    return train, test


def documents_for_record(record: CorpusRecord) -> tuple[list[EvidenceDocument], bool]:
    """Decompose a record into per-sentence documents.

    Returns the documents plus a zero-evidence flag. The first source URL
    becomes the origin; any remaining URLs ride along in `issuer`. Records
    without sources fall back to a corpus-relative origin so provenance
    stays traceable.

    Raises UnrecognizedLabelError when the record's raw label is outside the
    closed set; callers quarantine such records.
    """
    label = parse_label(record.label)
    origin = record.sources[0] if record.sources else f"corpus:{record.record_id}"
    extra_sources = "; ".join(record.sources[1:]) or None
    sentences = list(record.evidence)
    zero_evidence = not sentences
    if zero_evidence:
        sentences = [""]
    docs = [
        EvidenceDocument(
            doc_id=f"{record.record_id}#e{j}",
            claim_text=record.claim,
            evidence_text=sentence,
            label=label,
            origin=origin,
            issuer=extra_sources,
            date=record.date,
        )
        for j, sentence in enumerate(sentences)
    ]
    return docs, zero_evidence


def build_knowledge_base(
    train: list[CorpusRecord],
    embedder,
    *,
    nlist: int | None = None,
    kmeans_seed: int = 0,
) -> tuple[IvfFlatIndex, IngestionReport]:
    """Embed the training records and populate a trained IVF index.

    The retrieval key is the record's claim text: each document is indexed
    under its claim embedding, so search ranks stored claims against the
    incoming claim. Unparseable labels are quarantined into the report, not
    dropped silently.
    """
    if not train:
        raise ValueError("training split is empty")
    report = IngestionReport(records=len(train))
    docs: list[EvidenceDocument] = []
    claim_cache: dict[str, np.ndarray] = {}
    vectors: list[np.ndarray] = []

    for record in train:
        try:
            record_docs, zero_evidence = documents_for_record(record)
        except UnrecognizedLabelError as exc:
            report.quarantined.append(
                {"record_id": record.record_id, "label": record.label, "reason": str(exc)}
            )
            continue
        if zero_evidence:
            report.zero_evidence.append(record.record_id)
        vec = claim_cache.get(record.claim)
        if vec is None:
            try:
                vec = embedder.embed(record.claim)
            except Exception as exc:
                raise type(exc)(f"record {record.record_id}: {exc}") from exc
            claim_cache[record.claim] = vec
        for doc in record_docs:
            docs.append(doc)
            vectors.append(vec)

    if not docs:
        raise ValueError("no indexable records after quarantine")
    report.documents = len(docs)

    index = IvfFlatIndex(embedder.dimension)
    resolved_nlist = nlist if nlist is not None else default_nlist(len(docs))
    index.train(np.vstack(vectors), resolved_nlist, seed=kmeans_seed)
    for doc, vec in zip(docs, vectors):
        index.add(doc, vec)
    index.freeze()
    if report.quarantined:
        logger.warning(
            "quarantined %d record(s) with unrecognized labels", len(report.quarantined)
        )
    return index, report
