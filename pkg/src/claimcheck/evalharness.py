"""Evaluation harness: run a system variant over a test split, score it.

Builds the knowledge base strictly from the training split (with a leakage
guard), fans the test claims through the configured pipelines, integrates
verdicts, and computes 3-class precision/recall/F1/accuracy with both
weighted and macro averages. Also provides the threshold-sweep utility used
to explore the tier cut-offs.
"""

from __future__ import annotations

import enum
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import factcheck as factcheck_mod
from . import rag as rag_mod
from .embedding import CachingEmbedder
from .errors import LeakageError, UnrecognizedLabelError
from .gateway import ExpertRoleSet, ModelProfile
from .index import IvfFlatIndex
from .ingest import CorpusRecord, IngestionReport, SplitSpec, build_knowledge_base, parse_corpus, split_records
from .model import Claim, Label, PipelineId, VerdictReport, disabled_placeholder, parse_label
from .rag import RagConfig, TierThresholds
from .verdict import integrate, normalize

logger = logging.getLogger(__name__)

LABEL_ORDER = (Label.TRUE, Label.FALSE, Label.NEI)


class SystemVariant(enum.Enum):
    """Which pipelines execute; everything else contributes a disabled record."""

    FINVET_FULL = "finvet_full"
    FACTCHECK_PIPELINE_ONLY = "factcheck_pipeline_only"
    EXTERNAL_FACTCHECK_ONLY = "external_factcheck_only"
    RAG1_ONLY = "rag1_only"
    RAG2_ONLY = "rag2_only"


_ACTIVE: dict[SystemVariant, set[PipelineId]] = {
    SystemVariant.FINVET_FULL: {PipelineId.RAG1, PipelineId.RAG2, PipelineId.FACTCHECK},
    SystemVariant.FACTCHECK_PIPELINE_ONLY: {PipelineId.FACTCHECK},
    SystemVariant.EXTERNAL_FACTCHECK_ONLY: {PipelineId.FACTCHECK},
    SystemVariant.RAG1_ONLY: {PipelineId.RAG1},
    SystemVariant.RAG2_ONLY: {PipelineId.RAG2},
}


@dataclass
class ProviderBundle:
    """Live objects the pipelines run against."""

    embedder: object
    completion_provider: object
    factcheck_client: object
    rag1_profile: ModelProfile
    rag2_profile: ModelProfile
    analyzer_profile: ModelProfile
    roles: ExpertRoleSet = field(default_factory=ExpertRoleSet)
    rating_map: object | None = None
    factcheck_cache: object | None = None


@dataclass(frozen=True)
class RunConfig:
    """One evaluation run: variant, data, split, and engine knobs."""

    variant: SystemVariant
    corpus_path: str
    split: SplitSpec = field(default_factory=SplitSpec)
    thresholds: TierThresholds = field(default_factory=TierThresholds)
    k: int = 5
    nprobe: int = 8
    nlist: int | None = None
    kmeans_seed: int = 0
    workers: int = 4
    trace: bool = False


# -- metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    """Per-class and aggregate classification metrics over the label set."""

    labels: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows: gold, cols: predicted
    per_class: dict
    accuracy: float
    weighted: dict
    macro: dict
    n: int

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": [list(row) for row in self.confusion],
            "per_class": self.per_class,
            "accuracy": self.accuracy,
            "weighted": self.weighted,
            "macro": self.macro,
            "n": self.n,
        }


def metrics_from_confusion(confusion) -> MetricsReport:
    """Compute the metric set from a 3x3 confusion matrix (rows = gold)."""
    labels = tuple(label.value for label in LABEL_ORDER)
    conf = tuple(tuple(int(x) for x in row) for row in confusion)
    if len(conf) != len(labels) or any(len(row) != len(labels) for row in conf):
        raise ValueError(f"confusion matrix must be {len(labels)}x{len(labels)}")
    n = sum(sum(row) for row in conf)
    if n == 0:
        raise ValueError("empty confusion matrix")

    per_class: dict[str, dict[str, float]] = {}
    for i, name in enumerate(labels):
        tp = conf[i][i]
        support = sum(conf[i])
        predicted = sum(conf[r][i] for r in range(len(labels)))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class[name] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": support,
        }

    accuracy = sum(conf[i][i] for i in range(len(labels))) / n
    weighted = {
        metric: sum(per_class[name][metric] * per_class[name]["support"] for name in labels) / n
        for metric in ("precision", "recall", "f1")
    }
    macro = {
        metric: sum(per_class[name][metric] for name in labels) / len(labels)
        for metric in ("precision", "recall", "f1")
    }
    return MetricsReport(
        labels=labels,
        confusion=conf,
        per_class=per_class,
        accuracy=accuracy,
        weighted=weighted,
        macro=macro,
        n=n,
    )


def compute_metrics(golds: list[Label], preds: list[Label]) -> MetricsReport:
    if len(golds) != len(preds):
        raise ValueError("gold/predicted length mismatch")
    idx = {label: i for i, label in enumerate(LABEL_ORDER)}
    confusion = [[0] * len(LABEL_ORDER) for _ in LABEL_ORDER]
    for gold, pred in zip(golds, preds):
        confusion[idx[gold]][idx[pred]] += 1
    return metrics_from_confusion(confusion)


def render_comparison_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """Aligned-columns text table: Approach / Acc. / Prec. / Rec. / F1."""
    headers = ("Approach", "Acc.", "Prec.", "Rec.", "F1")
    body = [
        (
            name,
            f"{m.accuracy:.2f}",
            f"{m.weighted['precision']:.2f}",
            f"{m.weighted['recall']:.2f}",
            f"{m.weighted['f1']:.2f}",
        )
        for name, m in rows
    ]
    widths = [max(len(headers[c]), *(len(r[c]) for r in body)) if body else len(headers[c]) for c in range(5)]
    lines = ["  ".join(h.ljust(widths[c]) for c, h in enumerate(headers))]
    lines.append("  ".join("-" * widths[c] for c in range(5)))
    for r in body:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in range(5)))
    return "\n".join(lines)


# -- evaluation ----------------------------------------------------------------


@dataclass
class EvalContext:
    """Everything thresholds-independent, shareable across sweep points."""

    config: RunConfig
    providers: ProviderBundle
    train: list[CorpusRecord]
    test: list[CorpusRecord]
    index: IvfFlatIndex
    ingestion: IngestionReport
    skipped_test_records: list[str]


@dataclass
class EvaluationRun:
    """Outputs of one evaluation: metrics, verdicts, and trace rows."""

    variant: SystemVariant
    metrics: MetricsReport
    verdicts: list[VerdictReport]
    per_claim: list[dict]
    ingestion: IngestionReport
    skipped_test_records: list[str]


def _record_prefix(doc_id: str) -> str:
    return doc_id.split("#", 1)[0]


def check_leakage(index: IvfFlatIndex, test: list[CorpusRecord]) -> None:
    """Abort when any test claim id appears among the indexed documents."""
    test_ids = {record.record_id for record in test}
    leaked = sorted({_record_prefix(d) for d in index.doc_ids} & test_ids)
    if leaked:
        raise LeakageError(f"test claim ids present in the knowledge base: {leaked[:5]}")


def build_context(config: RunConfig, providers: ProviderBundle) -> EvalContext:
    for profile in (providers.rag1_profile, providers.rag2_profile, providers.analyzer_profile):
        if profile.temperature != 0.0:
            raise ValueError(
                f"evaluation requires temperature 0 for run-to-run stability; "
                f"{profile.model_id.value} has {profile.temperature}"
            )
    records = parse_corpus(config.corpus_path)
    train, test = split_records(records, config.split)
    overlap = {r.record_id for r in train} & {r.record_id for r in test}
    if overlap:
        raise LeakageError(f"train/test splits share claim ids: {sorted(overlap)[:5]}")

    embedder = providers.embedder
    if not isinstance(embedder, CachingEmbedder):
        embedder = CachingEmbedder(embedder)
        providers.embedder = embedder

    index, ingestion = build_knowledge_base(
        train, embedder, nlist=config.nlist, kmeans_seed=config.kmeans_seed
    )
    check_leakage(index, test)

    skipped = []
    scorable = []
    for record in test:
        try:
            parse_label(record.label)
        except UnrecognizedLabelError:
            skipped.append(record.record_id)
            continue
        scorable.append(record)
    if skipped:
        logger.warning("skipping %d test record(s) with unrecognized gold labels", len(skipped))
    return EvalContext(
        config=config,
        providers=providers,
        train=train,
        test=scorable,
        index=index,
        ingestion=ingestion,
        skipped_test_records=skipped,
    )


def _claim_for(record: CorpusRecord) -> Claim:
    return Claim(id=record.record_id, text=record.claim, posted_at=record.date, author=record.author)


def _verify_record(
    ctx: EvalContext, thresholds: TierThresholds, variant: SystemVariant, record: CorpusRecord, audit
) -> VerdictReport:
    providers = ctx.providers
    claim = _claim_for(record)
    active = _ACTIVE[variant]

    def rag_result(profile: ModelProfile, pid: PipelineId):
        if pid not in active:
            return disabled_placeholder(pid)
        config = RagConfig(
            profile=profile,
            thresholds=thresholds,
            k=ctx.config.k,
            nprobe=ctx.config.nprobe,
            roles=providers.roles,
        )
        return rag_mod.verify(
            claim, ctx.index, providers.embedder, providers.completion_provider, config, audit=audit
        )

    r1 = rag_result(providers.rag1_profile, PipelineId.RAG1)
    r2 = rag_result(providers.rag2_profile, PipelineId.RAG2)

    if PipelineId.FACTCHECK in active:
        fallback_enabled = variant is not SystemVariant.EXTERNAL_FACTCHECK_ONLY
        r3 = factcheck_mod.verify(
            claim,
            providers.factcheck_client,
            providers.completion_provider if fallback_enabled else None,
            providers.analyzer_profile if fallback_enabled else None,
            providers.roles,
            rating_map=providers.rating_map,
            cache=providers.factcheck_cache,
            audit=audit,
        )
    else:
        r3 = disabled_placeholder(PipelineId.FACTCHECK)

    return integrate(claim.id, normalize(r1), normalize(r2), normalize(r3))


def run_variant(
    ctx: EvalContext, variant: SystemVariant, thresholds: TierThresholds | None = None
) -> EvaluationRun:
    """Evaluate one variant over the context's test split."""
    thresholds = thresholds if thresholds is not None else ctx.config.thresholds
    if not ctx.test:
        raise ValueError("test split has no scorable records (all gold labels unrecognized?)")
    audit_rows: list[dict] = []
    audit_lock = threading.Lock()

    def audit(row: dict):
        if ctx.config.trace:
            with audit_lock:
                audit_rows.append(row)

    results: dict[str, VerdictReport] = {}
    with ThreadPoolExecutor(max_workers=max(1, ctx.config.workers)) as pool:
        futures = {
            pool.submit(_verify_record, ctx, thresholds, variant, record, audit): record
            for record in ctx.test
        }
        for future, record in futures.items():
            results[record.record_id] = future.result()

    # Deterministic fold over claim-id order, independent of completion order.
    ordered = sorted(ctx.test, key=lambda r: r.record_id)
    golds = [parse_label(r.label) for r in ordered]
    verdicts = [results[r.record_id] for r in ordered]
    preds = [v.label for v in verdicts]
    metrics = compute_metrics(golds, preds)

    identity_gap = abs(metrics.weighted["recall"] - metrics.accuracy)
    if identity_gap > 1e-9:
        raise AssertionError(
            f"weighted recall != accuracy ({metrics.weighted['recall']} vs {metrics.accuracy})"
        )

    per_claim = []
    for record, gold, verdict in zip(ordered, golds, verdicts):
        per_claim.append(
            {
                "claim_id": record.record_id,
                "gold": gold.value,
                "predicted": verdict.label.value,
                "confidence": verdict.confidence,
                "decision_rule": verdict.decision_rule.value,
                "routes": {r.pipeline_id.value: r.route.value for r in verdict.contributing},
            }
        )
    if ctx.config.trace:
        trace_by_claim: dict[str, list[dict]] = {}
        for row in audit_rows:
            trace_by_claim.setdefault(row.get("claim_id", "?"), []).append(row)
        for row in per_claim:
            row["trace"] = sorted(
                trace_by_claim.get(row["claim_id"], []),
                key=lambda t: str(t.get("pipeline_id", "")),
            )

    return EvaluationRun(
        variant=variant,
        metrics=metrics,
        verdicts=verdicts,
        per_claim=per_claim,
        ingestion=ctx.ingestion,
        skipped_test_records=ctx.skipped_test_records,
    )


def evaluate(config: RunConfig, providers: ProviderBundle) -> EvaluationRun:
    """Full evaluation: ingest, guard against leakage, run, score."""
    ctx = build_context(config, providers)
    return run_variant(ctx, config.variant)


@dataclass(frozen=True)
class SweepPoint:
    theta_high: float
    theta_med: float
    metrics: MetricsReport
    tier1_fraction: float


def tier1_fraction(run: EvaluationRun) -> float:
    """Share of executed RAG results answered directly from retrieval."""
    rag_results = [
        r
        for v in run.verdicts
        for r in v.contributing
        if r.pipeline_id in (PipelineId.RAG1, PipelineId.RAG2) and r.evidence != "<pipeline disabled>"
    ]
    if not rag_results:
        return 0.0
    tier1 = sum(1 for r in rag_results if r.route.value == "tier1_direct")
    return tier1 / len(rag_results)


def threshold_sweep(
    config: RunConfig, providers: ProviderBundle, grid: list[tuple[float, float]]
) -> list[SweepPoint]:
    """Evaluate each (theta_high, theta_med) grid point on a shared context.

    Grid points violating theta_med <= theta_high are skipped with a warning.
    Embeddings and scripted responses are shared across points via the
    context's caches.
    """
    ctx = build_context(config, providers)
    points: list[SweepPoint] = []
    for theta_high, theta_med in grid:
        if theta_med > theta_high:
            logger.warning(
                "skipping invalid grid point (theta_high=%s, theta_med=%s)", theta_high, theta_med
            )
            continue
        thresholds = TierThresholds(theta_high=theta_high, theta_med=theta_med)
        run = run_variant(ctx, config.variant, thresholds)
        points.append(
            SweepPoint(
                theta_high=theta_high,
                theta_med=theta_med,
                metrics=run.metrics,
                tier1_fraction=tier1_fraction(run),
            )
        )
    return points


# -- artifacts -----------------------------------------------------------------


def write_artifacts(run: EvaluationRun, out_dir) -> dict[str, Path]:
    """Write metrics JSON, the comparison table, and per-claim JSONL traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.json",
        "table": out / "metrics_table.txt",
        "per_claim": out / "per_claim.jsonl",
    }
    paths["metrics"].write_text(
        json.dumps(run.metrics.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    paths["table"].write_text(
        render_comparison_table([(run.variant.value, run.metrics)]) + "\n", encoding="utf-8"
    )
    with paths["per_claim"].open("w", encoding="utf-8") as fh:
        for row in run.per_claim:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return paths
