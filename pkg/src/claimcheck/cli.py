"""Command-line entry points: ingest, verify, evaluate, sweep.

Exit codes: 0 success; 2 malformed corpus or invalid run configuration;
3 I/O failure; 4 no provider configured in live mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeoutError
from pathlib import Path

import yaml

from . import factcheck as factcheck_mod
from . import rag as rag_mod
from .bundled import bundled_corpus_path, bundled_mock_script_path
from .config import AppConfig, build_providers, load_config
from .errors import ClaimcheckError, ConfigError, MalformedFileError
from .evalharness import (
    RunConfig,
    SystemVariant,
    evaluate,
    render_comparison_table,
    threshold_sweep,
    write_artifacts,
)
from .index import IvfFlatIndex
from .ingest import build_knowledge_base, parse_corpus
from .model import Claim, PipelineId, error_placeholder, RouteTag
from .rag import RagConfig
from .verdict import integrate, normalize

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 3
EXIT_UNCONFIGURED = 4


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to the YAML configuration file")
    parser.add_argument("--theta-high", type=float, dest="theta_high")
    parser.add_argument("--theta-med", type=float, dest="theta_med")
    parser.add_argument("--k", type=int)
    parser.add_argument("--nprobe", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument(
        "--providers",
        help="provider mode: 'mock:<script>' (bundled script if omitted: 'mock'), or 'live'",
    )


def _flags_layer(args: argparse.Namespace) -> dict:
    layer = {
        "theta_high": getattr(args, "theta_high", None),
        "theta_med": getattr(args, "theta_med", None),
        "k": getattr(args, "k", None),
        "nprobe": getattr(args, "nprobe", None),
        "seed": getattr(args, "seed", None),
    }
    providers = getattr(args, "providers", None)
    if providers:
        if providers == "live":
            layer["provider_mode"] = "live"
        elif providers == "mock":
            layer["provider_mode"] = "mock"
            layer["mock_script"] = str(bundled_mock_script_path())
        elif providers.startswith("mock:"):
            layer["provider_mode"] = "mock"
            layer["mock_script"] = providers.split(":", 1)[1]
        else:
            raise ConfigError(f"unknown --providers value: {providers!r}")
    return layer


def _load_app_config(args: argparse.Namespace) -> AppConfig:
    return load_config(getattr(args, "config", None), flags=_flags_layer(args))


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        print(f"error: corpus file not found: {corpus_path}", file=sys.stderr)
        return EXIT_IO
    try:
        config = _load_app_config(args)
        providers, _ = build_providers(config)
        records = parse_corpus(corpus_path)
        index, report = build_knowledge_base(records, providers.embedder, nlist=config.nlist)
    except MalformedFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ClaimcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        index.save(args.out)
        report_json = json.dumps(report.to_dict(), sort_keys=True, indent=2)
        if args.report:
            Path(args.report).write_text(report_json + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"indexed {report.documents} documents from {report.records} records "
        f"({len(report.quarantined)} quarantined, {len(report.zero_evidence)} without evidence) "
        f"-> {args.out}"
    )
    if report.quarantined:
        for entry in report.quarantined:
            print(f"  quarantined {entry['record_id']}: label {entry['label']!r}")
    return EXIT_OK


def _verify_claim(claim: Claim, index, providers, config: AppConfig, audit=None):
    """Fan the three pipelines out concurrently under a shared deadline."""
    thresholds = config.thresholds()

    def rag(profile):
        rc = RagConfig(
            profile=profile,
            thresholds=thresholds,
            k=config.k,
            nprobe=config.nprobe,
            roles=providers.roles,
        )
        return rag_mod.verify(claim, index, providers.embedder, providers.completion_provider, rc, audit=audit)

    def fc():
        return factcheck_mod.verify(
            claim,
            providers.factcheck_client,
            providers.completion_provider,
            providers.analyzer_profile,
            providers.roles,
            rating_map=providers.rating_map,
            cache=providers.factcheck_cache,
            audit=audit,
        )

    jobs = {
        PipelineId.RAG1: lambda: rag(providers.rag1_profile),
        PipelineId.RAG2: lambda: rag(providers.rag2_profile),
        PipelineId.FACTCHECK: fc,
    }
    results = {}
    pool = ThreadPoolExecutor(max_workers=3)
    try:
        futures = {pid: pool.submit(job) for pid, job in jobs.items()}
        for pid, future in futures.items():
            route = RouteTag.LLM_FALLBACK if pid is PipelineId.FACTCHECK else RouteTag.TIER3_ROLEBASED
            try:
                results[pid] = future.result(timeout=config.deadline)
            except FutureTimeoutError:
                results[pid] = error_placeholder(pid, "deadline exceeded", route)
            except ClaimcheckError as exc:
                results[pid] = error_placeholder(pid, str(exc), route)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
    return integrate(
        claim.id,
        normalize(results[PipelineId.RAG1]),
        normalize(results[PipelineId.RAG2]),
        normalize(results[PipelineId.FACTCHECK]),
    )


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        config = _load_app_config(args)
        providers, configured = build_providers(config)
    except ClaimcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if config.provider_mode == "live" and not configured:
        print(
            "error: live mode with no providers configured "
            "(no model endpoints, no fact-check API key)",
            file=sys.stderr,
        )
        return EXIT_UNCONFIGURED

    if args.no_index:
        index = IvfFlatIndex.empty(config.dimension)
    else:
        if not args.index or not Path(args.index).exists():
            print(f"error: index file not found: {args.index}", file=sys.stderr)
            return EXIT_IO
        try:
            index = IvfFlatIndex.load(args.index)
        except ClaimcheckError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO

    audit_rows = []
    audit = audit_rows.append if args.trace else None
    claim = Claim(id=args.claim_id, text=args.claim_text)
    report = _verify_claim(claim, index, providers, config, audit=audit)

    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for row in audit_rows:
                fh.write(json.dumps(row, sort_keys=True, default=str) + "\n")

    if args.pretty:
        print(f"claim     : {claim.text}")
        print(f"verdict   : {report.label.value}")
        print(f"confidence: {report.confidence:.4f}")
        print(f"evidence  : {report.evidence}")
        print(f"source    : {report.source.kind.value} ({report.source.reference})")
        print(f"rule      : {report.decision_rule.value}")
        for r in report.contributing:
            print(
                f"  - {r.pipeline_id.value}: {r.label.value} "
                f"({r.confidence:.4f}, {r.route.value})"
            )
    else:
        print(report.to_json())
    return EXIT_OK


def _load_run_file(path: str):
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a mapping")
    return raw


def _build_run(args: argparse.Namespace) -> tuple[RunConfig, object]:
    raw = _load_run_file(args.run_config)
    variant_name = raw.get("variant", "finvet_full")
    try:
        variant = SystemVariant(variant_name)
    except ValueError:
        valid = ", ".join(v.value for v in SystemVariant)
        raise ConfigError(f"unknown variant {variant_name!r}; valid variants: {valid}")
    corpus = raw.get("corpus")
    if corpus == "bundled":
        corpus = str(bundled_corpus_path())
    if not corpus or not Path(corpus).exists():
        raise ConfigError(f"run config names a missing corpus: {corpus!r}")

    config = load_config(args.run_config, flags=_flags_layer(args))
    providers, configured = build_providers(config)
    if config.provider_mode == "live" and not configured:
        raise ConfigError("live mode with no providers configured")
    run = RunConfig(
        variant=variant,
        corpus_path=str(corpus),
        split=config.split_spec(),
        thresholds=config.thresholds(),
        k=config.k,
        nprobe=config.nprobe,
        nlist=config.nlist,
        workers=config.workers,
        trace=bool(raw.get("trace", config.trace)),
    )
    return run, providers


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        run_config, providers = _build_run(args)
        run = evaluate(run_config, providers)
    except ClaimcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        paths = write_artifacts(run, args.out)
    except OSError as exc:
        print(f"error: cannot write artifacts: {exc}", file=sys.stderr)
        return EXIT_IO
    print(render_comparison_table([(run.variant.value, run.metrics)]))
    print(f"\nwrote {paths['metrics']}, {paths['table']}, {paths['per_claim']}")
    if run.skipped_test_records:
        print(f"skipped {len(run.skipped_test_records)} test record(s) with unrecognized labels")
    return EXIT_OK


def _parse_grid(arg: str) -> list[float]:
    try:
        return [float(x) for x in arg.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"invalid grid values: {arg!r}") from exc


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        run_config, providers = _build_run(args)
        highs = _parse_grid(args.grid_high)
        meds = _parse_grid(args.grid_med)
        grid = [(th, tm) for th in highs for tm in meds]
        points = threshold_sweep(run_config, providers, grid)
    except ClaimcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    rows = [
        (f"high={p.theta_high:g} med={p.theta_med:g}", p.metrics)
        for p in points
    ]
    table = render_comparison_table(rows)
    payload = [
        {
            "theta_high": p.theta_high,
            "theta_med": p.theta_med,
            "tier1_fraction": p.tier1_fraction,
            "metrics": p.metrics.to_dict(),
        }
        for p in points
    ]
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (out / "sweep_table.txt").write_text(table + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write artifacts: {exc}", file=sys.stderr)
        return EXIT_IO
    print(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimcheck",
        description="Claim verification engine: dual retrieval pipelines, "
        "external fact-checking, confidence-voted verdicts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build and save a knowledge-base index from a corpus")
    p_ingest.add_argument("corpus", help="corpus JSON file")
    p_ingest.add_argument("-o", "--out", required=True, help="index output path")
    p_ingest.add_argument("--report", help="write the ingestion report JSON here")
    _common_flags(p_ingest)

    p_verify = sub.add_parser("verify", help="verify a single claim")
    p_verify.add_argument("claim_text", help="the claim to verify")
    p_verify.add_argument("--index", help="knowledge-base index file")
    p_verify.add_argument("--no-index", action="store_true", help="run retrieval-less")
    p_verify.add_argument("--claim-id", default="cli-claim")
    p_verify.add_argument("--pretty", action="store_true", help="human-readable output block")
    p_verify.add_argument("--trace", help="write a JSONL audit log here")
    _common_flags(p_verify)

    p_eval = sub.add_parser("evaluate", help="run a system variant over a corpus split")
    p_eval.add_argument("run_config", help="run configuration YAML (variant, corpus, settings)")
    p_eval.add_argument("--out", default="eval_output", help="artifact output directory")
    _common_flags(p_eval)

    p_sweep = sub.add_parser("sweep", help="threshold sweep over a grid")
    p_sweep.add_argument("run_config", help="run configuration YAML")
    p_sweep.add_argument("--out", default="sweep_output", help="artifact output directory")
    p_sweep.add_argument("--grid-high", required=True, help="comma-separated theta_high values")
    p_sweep.add_argument("--grid-med", required=True, help="comma-separated theta_med values")
    _common_flags(p_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "verify": cmd_verify,
        "evaluate": cmd_evaluate,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
