"""
Command-line entry point: ``python -m lob_bench <subcommand>``.
"""

import argparse
import logging
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
import yaml
from pydantic import ValidationError

from lob_bench import __version__
from lob_bench.config import load_experiment_config, load_synth_config
from lob_bench.errors import ExperimentError, LobBenchError
from lob_bench.features import build_features, export_feature_matrix
from lob_bench.harness import run_experiment
from lob_bench.ingest import clean, parse_quote_files, write_cleaning_report, write_quote_file
from lob_bench.logging_setup import setup_logging
from lob_bench.pydantic_models import ColumnMapping, LabelingParams, SynthConfig
from lob_bench.reports import emit_reports, load_report, write_table
from lob_bench.synth import write_synth_files
from lob_bench.windowing import DEFAULT_ALPHAS, frame_days, label_distribution

logger = logging.getLogger("lob_bench.cli")

EXIT_OK = 0
EXIT_FAILED = 1


def _load_mapping(path: Optional[str]) -> ColumnMapping:
    if path is None:
        return ColumnMapping()
    with open(path, encoding="utf-8") as f:
        return ColumnMapping.model_validate(yaml.safe_load(f) or {})


def _parse_and_clean(inputs: Sequence[str], mapping: ColumnMapping):
    parsed = parse_quote_files([Path(p) for p in inputs], mapping)
    for diagnostic in parsed.errors:
        logger.warning(f"{diagnostic.path}:{diagnostic.line_number}: {diagnostic.message}")
    events, report = clean(parsed)
    return parsed, events, report


def cmd_synth(args: argparse.Namespace) -> int:
    overrides = {
        "symbol": args.symbol,
        "n_events": args.n_events,
        "n_days": args.n_days,
        "seed": args.seed,
        "trend_signal_strength": args.trend,
    }
    if args.config:
        config = load_synth_config(args.config, overrides)
    else:
        config = SynthConfig.model_validate({k: v for k, v in overrides.items() if v is not None})
    write_synth_files(config, args.out, _load_mapping(args.mapping))
    return EXIT_OK


def cmd_clean(args: argparse.Namespace) -> int:
    mapping = _load_mapping(args.mapping)
    parsed, events, report = _parse_and_clean(args.inputs, mapping)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for day, frame in events.groupby("day", sort=True):
        write_quote_file(frame, out / f"cleaned_day{int(day):03d}.csv", mapping)
    write_cleaning_report(report, out / "cleaning_report.json")
    errors = pd.DataFrame(
        [e.model_dump() for e in parsed.errors], columns=["path", "line_number", "message"]
    )
    write_table(errors, out / "parse_errors.csv")
    logger.info(f"Cleaned quotes written to {out}")
    return EXIT_OK


def cmd_featurize(args: argparse.Namespace) -> int:
    _, events, _ = _parse_and_clean(args.inputs, _load_mapping(args.mapping))
    days = frame_days(events, args.k)
    rows = build_features(days, LabelingParams(alpha=args.alpha, k=args.k))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_feature_matrix(rows, out / "features.csv")
    alphas = sorted(set(DEFAULT_ALPHAS) | {args.alpha})
    shares = label_distribution(days, alphas)
    write_table(
        pd.DataFrame([s.model_dump(mode="json") for s in shares]),
        out / "label_distribution.csv",
    )
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config, {"seed": args.seed})
    try:
        report = run_experiment(config, n_jobs=args.jobs, show_progress=not args.quiet)
    except ExperimentError as e:
        report = getattr(e, "report", None)
        if report is None:
            raise
        emit_reports(report, args.out)
        logger.error(str(e))
        return EXIT_FAILED
    emit_reports(report, args.out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    emit_reports(load_report(args.source), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lob_bench",
        description="Limit order book feature engineering and mid-price prediction benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--quiet", action="store_true", help="Hide progress bars.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="Generate synthetic daily quote files.")
    synth.add_argument("--config", help="YAML file with SynthConfig fields.")
    synth.add_argument("--symbol")
    synth.add_argument("--n-events", type=int, dest="n_events")
    synth.add_argument("--n-days", type=int, dest="n_days")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--trend", type=float, help="trend_signal_strength in [0, 1].")
    synth.add_argument("--mapping", help="YAML file with the output column mapping.")
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    clean_cmd = subparsers.add_parser("clean", help="Parse and clean quote files.")
    clean_cmd.add_argument("inputs", nargs="+")
    clean_cmd.add_argument("--mapping", help="YAML file with the input column mapping.")
    clean_cmd.add_argument("--out", required=True)
    clean_cmd.set_defaults(func=cmd_clean)

    featurize = subparsers.add_parser("featurize", help="Write labeled V1-V22 feature rows.")
    featurize.add_argument("inputs", nargs="+")
    featurize.add_argument("--mapping", help="YAML file with the input column mapping.")
    featurize.add_argument("--k", type=int, default=5)
    featurize.add_argument("--alpha", type=float, default=1e-5)
    featurize.add_argument("--out", required=True)
    featurize.set_defaults(func=cmd_featurize)

    experiment = subparsers.add_parser("experiment", help="Run a benchmark experiment.")
    experiment.add_argument("--config", required=True)
    experiment.add_argument("--seed", type=int, help="Override the master seed.")
    experiment.add_argument("--jobs", type=int, default=1)
    experiment.add_argument("--out", required=True)
    experiment.set_defaults(func=cmd_experiment)

    report = subparsers.add_parser("report", help="Re-emit report tables from a saved report.")
    report.add_argument("--from", dest="source", required=True)
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(Path(args.out) / "logs", level=logging.WARNING if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except (LobBenchError, ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {repr(e)}", exc_info=True)
        return EXIT_FAILED
