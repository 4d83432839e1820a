"""
CSV and JSON report tables of a benchmark run.
"""

import json
import logging
from pathlib import Path

import pandas as pd

from lob_bench.errors import ExperimentError
from lob_bench.pydantic_models import LABEL_ORDER, BenchmarkReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"

CLEANING_RULES = ["out_of_hours", "invalid", "zero_quantity", "price_jump", "wide_spread"]

METRIC_KEYS = ["stock", "learner", "setup"]

REPORT_COLUMNS: dict[str, list[str]] = {
    "metrics.csv": METRIC_KEYS + ["n_repeats", "precision", "recall", "f1"],
    "metrics_by_repeat.csv": METRIC_KEYS
    + ["repeat", "precision", "recall", "f1", "converged", "n_features"],
    "per_class_f1.csv": METRIC_KEYS + ["label", "f1"],
    "f1_deltas.csv": ["stock", "learner", "strategy", "repeat", "f1_delta"],
    "significance.csv": [
        "stock",
        "learner",
        "strategy",
        "n",
        "w",
        "raw_p",
        "adjusted_p",
        "significant",
    ],
    "significance_adjusted_p.csv": ["learner", "stock"],
    "importance.csv": [
        "stock",
        "label",
        "feature",
        "n_models",
        "n_selected",
        "fraction",
        "high_impact",
    ],
    "importance_histogram.csv": ["label", "feature", "n_stocks"],
    "timings.csv": METRIC_KEYS + ["n_repeats", "median_seconds", "total_seconds"],
    "label_distribution.csv": ["stock", "alpha", "label", "count", "proportion"],
    "quote_summary.csv": ["stock", "statistic", "mean", "median", "std", "min", "max"],
    "cleaning.csv": ["stock", "rule", "removed"],
    "failures.csv": ["stock", "repeat", "error"],
}


def _records(models) -> list[dict]:
    return [m.model_dump(mode="json") for m in models]


def _frame(records: list[dict], name: str) -> pd.DataFrame:
    if not records:
        return pd.DataFrame(columns=REPORT_COLUMNS[name])
    return pd.DataFrame.from_records(records)


def metrics_table(report: BenchmarkReport) -> pd.DataFrame:
    """Median precision, recall and F1 over repeats per stock, learner and setup."""
    frame = _frame(_records(report.metrics), "metrics.csv")
    if frame.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS["metrics.csv"])
    grouped = frame.groupby(METRIC_KEYS, sort=False)
    table = grouped[["precision", "recall", "f1"]].median()
    table.insert(0, "n_repeats", grouped.size())
    return table.reset_index()


def metrics_by_repeat_table(report: BenchmarkReport) -> pd.DataFrame:
    frame = _frame(_records(report.metrics), "metrics_by_repeat.csv")
    return frame.reindex(columns=REPORT_COLUMNS["metrics_by_repeat.csv"])


def per_class_table(report: BenchmarkReport) -> pd.DataFrame:
    records = [
        {
            "stock": m.stock,
            "learner": m.learner,
            "setup": m.setup,
            "label": label.value,
            "f1": float(pd.Series([r.per_class_f1[label] for r in group]).median()),
        }
        for m, group in _per_class_groups(report)
        for label in LABEL_ORDER
    ]
    return _frame(records, "per_class_f1.csv")


def _per_class_groups(report: BenchmarkReport):
    groups: dict[tuple[str, str, str], list] = {}
    for m in report.metrics:
        groups.setdefault((m.stock, m.learner, m.setup), []).append(m)
    return [(group[0], group) for group in groups.values()]


def adjusted_p_pivot(report: BenchmarkReport) -> pd.DataFrame:
    """Adjusted p-values with one row per (learner, stock) and one column per strategy."""
    frame = _frame(_records(report.significance), "significance.csv")
    if frame.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS["significance_adjusted_p.csv"])
    pivot = frame.pivot_table(
        index=["learner", "stock"], columns="strategy", values="adjusted_p", sort=False
    )
    pivot.columns.name = None
    return pivot.reset_index()


def timings_table(report: BenchmarkReport) -> pd.DataFrame:
    frame = _frame(_records(report.manifest.timings), "timings.csv")
    if frame.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS["timings.csv"])
    grouped = frame.groupby(METRIC_KEYS, sort=False)["seconds"]
    table = pd.DataFrame(
        {
            "n_repeats": grouped.size(),
            "median_seconds": grouped.median(),
            "total_seconds": grouped.sum(),
        }
    )
    return table.reset_index()


def cleaning_table(report: BenchmarkReport) -> pd.DataFrame:
    records = []
    for stock, cleaning in report.cleaning.items():
        for rule in CLEANING_RULES:
            records.append(
                {"stock": stock, "rule": rule, "removed": getattr(cleaning, f"dropped_{rule}")}
            )
    return _frame(records, "cleaning.csv")


def report_tables(report: BenchmarkReport) -> dict[str, pd.DataFrame]:
    importance = report.importance
    return {
        "metrics.csv": metrics_table(report),
        "metrics_by_repeat.csv": metrics_by_repeat_table(report),
        "per_class_f1.csv": per_class_table(report),
        "f1_deltas.csv": _frame(_records(report.deltas), "f1_deltas.csv"),
        "significance.csv": _frame(_records(report.significance), "significance.csv"),
        "significance_adjusted_p.csv": adjusted_p_pivot(report),
        "importance.csv": _frame(
            _records(importance.entries) if importance else [], "importance.csv"
        ),
        "importance_histogram.csv": _frame(
            _records(importance.histogram) if importance else [], "importance_histogram.csv"
        ),
        "timings.csv": timings_table(report),
        "label_distribution.csv": _frame(
            _records(report.label_distribution), "label_distribution.csv"
        ),
        "quote_summary.csv": _frame(_records(report.quote_summary), "quote_summary.csv"),
        "cleaning.csv": cleaning_table(report),
        "failures.csv": _frame(_records(report.failures), "failures.csv"),
    }


def write_table(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def emit_reports(report: BenchmarkReport, outdir: str | Path) -> list[Path]:
    """
    Write every report table plus ``manifest.json`` and ``benchmark_report.json``.

    Raises:
        ExperimentError: If the output folder cannot be written.
    """
    outdir = Path(outdir)
    written: list[Path] = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        for name, frame in report_tables(report).items():
            written.append(write_table(frame, outdir / name))

        manifest_path = outdir / "manifest.json"
        manifest_path.write_text(
            json.dumps(report.manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        written.append(manifest_path)

        report_path = outdir / "benchmark_report.json"
        report_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        written.append(report_path)
    except OSError as e:
        raise ExperimentError(f"Could not write reports to {outdir}: {e}") from e

    logger.info(f"Wrote {len(written)} report file(s) to {outdir}")
    return written


def load_report(path: str | Path) -> BenchmarkReport:
    """
    Raises:
        ExperimentError: If the file does not exist.
    """
    path = Path(path)
    if path.is_dir():
        path = path / "benchmark_report.json"
    if not path.exists():
        raise ExperimentError(f"Report not found: {path}")
    return BenchmarkReport.model_validate_json(path.read_text(encoding="utf-8"))
