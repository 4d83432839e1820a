"""
Classification metrics, the one-sided Wilcoxon signed-rank test, Benjamini-
Hochberg adjustment and elastic-net selection-frequency importance.
"""

import logging
from collections import Counter
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from lob_bench.errors import ParameterError
from lob_bench.pydantic_models import (
    ALL_FEATURES,
    LABEL_CODES,
    LABEL_ORDER,
    ClassCounts,
    ClassMetrics,
    ConfusionCounts,
    ImportanceCount,
    ImportanceEntry,
    ImportanceReport,
    Label,
    MetricsReport,
    TrainedModel,
    WilcoxonResult,
)

logger = logging.getLogger(__name__)

EXACT_MAX_N = 25
DEFAULT_IMPORTANCE_THRESHOLD = 0.8


def _as_codes(labels: Iterable) -> np.ndarray:
    """Integer class codes from codes or label names, in any sequence type."""
    values = labels if isinstance(labels, np.ndarray) else list(labels)
    arr = np.asarray(values)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if arr.dtype.kind in "iu":
        codes = arr.astype(np.int64).ravel()
        if codes.min() < 0 or codes.max() >= len(LABEL_ORDER):
            raise ParameterError(f"Class codes must lie in 0..{len(LABEL_ORDER) - 1}")
        return codes
    return np.array([LABEL_CODES[Label(label)] for label in values], dtype=np.int64)


def _ratio(numerator: int, denominator: int) -> tuple[float, bool]:
    if denominator == 0:
        return 0.0, True
    return numerator / denominator, False


def score(predicted: Iterable, actual: Iterable) -> MetricsReport:
    """
    Per-class and macro precision, recall and F1. Zero denominators give 0
    with the matching ``*_undefined`` flag; the macro mean counts them as 0.

    Raises:
        ParameterError: On a length mismatch or empty input.
    """
    predicted = _as_codes(predicted)
    actual = _as_codes(actual)
    if predicted.size != actual.size:
        raise ParameterError(
            f"Predicted ({predicted.size}) and actual ({actual.size}) lengths differ"
        )
    if actual.size == 0:
        raise ParameterError("Cannot score an empty prediction set")

    n_classes = len(LABEL_ORDER)
    table = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(table, (actual, predicted), 1)

    per_class: dict[Label, ClassMetrics] = {}
    counts: dict[Label, ClassCounts] = {}
    for c, label in enumerate(LABEL_ORDER):
        tp = int(table[c, c])
        fp = int(table[:, c].sum()) - tp
        fn = int(table[c, :].sum()) - tp
        precision, p_undefined = _ratio(tp, tp + fp)
        recall, r_undefined = _ratio(tp, tp + fn)
        if precision + recall > 0:
            f1, f_undefined = 2 * precision * recall / (precision + recall), False
        else:
            f1, f_undefined = 0.0, True
        counts[label] = ClassCounts(tp=tp, fp=fp, fn=fn)
        per_class[label] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f1,
            precision_undefined=p_undefined,
            recall_undefined=r_undefined,
            f1_undefined=f_undefined,
        )

    return MetricsReport(
        n=int(actual.size),
        per_class=per_class,
        macro_precision=float(np.mean([m.precision for m in per_class.values()])),
        macro_recall=float(np.mean([m.recall for m in per_class.values()])),
        macro_f1=float(np.mean([m.f1 for m in per_class.values()])),
        confusion=ConfusionCounts(table=table.tolist(), per_class=counts),
    )


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments per value of 2W (ranks doubled to stay integral)."""
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for rank in doubled_ranks.tolist():
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[: counts.size - rank]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(diffs: Sequence[float]) -> WilcoxonResult:
    """
    One-sided test of "median difference > 0".

    Zeros are dropped and |d| ranked with average ranks for ties; W is the sum
    of positive ranks. For n <= 25 p = P(W >= w) over all 2^n sign assignments;
    above that a normal approximation with continuity and tie correction.

    Raises:
        ParameterError: For an empty or non-finite input.
    """
    d = np.asarray(diffs, dtype=np.float64)
    if d.size == 0:
        raise ParameterError("Wilcoxon test needs at least one difference")
    if not np.isfinite(d).all():
        raise ParameterError("Wilcoxon differences must be finite")

    nonzero = d[d != 0]
    n = int(nonzero.size)
    if n == 0:
        message = "All paired differences are zero; p set to 1"
        logger.warning(message)
        return WilcoxonResult(n=0, w=0.0, p=1.0, method="degenerate", diagnostics=[message])

    ranks = rankdata(np.abs(nonzero), method="average")
    w = float(ranks[nonzero > 0].sum())

    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_counts(doubled)
        threshold = int(round(2 * w))
        p = int(counts[threshold:].sum()) / 2**n
        return WilcoxonResult(n=n, w=w, p=p, method="exact")

    mean = n * (n + 1) / 4
    _, ties = np.unique(np.abs(nonzero), return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24 - float((ties**3 - ties).sum()) / 48
    z = (w - mean - 0.5) / np.sqrt(variance)
    return WilcoxonResult(n=n, w=w, p=float(norm.sf(z)), method="normal")


def fdr_adjust(raw_p: Sequence[float]) -> np.ndarray:
    """
    Benjamini-Hochberg step-up adjustment, returned in input order.

    Raises:
        ParameterError: If any p lies outside [0, 1].
    """
    p = np.asarray(raw_p, dtype=np.float64)
    if p.size == 0:
        return p
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise ParameterError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)
    out = np.empty(m)
    out[order] = adjusted
    return out


def _feature_sort_key(name: str) -> tuple[int, int]:
    if name in ALL_FEATURES:
        return 0, ALL_FEATURES.index(name)
    return 1, int("".join(ch for ch in name if ch.isdigit()) or 0)


def importance(
    models_by_stock: Mapping[str, Sequence[TrainedModel]],
    threshold: float = DEFAULT_IMPORTANCE_THRESHOLD,
) -> ImportanceReport:
    """
    Fraction of ENet models selecting each feature (coefficient != 0) per stock
    and class; high impact when the fraction reaches ``threshold``. The
    histogram counts, per (class, feature), the stocks where it is high impact.

    Raises:
        ParameterError: If any model is not an ENet model.
    """
    entries: list[ImportanceEntry] = []
    high_counts: Counter = Counter()
    seen_keys: set[tuple[Label, str]] = set()

    for stock, models in models_by_stock.items():
        totals: Counter = Counter()
        selected: Counter = Counter()
        for model in models:
            if model.kind != "enet":
                raise ParameterError("Importance is defined for ENet models only")
            for row, label in enumerate(model.classes):
                for column, feature in enumerate(model.feature_order):
                    totals[(label, feature)] += 1
                    if model.coef[row, column] != 0:
                        selected[(label, feature)] += 1

        keys = sorted(
            totals,
            key=lambda key: (LABEL_ORDER.index(key[0]), _feature_sort_key(key[1])),
        )
        for label, feature in keys:
            fraction = selected[(label, feature)] / totals[(label, feature)]
            high = fraction >= threshold
            entries.append(
                ImportanceEntry(
                    stock=stock,
                    label=label,
                    feature=feature,
                    n_models=totals[(label, feature)],
                    n_selected=selected[(label, feature)],
                    fraction=fraction,
                    high_impact=high,
                )
            )
            seen_keys.add((label, feature))
            if high:
                high_counts[(label, feature)] += 1

    histogram = [
        ImportanceCount(label=label, feature=feature, n_stocks=high_counts[(label, feature)])
        for label, feature in sorted(
            seen_keys, key=lambda key: (LABEL_ORDER.index(key[0]), _feature_sort_key(key[1]))
        )
    ]
    return ImportanceReport(threshold=threshold, entries=entries, histogram=histogram)
