"""
Training-sample winsorization and standardization, and stratified sampling.

Statistics are fit on training rows only and applied unchanged to test rows.
"""

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from lob_bench.errors import ParameterError, SamplingShortageError
from lob_bench.pydantic_models import (
    LABEL_CODES,
    LABEL_ORDER,
    ColumnStat,
    ColumnStats,
    Label,
    SamplingPlan,
    is_known_feature,
)

logger = logging.getLogger(__name__)

PREPROCESSED_FLAG = "preprocessed"
_IQR_FACTOR = 1.5


def feature_columns(rows: pd.DataFrame) -> list[str]:
    return [column for column in rows.columns if is_known_feature(str(column))]


def fit_column(values: np.ndarray) -> ColumnStat:
    """Quartiles (linear interpolation), winsorization bounds, then mean/std of the clamped values."""
    q1, q3 = np.quantile(values, [0.25, 0.75], method="linear")
    iqr = q3 - q1
    lower = q1 - _IQR_FACTOR * iqr
    upper = q3 + _IQR_FACTOR * iqr
    clamped = np.clip(values, lower, upper)
    stddev = float(clamped.std())
    return ColumnStat(
        q1=float(q1),
        q3=float(q3),
        iqr=float(iqr),
        lower=float(lower),
        upper=float(upper),
        mean=float(clamped.mean()),
        stddev=stddev,
        constant=stddev == 0.0,
    )


def fit_stats(train_rows: pd.DataFrame, columns: Sequence[str] | None = None) -> ColumnStats:
    """
    Raises:
        ParameterError: With fewer than 2 rows or non-finite values.
    """
    if len(train_rows) < 2:
        raise ParameterError("Preprocessing statistics need at least 2 training rows")
    columns = list(columns) if columns is not None else feature_columns(train_rows)

    stats: dict[str, ColumnStat] = {}
    for column in columns:
        if column not in train_rows.columns:
            raise ParameterError(f"Training rows have no column '{column}'")
        values = train_rows[column].to_numpy(dtype=np.float64)
        if not np.isfinite(values).all():
            raise ParameterError(f"Column '{column}' has non-finite training values")
        stats[column] = fit_column(values)
        if stats[column].constant:
            logger.warning(f"Column '{column}' is constant on the training sample; mapped to 0")
    return ColumnStats(columns=stats)


def transform(
    rows: pd.DataFrame, stats: ColumnStats, columns: Sequence[str] | None = None
) -> pd.DataFrame:
    """
    Clamp to the training bounds, then z-score. Constant training columns map
    to 0. Non-feature columns are passed through.

    Raises:
        ParameterError: For a feature without statistics or rows that were
            already transformed.
    """
    if rows.attrs.get(PREPROCESSED_FLAG):
        raise ParameterError("Rows are already preprocessed")
    columns = list(columns) if columns is not None else feature_columns(rows)
    unknown = [column for column in columns if column not in stats.columns]
    if unknown:
        raise ParameterError(f"No preprocessing statistics for {unknown}")

    out = rows.copy()
    for column in columns:
        stat = stats.columns[column]
        if stat.constant:
            out[column] = 0.0
            continue
        values = np.clip(rows[column].to_numpy(dtype=np.float64), stat.lower, stat.upper)
        out[column] = (values - stat.mean) / stat.stddev
    out.attrs[PREPROCESSED_FLAG] = True
    return out


def class_quotas(total: int, ratio: dict[Label, float]) -> dict[Label, int]:
    """Largest-remainder allocation of ``total`` rows; remainder ties go in class order."""
    shares = [total * ratio.get(label, 0.0) for label in LABEL_ORDER]
    quotas = [int(np.floor(share)) for share in shares]
    leftover = total - sum(quotas)
    order = sorted(
        range(len(LABEL_ORDER)), key=lambda c: (-(shares[c] - quotas[c]), c)
    )
    for c in order[:leftover]:
        quotas[c] += 1
    return dict(zip(LABEL_ORDER, quotas))


def check_supply(labels: np.ndarray, quotas: dict[Label, int]) -> None:
    for label, quota in quotas.items():
        available = int(np.count_nonzero(labels == LABEL_CODES[label]))
        if available < quota:
            raise SamplingShortageError(label.value, available, quota)


def draw_stratified(
    labels: np.ndarray,
    train_size: int,
    ratio: dict[Label, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Positions of a stratified draw without replacement, sorted ascending."""
    labels = np.asarray(labels)
    quotas = class_quotas(train_size, ratio)
    check_supply(labels, quotas)
    picks = []
    for label in LABEL_ORDER:
        pool = np.flatnonzero(labels == LABEL_CODES[label])
        picks.append(rng.choice(pool, size=quotas[label], replace=False))
    return np.sort(np.concatenate(picks))


def stratified_indices(labels: np.ndarray, plan: SamplingPlan) -> tuple[np.ndarray, np.ndarray]:
    """
    Train positions drawn by class quota; test positions drawn uniformly from
    the remaining rows.

    Raises:
        SamplingShortageError: If a class (or the remainder, reported as
            'test') is too small.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(plan.seed)
    train = draw_stratified(labels, plan.train_size, plan.ratio, rng)
    remaining = np.setdiff1d(np.arange(labels.size), train, assume_unique=True)
    if remaining.size < plan.test_size:
        raise SamplingShortageError("test", int(remaining.size), plan.test_size)
    test = np.sort(rng.choice(remaining, size=plan.test_size, replace=False))
    return train, test


def stratified_sample(rows: pd.DataFrame, plan: SamplingPlan) -> tuple[pd.DataFrame, pd.DataFrame]:
    train, test = stratified_indices(rows["label"].to_numpy(), plan)
    return rows.iloc[train], rows.iloc[test]


def save_stats(stats: ColumnStats, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(stats.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_stats(path: str | Path) -> ColumnStats:
    return ColumnStats.model_validate_json(Path(path).read_text(encoding="utf-8"))
