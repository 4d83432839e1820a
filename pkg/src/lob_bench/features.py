"""
Window-level (V11-V22) and within-window (V1-V10) predictors.

Features of target window i read windows up to i-1 only. The "record" event of
window i-1 is its last event (position ``(i-1)*k - 1`` in the day's stream).
All rows of a day are computed together; the single-window functions are thin
views over the same code.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from lob_bench.errors import DegenerateInputError
from lob_bench.pydantic_models import (
    ALL_FEATURES,
    NS_PER_SECOND,
    WINDOW_LEVEL_FEATURES,
    WITHIN_WINDOW_FEATURES,
    LabelingParams,
    labels_from_codes,
)
from lob_bench.windowing import FramedDay, label_windows

logger = logging.getLogger(__name__)

FIRST_TARGET = 3
META_COLUMNS = ["day", "window_index", "label"]
FLAG_COLUMN = "lookback_flagged"

_SLOPE_SOURCES = {
    "V17": "ask_price",
    "V18": "bid_price",
    "V19": "mid_price",
    "V20": "ask_volume",
    "V21": "bid_volume",
}


def _check_targets(day: FramedDay, targets: np.ndarray) -> None:
    if targets.size and (targets.min() < FIRST_TARGET or targets.max() > day.n_windows):
        raise DegenerateInputError(
            f"Target windows must lie in {FIRST_TARGET}..{day.n_windows}"
        )


def lookback_slopes(
    stamps: np.ndarray, series: list[np.ndarray], anchors: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    OLS slopes (per second) of each series against time over the events in
    (t_anchor - 1s, t_anchor] that sit at or before the anchor in stream order.

    Returns:
        (slopes of shape (len(series), len(anchors)), event counts, flagged rows)
        where flagged rows had < 2 events or zero time variance (slope 0).
    """
    n_rows = anchors.size
    if n_rows == 0:
        empty = np.zeros(0)
        return np.zeros((len(series), 0)), empty.astype(np.int64), empty.astype(bool)

    start = np.searchsorted(stamps, stamps[anchors] - NS_PER_SECOND, side="right")
    counts = anchors - start + 1
    offsets = np.cumsum(counts) - counts
    row = np.repeat(np.arange(n_rows), counts)
    index = np.arange(counts.sum()) - offsets[row] + start[row]

    x = (stamps[index] - stamps[anchors][row]).astype(np.float64) / NS_PER_SECOND
    x_centred = x - (np.add.reduceat(x, offsets) / counts)[row]
    sxx = np.add.reduceat(x_centred * x_centred, offsets)
    flagged = (counts < 2) | (sxx == 0)

    slopes = np.zeros((len(series), n_rows))
    for s, values in enumerate(series):
        y = values[index].astype(np.float64)
        y_centred = y - (np.add.reduceat(y, offsets) / counts)[row]
        sxy = np.add.reduceat(x_centred * y_centred, offsets)
        slopes[s] = np.where(flagged, 0.0, sxy / np.where(flagged, 1.0, sxx))
    return slopes, counts.astype(np.int64), flagged


def window_level_matrix(day: FramedDay, targets: np.ndarray) -> tuple[pd.DataFrame, np.ndarray]:
    """V11-V22 for target windows; second value flags degenerate lookbacks."""
    targets = np.asarray(targets, dtype=np.int64)
    _check_targets(day, targets)
    anchors = (targets - 1) * day.k - 1

    ask = day.column("ask_price").astype(np.float64)
    bid = day.column("bid_price").astype(np.float64)
    mid = day.column("mid_price").astype(np.float64)
    ask_volume = day.column("ask_volume")
    bid_volume = day.column("bid_volume")
    stamps = day.column("timestamp_ns").astype(np.int64)

    values = {
        "V11": ask[anchors],
        "V12": bid[anchors],
        "V13": mid[anchors],
        "V14": ask_volume[anchors].astype(np.float64),
        "V15": bid_volume[anchors].astype(np.float64),
        "V16": (ask[anchors] - bid[anchors]) / mid[anchors],
    }
    slopes, counts, flagged = lookback_slopes(
        stamps, [day.column(source) for source in _SLOPE_SOURCES.values()], anchors
    )
    for name, slope in zip(_SLOPE_SOURCES, slopes):
        values[name] = slope
    values["V22"] = counts.astype(np.float64)
    return pd.DataFrame(values, columns=WINDOW_LEVEL_FEATURES), flagged


def within_window_matrix(day: FramedDay, targets: np.ndarray) -> pd.DataFrame:
    """V1-V10 for target windows."""
    targets = np.asarray(targets, dtype=np.int64)
    _check_targets(day, targets)
    previous = targets - 2  # row of window i-1
    before = targets - 3  # row of window i-2

    bid = day.matrix("bid_price").astype(np.float64)[previous]
    ask = day.matrix("ask_price").astype(np.float64)[previous]
    mid_all = day.matrix("mid_price").astype(np.float64)
    mid = mid_all[previous]
    stamps = day.matrix("timestamp_ns").astype(np.int64)[previous]

    span_ns = stamps[:, -1] - stamps[:, 0]
    values = {
        "V1": (bid[:, -1] - bid[:, 0]) / bid[:, 0],
        "V2": (ask[:, -1] - ask[:, 0]) / ask[:, 0],
        "V3": (bid[:, -1] - ask[:, 0]) / ask[:, 0],
        "V4": ask.mean(axis=1),
        "V5": bid.mean(axis=1),
        "V6": mid.mean(axis=1),
        "V7": day.matrix("ask_volume")[previous].sum(axis=1).astype(np.float64),
        "V8": day.matrix("bid_volume")[previous].sum(axis=1).astype(np.float64),
        "V9": np.hstack([mid_all[before], mid]).std(axis=1),
        # zero-length windows are capped at 1 ns
        "V10": NS_PER_SECOND / np.maximum(span_ns, 1).astype(np.float64),
    }
    return pd.DataFrame(values, columns=WITHIN_WINDOW_FEATURES)


def window_level_features(day: FramedDay, i: int) -> dict[str, float]:
    frame, _ = window_level_matrix(day, np.array([i]))
    return {name: float(value) for name, value in frame.iloc[0].items()}


def within_window_features(day: FramedDay, i: int) -> dict[str, float]:
    frame = within_window_matrix(day, np.array([i]))
    return {name: float(value) for name, value in frame.iloc[0].items()}


def empty_feature_frame() -> pd.DataFrame:
    columns = META_COLUMNS + ALL_FEATURES + [FLAG_COLUMN]
    return pd.DataFrame({name: pd.Series(dtype=np.float64) for name in columns}).astype(
        {"day": np.int64, "window_index": np.int64, "label": np.int64, FLAG_COLUMN: bool}
    )


def build_feature_frame(day: FramedDay, params: LabelingParams) -> pd.DataFrame:
    """
    One row per labeled window i >= 3 of a day: ``day``, ``window_index``,
    ``label`` (class code), V1-V22 and ``lookback_flagged``.

    Raises:
        DegenerateInputError: If any feature is not finite.
    """
    if day.n_windows < FIRST_TARGET:
        return empty_feature_frame()
    targets = np.arange(FIRST_TARGET, day.n_windows + 1)
    codes = label_windows(day, params)
    within = within_window_matrix(day, targets)
    window_level, flagged = window_level_matrix(day, targets)

    frame = pd.concat([within, window_level], axis=1)
    if not np.isfinite(frame.to_numpy()).all():
        raise DegenerateInputError(f"Non-finite feature values on day {day.day}")
    frame.insert(0, "label", codes[targets - 1])
    frame.insert(0, "window_index", targets)
    frame.insert(0, "day", np.full(targets.size, day.day, dtype=np.int64))
    frame[FLAG_COLUMN] = flagged

    if flagged.any():
        logger.warning(
            f"Day {day.day}: {int(flagged.sum())} window(s) with a degenerate one-second "
            f"lookback; V17-V21 set to 0"
        )
    return frame


def build_features(days: list[FramedDay], params: LabelingParams) -> pd.DataFrame:
    frames = [build_feature_frame(day, params) for day in days]
    frames = [f for f in frames if len(f)]
    if not frames:
        return empty_feature_frame()
    return pd.concat(frames, ignore_index=True)


def export_feature_matrix(frame: pd.DataFrame, path: str | Path) -> Path:
    """Delimited export: header of identifiers, label names, 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    feature_columns = [c for c in frame.columns if c not in META_COLUMNS and c != FLAG_COLUMN]
    out = frame[["day", "window_index"] + feature_columns].copy()
    out["label"] = [label.value for label in labels_from_codes(frame["label"])]
    out.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    logger.info(f"Wrote {len(out)} feature row(s) to {path}")
    return path
