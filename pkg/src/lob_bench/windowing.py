"""Non-overlapping k-event windows per trading day and mid-price movement labels."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from lob_bench.errors import DegenerateInputError, ParameterError
from lob_bench.ingest import events_to_quote_events, quote_events_to_frame
from lob_bench.pydantic_models import (
    LABEL_CODES,
    LABEL_ORDER,
    EventWindow,
    Label,
    LabelingParams,
    LabelShare,
    QuoteEvent,
)

logger = logging.getLogger(__name__)

DOWN = LABEL_CODES[Label.DOWNWARDS]
STATIONARY = LABEL_CODES[Label.STATIONARY]
UP = LABEL_CODES[Label.UPWARDS]
NO_LABEL = -1

DEFAULT_ALPHAS = (1e-6, 1e-5, 1e-4)


@dataclass(frozen=True)
class FramedDay:
    """
    One trading day's event stream with its k-event framing.

    The arrays hold every event of the day (the trailing remainder included, so
    lookbacks see the full stream); windows cover the first ``n_windows * k``.
    """

    day: int
    k: int
    events: pd.DataFrame
    n_windows: int

    def column(self, name: str) -> np.ndarray:
        return self.events[name].to_numpy()

    def matrix(self, name: str) -> np.ndarray:
        """(n_windows, k) view of one event column."""
        return self.column(name)[: self.n_windows * self.k].reshape(self.n_windows, self.k)

    def window(self, i: int) -> EventWindow:
        if not 1 <= i <= self.n_windows:
            raise ParameterError(f"Window index {i} outside 1..{self.n_windows}")
        rows = self.events.iloc[(i - 1) * self.k : i * self.k]
        return EventWindow(window_index=i, k=self.k, events=events_to_quote_events(rows))

    def windows(self) -> list[EventWindow]:
        return [self.window(i) for i in range(1, self.n_windows + 1)]


def _check_k(k: int) -> None:
    if k < 2:
        raise ParameterError(f"Window length k must be at least 2, got {k}")


def frame_day(events: pd.DataFrame, k: int) -> FramedDay:
    """Frame one day's chronological events; the remainder after the last full window is not windowed."""
    _check_k(k)
    days = events["day"].unique() if len(events) else np.array([0])
    if len(days) > 1:
        raise ParameterError("frame_day expects a single trading day; use frame_days")
    stamps = events["timestamp_ns"].to_numpy()
    if len(stamps) > 1 and np.any(np.diff(stamps) < 0):
        raise ParameterError("Events must be in chronological order")
    return FramedDay(
        day=int(days[0]),
        k=k,
        events=events.reset_index(drop=True),
        n_windows=len(events) // k,
    )


def frame_days(events: pd.DataFrame, k: int) -> list[FramedDay]:
    """Frame each trading day separately; windows never cross a day boundary."""
    _check_k(k)
    return [frame_day(day_events, k) for _, day_events in events.groupby("day", sort=True)]


def frame(events: Sequence[QuoteEvent] | pd.DataFrame, k: int) -> list[EventWindow]:
    """Split a single-day stream into floor(N/k) windows of k events."""
    _check_k(k)
    if not isinstance(events, pd.DataFrame):
        events = quote_events_to_frame(list(events))
    return frame_day(events, k).windows()


def classify_ratios(ratio: np.ndarray, alpha: float) -> np.ndarray:
    """Label codes for r = mean(window mids) / previous last mid (strict inequalities)."""
    return np.where(ratio > 1 + alpha, UP, np.where(ratio < 1 - alpha, DOWN, STATIONARY))


def _window_ratios(mids: np.ndarray, previous_last: np.ndarray) -> np.ndarray:
    if np.any(previous_last == 0):
        raise DegenerateInputError("Previous window's last mid-price is zero")
    return mids.mean(axis=1) / previous_last


def label(window_i: EventWindow, window_prev: EventWindow, params: LabelingParams) -> Label:
    """Movement label of window i relative to the last mid-price of window i-1."""
    if window_i.k != params.k or window_prev.k != params.k:
        raise ParameterError(f"Both windows must have length k={params.k}")
    if window_prev.window_index != window_i.window_index - 1:
        raise ParameterError("window_prev must be the window immediately before window_i")
    previous_last = np.array([window_prev.events[-1].mid_price])
    ratio = _window_ratios(window_i.mid_prices[None, :], previous_last)
    return LABEL_ORDER[int(classify_ratios(ratio, params.alpha)[0])]


def label_windows(day: FramedDay, params: LabelingParams) -> np.ndarray:
    """
    Label codes for every window of a day; window 1 has no predecessor and gets
    ``NO_LABEL``.
    """
    if day.k != params.k:
        raise ParameterError(f"Day framed with k={day.k}, labeling expects k={params.k}")
    codes = np.full(day.n_windows, NO_LABEL, dtype=np.int64)
    if day.n_windows < 2:
        return codes
    mids = day.matrix("mid_price")
    ratio = _window_ratios(mids[1:], mids[:-1, -1])
    codes[1:] = classify_ratios(ratio, params.alpha)
    return codes


def label_distribution(
    days: Sequence[FramedDay],
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    stock: str = "",
) -> list[LabelShare]:
    """Class proportions of all labeled windows (i >= 2) for several thresholds."""
    shares: list[LabelShare] = []
    for alpha in alphas:
        counts = np.zeros(len(LABEL_ORDER), dtype=np.int64)
        for day in days:
            codes = label_windows(day, LabelingParams(alpha=alpha, k=day.k))
            codes = codes[codes != NO_LABEL]
            counts += np.bincount(codes, minlength=len(LABEL_ORDER))
        total = int(counts.sum())
        for label_, count in zip(LABEL_ORDER, counts.tolist()):
            shares.append(
                LabelShare(
                    stock=stock,
                    alpha=float(alpha),
                    label=label_,
                    count=count,
                    proportion=count / total if total else 0.0,
                )
            )
    return shares
