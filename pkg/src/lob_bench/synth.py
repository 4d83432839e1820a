"""
Synthetic quote streams with a planted window-to-window trend signal.

The bid follows a tick random walk; each step's direction probabilities are
tilted toward the sign of the previous k-event window's OLS mid-price slope by
``trend_signal_strength``. A ``quiet_window_prob`` share of windows has no bid
step and no spread change, so the mid-price stays put and the window is labeled
Stationary at any threshold. Windows restart every trading day, matching framing.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from lob_bench.ingest import EVENT_COLUMNS, empty_event_frame, write_quote_file
from lob_bench.pydantic_models import (
    NS_PER_SECOND,
    SESSION_CLOSE_NS,
    SESSION_OPEN_NS,
    ColumnMapping,
    QuoteEvent,
    SynthConfig,
)

logger = logging.getLogger(__name__)

_SESSION_NS = SESSION_CLOSE_NS - SESSION_OPEN_NS


def _step_probabilities(direction: int, strength: float, tilt: float) -> tuple[float, float, float]:
    """(P(down), P(flat), P(up)) for one bid step."""
    if direction == 0:
        down = flat = up = 1.0 / 3.0
    else:
        lead = (1.0 + 2.0 * strength) / 3.0
        rest = (1.0 - strength) / 3.0
        up, down = (lead, rest) if direction > 0 else (rest, lead)
        flat = rest
    up *= 1.0 + tilt
    down *= 1.0 - tilt
    total = up + down + flat
    return down / total, flat / total, up / total


def _slope_sign(mids: list[float]) -> int:
    n = len(mids)
    centre = (n - 1) / 2.0
    mean = sum(mids) / n
    slope = sum((j - centre) * (m - mean) for j, m in enumerate(mids))
    if slope > 0:
        return 1
    if slope < 0:
        return -1
    return 0


def _timestamps(rng: np.random.Generator, n_events: int, rate: float) -> np.ndarray:
    gaps = rng.exponential(1.0 / rate, size=n_events) * NS_PER_SECOND
    offsets = np.cumsum(gaps)
    if offsets[-1] >= _SESSION_NS:
        offsets = offsets / offsets[-1] * (_SESSION_NS - 1)
    return SESSION_OPEN_NS + np.floor(offsets).astype(np.int64)


def _generate_day(
    config: SynthConfig,
    rng: np.random.Generator,
    day: int,
    bid_ticks: int,
    spread_ticks: int,
) -> tuple[pd.DataFrame, int, int]:
    n = config.n_events
    k = config.window_k
    tilt = float(np.clip(config.drift_per_event / config.tick_size, -1.0, 1.0))

    stamps = _timestamps(rng, n, config.event_rate)
    step_draws = rng.random(n).tolist()
    spread_draws = rng.random(n).tolist()
    spread_values = rng.integers(1, config.spread_ticks_max + 1, size=n).tolist()
    bid_lots = np.maximum(
        1, np.rint(rng.lognormal(config.volume_mean, config.volume_sigma, size=n))
    ).astype(np.int64)
    ask_lots = np.maximum(
        1, np.rint(rng.lognormal(config.volume_mean, config.volume_sigma, size=n))
    ).astype(np.int64)
    quiet = (rng.random(-(-n // k)) < config.quiet_window_prob).tolist()

    bids = [0] * n
    spreads = [0] * n
    window_mids: list[float] = []
    probabilities = _step_probabilities(0, config.trend_signal_strength, tilt)
    for e in range(n):
        if e % k == 0 and e > 0:
            direction = _slope_sign(window_mids)
            probabilities = _step_probabilities(direction, config.trend_signal_strength, tilt)
            window_mids = []
        if e > 0 and not quiet[e // k]:
            u = step_draws[e]
            if u < probabilities[0]:
                bid_ticks = max(1, bid_ticks - 1)
            elif u >= probabilities[0] + probabilities[1]:
                bid_ticks += 1
            if spread_draws[e] < config.spread_change_prob:
                spread_ticks = spread_values[e]
        bids[e] = bid_ticks
        spreads[e] = spread_ticks
        window_mids.append(bid_ticks + spread_ticks / 2.0)

    bid_ticks_arr = np.asarray(bids, dtype=np.int64)
    ask_ticks_arr = bid_ticks_arr + np.asarray(spreads, dtype=np.int64)
    bid = np.round(bid_ticks_arr * config.tick_size, 10)
    ask = np.round(ask_ticks_arr * config.tick_size, 10)
    frame = pd.DataFrame(
        {
            "day": np.full(n, day, dtype=np.int64),
            "timestamp_ns": stamps,
            "bid_price": bid,
            "ask_price": ask,
            "bid_volume": bid_lots * config.lot_size,
            "ask_volume": ask_lots * config.lot_size,
            "mid_price": (bid + ask) / 2,
            "symbol": config.symbol,
        }
    )
    return frame[EVENT_COLUMNS], bid_ticks, spread_ticks


def generate(config: SynthConfig) -> pd.DataFrame:
    """
    Generate ``n_days`` trading days of ``n_events`` quotes each.

    Returns:
        Event frame in the layout produced by ``ingest.clean``.
    """
    rng = np.random.default_rng(config.seed)
    bid_ticks = max(1, int(round(config.base_price / config.tick_size)))
    spread_ticks = 1
    frames = []
    for day in range(config.n_days):
        frame, bid_ticks, spread_ticks = _generate_day(config, rng, day, bid_ticks, spread_ticks)
        frames.append(frame)
    if not frames:
        return empty_event_frame()
    events = pd.concat(frames, ignore_index=True)
    logger.info(
        f"Generated {len(events)} synthetic event(s) for {config.symbol} "
        f"over {config.n_days} day(s)"
    )
    return events


def generate_events(config: SynthConfig) -> list[QuoteEvent]:
    frame = generate(config)
    return [QuoteEvent(**row) for row in frame.to_dict("records")]


def write_synth_files(
    config: SynthConfig, out_dir: str | Path, mapping: ColumnMapping | None = None
) -> list[Path]:
    """Write one quote file per trading day: ``<symbol>_day<NNN>.csv``."""
    out_dir = Path(out_dir)
    events = generate(config)
    paths = []
    for day, frame in events.groupby("day", sort=True):
        path = out_dir / f"{config.symbol}_day{int(day):03d}.csv"
        write_quote_file(frame, path, mapping)
        paths.append(path)
    logger.info(f"Wrote {len(paths)} quote file(s) to {out_dir}")
    return paths
