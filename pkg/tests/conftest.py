import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from lob_bench.ingest import EVENT_COLUMNS, RAW_COLUMNS  # noqa: E402
from lob_bench.pydantic_models import NS_PER_SECOND, SESSION_OPEN_NS, SynthConfig  # noqa: E402
from lob_bench.synth import generate  # noqa: E402


def _event_frame(bid, ask, stamps_ns=None, bid_volume=None, ask_volume=None, day=0, symbol="TST"):
    """Cleaned-layout event frame; timestamps default to one event every 100 ms from the open."""
    bid = np.asarray(bid, dtype=np.float64)
    ask = np.asarray(ask, dtype=np.float64)
    n = bid.size
    if stamps_ns is None:
        stamps_ns = SESSION_OPEN_NS + np.arange(n, dtype=np.int64) * (NS_PER_SECOND // 10)
    if bid_volume is None:
        bid_volume = np.full(n, 100, dtype=np.int64)
    if ask_volume is None:
        ask_volume = np.full(n, 200, dtype=np.int64)
    frame = pd.DataFrame(
        {
            "day": np.full(n, day, dtype=np.int64),
            "timestamp_ns": np.asarray(stamps_ns, dtype=np.int64),
            "bid_price": bid,
            "ask_price": ask,
            "bid_volume": np.asarray(bid_volume, dtype=np.int64),
            "ask_volume": np.asarray(ask_volume, dtype=np.int64),
            "mid_price": (bid + ask) / 2,
            "symbol": symbol,
        }
    )
    return frame[EVENT_COLUMNS]


def _raw_frame(records):
    """Raw-layout frame from (day, timestamp_ns, bid, ask, bid_size, ask_size) tuples."""
    frame = pd.DataFrame(
        records,
        columns=["day", "timestamp_ns", "bid_price", "ask_price", "bid_size", "ask_size"],
    )
    frame = frame.astype(
        {
            "day": np.int64,
            "timestamp_ns": np.int64,
            "bid_price": np.float64,
            "ask_price": np.float64,
            "bid_size": np.int64,
            "ask_size": np.int64,
        }
    )
    frame["symbol"] = "TST"
    frame["line_number"] = np.arange(1, len(frame) + 1, dtype=np.int64)
    return frame[RAW_COLUMNS]


@pytest.fixture
def make_events():
    return _event_frame


@pytest.fixture
def make_raw():
    return _raw_frame


@pytest.fixture
def random_day_events():
    """One day of 403 random-walk events with irregular, sometimes tied timestamps."""
    rng = np.random.default_rng(123)
    n = 403
    bid = 50.0 + np.cumsum(rng.choice([-0.01, 0.0, 0.01], size=n))
    ask = bid + rng.choice([0.01, 0.02, 0.03], size=n)
    gaps = rng.choice([0, 1_000_000, 40_000_000, 150_000_000, 700_000_000], size=n)
    stamps = SESSION_OPEN_NS + 5 * NS_PER_SECOND + np.cumsum(gaps)
    return _event_frame(
        np.round(bid, 2),
        np.round(ask, 2),
        stamps,
        bid_volume=rng.integers(1, 50, size=n) * 100,
        ask_volume=rng.integers(1, 50, size=n) * 100,
    )


@pytest.fixture(scope="session")
def synth_events():
    """Three trading days of synthetic quotes with a planted trend signal."""
    return generate(
        SynthConfig(symbol="SYN", n_events=3_000, n_days=3, seed=5, trend_signal_strength=0.5)
    )
