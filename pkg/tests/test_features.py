import numpy as np
import pandas as pd
import pytest

from lob_bench.errors import DegenerateInputError
from lob_bench.features import (
    FLAG_COLUMN,
    build_feature_frame,
    build_features,
    export_feature_matrix,
    window_level_features,
    within_window_features,
)
from lob_bench.pydantic_models import (
    ALL_FEATURES,
    NS_PER_SECOND,
    SESSION_OPEN_NS,
    LabelingParams,
)
from lob_bench.windowing import frame_day, frame_days, label_windows

K = 5


def _ols_slope(x, y):
    if len(x) < 2:
        return 0.0
    x_mean = sum(x) / len(x)
    y_mean = sum(y) / len(y)
    sxx = sum((a - x_mean) ** 2 for a in x)
    if sxx == 0:
        return 0.0
    return sum((a - x_mean) * (b - y_mean) for a, b in zip(x, y)) / sxx


def _brute_force_features(events: pd.DataFrame, i: int, k: int) -> dict[str, float]:
    bid = events["bid_price"].tolist()
    ask = events["ask_price"].tolist()
    mid = events["mid_price"].tolist()
    bid_volume = events["bid_volume"].tolist()
    ask_volume = events["ask_volume"].tolist()
    stamps = events["timestamp_ns"].tolist()

    first, last = (i - 2) * k, (i - 1) * k - 1
    prev = range(first, last + 1)
    two_windows = [mid[e] for e in range((i - 3) * k, last + 1)]
    centre = sum(two_windows) / len(two_windows)
    out = {
        "V1": (bid[last] - bid[first]) / bid[first],
        "V2": (ask[last] - ask[first]) / ask[first],
        "V3": (bid[last] - ask[first]) / ask[first],
        "V4": sum(ask[e] for e in prev) / k,
        "V5": sum(bid[e] for e in prev) / k,
        "V6": sum(mid[e] for e in prev) / k,
        "V7": float(sum(ask_volume[e] for e in prev)),
        "V8": float(sum(bid_volume[e] for e in prev)),
        "V9": (sum((m - centre) ** 2 for m in two_windows) / len(two_windows)) ** 0.5,
        "V10": NS_PER_SECOND / max(stamps[last] - stamps[first], 1),
        "V11": ask[last],
        "V12": bid[last],
        "V13": mid[last],
        "V14": float(ask_volume[last]),
        "V15": float(bid_volume[last]),
        "V16": (ask[last] - bid[last]) / mid[last],
    }
    lookback = [e for e in range(last + 1) if stamps[e] > stamps[last] - NS_PER_SECOND]
    x = [(stamps[e] - stamps[last]) / NS_PER_SECOND for e in lookback]
    for name, series in [
        ("V17", ask),
        ("V18", bid),
        ("V19", mid),
        ("V20", ask_volume),
        ("V21", bid_volume),
    ]:
        out[name] = _ols_slope(x, [float(series[e]) for e in lookback])
    out["V22"] = float(len(lookback))
    return out


def test_features_match_brute_force(random_day_events):
    day = frame_day(random_day_events, K)
    rows = build_feature_frame(day, LabelingParams(alpha=1e-5, k=K))
    assert rows["window_index"].tolist() == list(range(3, day.n_windows + 1))

    for _, row in rows.iterrows():
        expected = _brute_force_features(random_day_events, int(row["window_index"]), K)
        for name in ALL_FEATURES:
            assert row[name] == pytest.approx(expected[name], rel=1e-10, abs=1e-8), name


def test_label_column_matches_labeling(random_day_events):
    params = LabelingParams(alpha=1e-5, k=K)
    day = frame_day(random_day_events, K)
    rows = build_feature_frame(day, params)
    codes = label_windows(day, params)
    assert rows["label"].tolist() == codes[2:].tolist()


def test_v6_is_the_labeling_mean(random_day_events):
    day = frame_day(random_day_events, K)
    rows = build_feature_frame(day, LabelingParams(k=K))
    means = day.matrix("mid_price").mean(axis=1)
    assert np.allclose(rows["V6"].to_numpy(), means[rows["window_index"].to_numpy() - 2])


def test_row_invariants(random_day_events):
    rows = build_feature_frame(frame_day(random_day_events, K), LabelingParams(k=K))
    assert (rows["V3"] <= rows["V1"] + 1e-15).all()
    assert (rows["V7"] >= K).all()
    assert (rows["V8"] >= K).all()
    assert np.isfinite(rows[ALL_FEATURES].to_numpy()).all()


def test_window_level_examples(make_events):
    n = 15
    bid = np.full(n, 100.0)
    ask = np.full(n, 100.02)
    # events 3..9 fall inside the one-second lookback of event 9
    stamps = SESSION_OPEN_NS + np.concatenate(
        [np.array([0, 1, 2]) * NS_PER_SECOND, 3 * NS_PER_SECOND + np.arange(12) * 50_000_000]
    )
    stamps[3:] += 10 * NS_PER_SECOND
    day = frame_day(make_events(bid, ask, stamps), K)

    features = window_level_features(day, 3)
    assert features["V16"] == pytest.approx(0.02 / 100.01)
    for name in ("V17", "V18", "V19"):
        assert features[name] == pytest.approx(0.0, abs=1e-12)
    assert features["V22"] == 7.0


def test_within_window_examples(make_events):
    bid = np.array([100.0] * 5 + [100.0, 100.0, 100.0, 100.0, 101.0] + [100.0] * 5)
    ask = bid + 0.02
    stamps = SESSION_OPEN_NS + np.arange(15) * NS_PER_SECOND // 8
    stamps[5] = SESSION_OPEN_NS + NS_PER_SECOND
    stamps[9] = SESSION_OPEN_NS + 3 * NS_PER_SECOND // 2
    stamps[6:9] = stamps[5] + np.array([1, 2, 3]) * 100_000_000
    stamps[10:] = stamps[9] + np.arange(1, 6)
    day = frame_day(make_events(bid, ask, stamps), K)

    features = within_window_features(day, 3)
    assert features["V1"] == pytest.approx(0.01)
    assert features["V10"] == pytest.approx(2.0)


def test_constant_mids_give_zero_v9(make_events):
    day = frame_day(make_events(np.full(15, 10.0), np.full(15, 10.02)), K)
    assert within_window_features(day, 3)["V9"] == pytest.approx(0.0, abs=1e-12)


def test_zero_length_window_caps_intensity(make_events):
    stamps = np.full(15, SESSION_OPEN_NS + NS_PER_SECOND)
    day = frame_day(make_events(np.full(15, 10.0), np.full(15, 10.02), stamps), K)
    assert within_window_features(day, 3)["V10"] == float(NS_PER_SECOND)


def test_single_event_lookback_is_flagged(make_events):
    stamps = SESSION_OPEN_NS + np.arange(15) * 2 * NS_PER_SECOND
    day = frame_day(make_events(np.linspace(10, 11, 15), np.linspace(10.02, 11.02, 15), stamps), K)
    rows = build_feature_frame(day, LabelingParams(k=K))
    assert rows[FLAG_COLUMN].all()
    assert (rows[["V17", "V18", "V19", "V20", "V21"]] == 0.0).all().all()
    assert (rows["V22"] == 1.0).all()


def test_targets_before_window_three_are_rejected(random_day_events):
    day = frame_day(random_day_events, K)
    with pytest.raises(DegenerateInputError):
        window_level_features(day, 2)
    with pytest.raises(DegenerateInputError):
        within_window_features(day, day.n_windows + 1)


def test_build_features_spans_days(synth_events):
    days = frame_days(synth_events, K)
    rows = build_features(days, LabelingParams(k=K))
    assert sorted(rows["day"].unique().tolist()) == [0, 1, 2]
    assert len(rows) == sum(d.n_windows - 2 for d in days)


def test_short_day_gives_no_rows(make_events):
    day = frame_day(make_events(np.full(10, 10.0), np.full(10, 10.02)), K)
    assert len(build_feature_frame(day, LabelingParams(k=K))) == 0


def test_export_feature_matrix(tmp_path, random_day_events):
    rows = build_feature_frame(frame_day(random_day_events.iloc[:40], K), LabelingParams(k=K))
    path = export_feature_matrix(rows, tmp_path / "features.csv")
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == ["day", "window_index"] + ALL_FEATURES + ["label"]
    assert set(loaded["label"]) <= {"Downwards", "Stationary", "Upwards"}
    assert len(loaded) == len(rows)
