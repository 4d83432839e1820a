import numpy as np
import pandas as pd
import pytest

from lob_bench.errors import ParameterError, SamplingShortageError
from lob_bench.preprocess import (
    class_quotas,
    feature_columns,
    fit_column,
    fit_stats,
    load_stats,
    save_stats,
    stratified_indices,
    stratified_sample,
    transform,
)
from lob_bench.pydantic_models import Label, SamplingPlan


def _type7(values, p):
    ordered = sorted(values)
    h = (len(ordered) - 1) * p
    lo = int(h)
    hi = min(lo + 1, len(ordered) - 1)
    return ordered[lo] + (h - lo) * (ordered[hi] - ordered[lo])


def _rows(**columns):
    return pd.DataFrame(columns)


def test_fit_column_matches_manual_computation():
    values = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 100.0]
    stat = fit_column(np.array(values))
    q1, q3 = _type7(values, 0.25), _type7(values, 0.75)
    assert stat.q1 == q1 == 2.0
    assert stat.q3 == q3 == 6.0
    assert stat.lower == pytest.approx(q1 - 1.5 * (q3 - q1))
    assert stat.upper == pytest.approx(q3 + 1.5 * (q3 - q1))

    clamped = [min(max(v, stat.lower), stat.upper) for v in values]
    mean = sum(clamped) / len(clamped)
    std = (sum((v - mean) ** 2 for v in clamped) / len(clamped)) ** 0.5
    assert stat.mean == pytest.approx(mean)
    assert stat.stddev == pytest.approx(std)
    assert not stat.constant


def test_transform_clamps_then_standardizes():
    train = _rows(V1=[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 100.0])
    stats = fit_stats(train)
    stat = stats.columns["V1"]
    test = _rows(V1=[1000.0, -1000.0, 4.0], day=[0, 0, 1])
    out = transform(test, stats)
    assert out["V1"].tolist() == pytest.approx(
        [
            (stat.upper - stat.mean) / stat.stddev,
            (stat.lower - stat.mean) / stat.stddev,
            (4.0 - stat.mean) / stat.stddev,
        ]
    )
    assert out["day"].tolist() == [0, 0, 1]
    assert test["V1"].tolist() == [1000.0, -1000.0, 4.0]


def test_transformed_training_rows_are_standardized():
    rng = np.random.default_rng(0)
    train = _rows(V1=rng.normal(size=200), V2=rng.exponential(size=200))
    out = transform(train, fit_stats(train))
    assert out[["V1", "V2"]].mean().abs().max() == pytest.approx(0.0, abs=1e-12)
    assert out[["V1", "V2"]].std(ddof=0).tolist() == pytest.approx([1.0, 1.0])


def test_constant_column_maps_to_zero():
    train = _rows(V1=[2.0, 2.0, 2.0], V2=[1.0, 2.0, 3.0])
    stats = fit_stats(train)
    assert stats.columns["V1"].constant
    out = transform(_rows(V1=[7.0, 2.0], V2=[1.0, 1.0]), stats)
    assert out["V1"].tolist() == [0.0, 0.0]


def test_test_rows_do_not_change_statistics():
    rng = np.random.default_rng(1)
    train = _rows(V1=rng.normal(size=50))
    stats = fit_stats(train)
    first = transform(_rows(V1=[0.5, 1.5]), stats)
    second = transform(_rows(V1=[0.5, 1.5, 1e9, -1e9]), stats)
    assert first["V1"].tolist() == second["V1"].tolist()[:2]


def test_transform_errors():
    stats = fit_stats(_rows(V1=[1.0, 2.0, 3.0]))
    once = transform(_rows(V1=[1.0]), stats)
    with pytest.raises(ParameterError):
        transform(once, stats)
    with pytest.raises(ParameterError):
        transform(_rows(V1=[1.0], V2=[1.0]), stats)


def test_fit_stats_errors():
    with pytest.raises(ParameterError):
        fit_stats(_rows(V1=[1.0]))
    with pytest.raises(ParameterError):
        fit_stats(_rows(V1=[1.0, np.nan]))
    with pytest.raises(ParameterError):
        fit_stats(_rows(V1=[1.0, 2.0]), ["V2"])


def test_feature_columns_skip_metadata():
    rows = _rows(day=[0], window_index=[3], V1=[1.0], V22=[2.0], label=[1])
    assert feature_columns(rows) == ["V1", "V22"]


def test_stats_persistence(tmp_path):
    stats = fit_stats(_rows(V1=[1.0, 2.0, 5.0], V2=[0.0, 0.0, 0.0]))
    assert load_stats(save_stats(stats, tmp_path / "stats.json")) == stats


@pytest.mark.parametrize(
    "total, ratio, expected",
    [
        (10, {Label.DOWNWARDS: 1 / 3, Label.STATIONARY: 1 / 3, Label.UPWARDS: 1 / 3}, [4, 3, 3]),
        (9, {Label.DOWNWARDS: 1 / 3, Label.STATIONARY: 1 / 3, Label.UPWARDS: 1 / 3}, [3, 3, 3]),
        (10, {Label.DOWNWARDS: 0.25, Label.STATIONARY: 0.5, Label.UPWARDS: 0.25}, [3, 5, 2]),
        (7, {Label.DOWNWARDS: 0.1, Label.STATIONARY: 0.1, Label.UPWARDS: 0.8}, [1, 1, 5]),
    ],
)
def test_class_quotas_largest_remainder(total, ratio, expected):
    quotas = class_quotas(total, ratio)
    assert [quotas[label] for label in (Label.DOWNWARDS, Label.STATIONARY, Label.UPWARDS)] == expected
    assert sum(quotas.values()) == total


def test_stratified_indices_are_balanced_and_disjoint():
    labels = np.repeat([0, 1, 2], [50, 200, 40])
    train, test = stratified_indices(labels, SamplingPlan(train_size=90, test_size=60, seed=7))
    assert np.bincount(labels[train], minlength=3).tolist() == [30, 30, 30]
    assert len(test) == 60
    assert not set(train) & set(test)
    assert np.all(np.diff(train) > 0)


def test_stratified_indices_are_reproducible():
    labels = np.tile([0, 1, 2], 100)
    plan = SamplingPlan(train_size=30, test_size=30, seed=11)
    first = stratified_indices(labels, plan)
    second = stratified_indices(labels, plan)
    assert np.array_equal(first[0], second[0])
    assert np.array_equal(first[1], second[1])
    other = stratified_indices(labels, plan.model_copy(update={"seed": 12}))
    assert not np.array_equal(first[0], other[0])


def test_class_shortage_names_the_class():
    labels = np.repeat([0, 1, 2], [5, 100, 100])
    with pytest.raises(SamplingShortageError) as info:
        stratified_indices(labels, SamplingPlan(train_size=30, test_size=10))
    assert info.value.label == "Downwards"
    assert (info.value.available, info.value.required) == (5, 10)


def test_test_shortage_is_reported_as_test():
    labels = np.repeat([0, 1, 2], 10)
    with pytest.raises(SamplingShortageError) as info:
        stratified_indices(labels, SamplingPlan(train_size=30, test_size=1))
    assert info.value.label == "test"


def test_stratified_sample_returns_rows():
    rows = _rows(V1=np.arange(30.0), label=np.tile([0, 1, 2], 10))
    train, test = stratified_sample(rows, SamplingPlan(train_size=6, test_size=3, seed=2))
    assert train["label"].value_counts().to_dict() == {0: 2, 1: 2, 2: 2}
    assert len(test) == 3


def test_sampling_plan_rejects_bad_ratio():
    with pytest.raises(ValueError):
        SamplingPlan(train_size=3, test_size=3, ratio={Label.DOWNWARDS: 0.5, Label.UPWARDS: 0.2})
