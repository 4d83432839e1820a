import numpy as np
import pandas as pd
import pytest

import lob_bench.ensemble as ensemble_module
from lob_bench.ensemble import (
    ensemble_fit,
    ensemble_predict,
    ensemble_predict_codes,
    load_ensemble,
    member_seeds,
    plurality_vote,
    save_ensemble,
)
from lob_bench.errors import EnsembleError, FitError, SamplingShortageError
from lob_bench.learners import predict_codes
from lob_bench.pydantic_models import EnetParams, LearnerSpec, SamplingPlan

FEATURES = ["V1", "V2"]
ENET = LearnerSpec(kind="enet", use_cv=False, enet=EnetParams(lambda_=1e-3, tol=1e-6))


def _pool(n=300, seed=0):
    rng = np.random.default_rng(seed)
    codes = np.resize(np.array([0, 1, 2]), n)
    centres = np.array([[-1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    X = centres[codes] + rng.normal(scale=0.7, size=(n, 2))
    return pd.DataFrame({"V1": X[:, 0], "V2": X[:, 1], "label": codes})


def _tally_vote(codes, scores):
    winners = []
    for row in range(codes.shape[1]):
        counts = [int(np.sum(codes[:, row] == c)) for c in range(3)]
        tied = [c for c in range(3) if counts[c] == max(counts)]
        summed = {c: sum(s if np.isfinite(s) else 0.0 for s in scores[:, row, c]) for c in tied}
        best = max(summed.values())
        winners.append(min(c for c in tied if summed[c] == best))
    return np.array(winners)


def test_plurality_vote_matches_tally():
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 3, size=(6, 200))
    scores = rng.normal(size=(6, 200, 3)).round(1)
    scores[0, :10, 1] = -np.inf
    assert plurality_vote(codes, scores).tolist() == _tally_vote(codes, scores).tolist()


def test_plurality_vote_falls_back_to_class_order():
    codes = np.array([[0], [2]])
    scores = np.zeros((2, 1, 3))
    assert plurality_vote(codes, scores).tolist() == [0]


def test_member_seeds_are_distinct_and_reproducible():
    seeds = member_seeds(42, 10)
    assert len(set(seeds)) == 10
    assert seeds == member_seeds(42, 10)
    assert seeds[:5] == member_seeds(42, 5)


def test_ensemble_fit_records_plans_and_predicts():
    pool = _pool()
    plan = SamplingPlan(train_size=60, test_size=1, seed=3)
    model = ensemble_fit(pool, 5, plan, ENET, FEATURES)
    assert len(model.members) == 5
    assert [p.seed for p in model.member_plans] == member_seeds(3, 5)
    assert model.n_converged == 5
    labels = ensemble_predict(model, pool)
    assert len(labels) == len(pool)
    assert np.mean(ensemble_predict_codes(model, pool) == pool["label"].to_numpy()) > 0.6


def test_singleton_ensemble_equals_its_member():
    pool = _pool()
    model = ensemble_fit(pool, 1, SamplingPlan(train_size=30, test_size=1, seed=4), ENET, FEATURES)
    assert np.array_equal(
        ensemble_predict_codes(model, pool), predict_codes(model.members[0], pool)
    )


def test_ensemble_fit_is_deterministic():
    pool = _pool()
    plan = SamplingPlan(train_size=45, test_size=1, seed=8)
    first = ensemble_fit(pool, 3, plan, ENET, FEATURES)
    second = ensemble_fit(pool, 3, plan, ENET, FEATURES)
    for a, b in zip(first.members, second.members):
        assert np.array_equal(a.coef, b.coef)


def test_explicit_seeds_must_match_member_count():
    with pytest.raises(EnsembleError):
        ensemble_fit(_pool(), 3, SamplingPlan(train_size=30, test_size=1), ENET, FEATURES, seeds=[1, 2])


def test_pool_shortage_is_raised_before_fitting():
    pool = _pool(n=30)
    with pytest.raises(SamplingShortageError):
        ensemble_fit(pool, 2, SamplingPlan(train_size=60, test_size=1), ENET, FEATURES)


def test_all_failed_members_raise():
    with pytest.raises(EnsembleError):
        ensemble_fit(_pool(), 3, SamplingPlan(train_size=30, test_size=1), ENET, ["V1", "V9"])


def test_ensemble_persistence(tmp_path):
    pool = _pool()
    model = ensemble_fit(pool, 2, SamplingPlan(train_size=30, test_size=1, seed=5), ENET, FEATURES)
    loaded = load_ensemble(save_ensemble(model, tmp_path / "ensemble.json"))
    assert loaded.feature_order == FEATURES
    assert np.array_equal(ensemble_predict_codes(loaded, pool), ensemble_predict_codes(model, pool))


def test_failed_member_does_not_vote(monkeypatch):
    pool = _pool()
    plan = SamplingPlan(train_size=45, test_size=1)
    seeds = member_seeds(11, 4)
    healthy = ensemble_fit(pool, 3, plan, ENET, FEATURES, seeds=[seeds[0], seeds[2], seeds[3]])

    fit_learner = ensemble_module.fit_learner
    calls = []

    def second_fit_fails(rows, spec, feature_order):
        calls.append(len(rows))
        if len(calls) == 2:
            raise FitError("singular design")
        return fit_learner(rows, spec, feature_order)

    monkeypatch.setattr(ensemble_module, "fit_learner", second_fit_fails)
    degraded = ensemble_fit(pool, 4, plan, ENET, FEATURES, seeds=seeds)

    assert [f.index for f in degraded.failures] == [1]
    assert degraded.failures[0].seed == seeds[1]
    assert len(degraded.members) == 3
    assert np.array_equal(
        ensemble_predict_codes(degraded, pool), ensemble_predict_codes(healthy, pool)
    )


def test_doubling_every_member_keeps_predictions():
    pool = _pool()
    plan = SamplingPlan(train_size=45, test_size=1)
    seeds = member_seeds(12, 4)
    single = ensemble_fit(pool, 4, plan, ENET, FEATURES, seeds=seeds)
    doubled = ensemble_fit(pool, 8, plan, ENET, FEATURES, seeds=[s for s in seeds for _ in (0, 1)])
    assert np.array_equal(
        ensemble_predict_codes(doubled, pool), ensemble_predict_codes(single, pool)
    )
