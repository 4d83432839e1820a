import numpy as np
import pandas as pd
import pytest

from lob_bench.errors import ParameterError
from lob_bench.learner_router import (
    check_model,
    comparisons_for_setups,
    get_feature_columns_for_setup,
    get_fitter_for_learner,
    learner_spec,
)
from lob_bench.learners import (
    decision_scores,
    fit_learner,
    load_model,
    model_matrix,
    predict,
    predict_codes,
    save_model,
)
from lob_bench.preprocess import fit_stats
from lob_bench.pydantic_models import (
    ALL_FEATURES,
    WINDOW_LEVEL_FEATURES,
    EnetParams,
    EnetSettings,
    Label,
    LearnerSpec,
    SvmParams,
    TrainedModel,
)

FEATURES = ["V1", "V2"]


def _rows(n=90, seed=0, classes=(0, 1, 2)):
    rng = np.random.default_rng(seed)
    codes = np.resize(np.array(classes), n)
    centres = np.array([[-1.5, 0.0], [0.0, 1.5], [1.5, 0.0]])
    X = centres[codes] + rng.normal(scale=0.5, size=(n, 2))
    return pd.DataFrame({"V1": X[:, 0], "V2": X[:, 1], "label": codes})


@pytest.fixture(params=["enet", "svm"])
def spec(request):
    return LearnerSpec(kind=request.param, use_cv=False, enet=EnetParams(lambda_=1e-3))


def test_unknown_learner_is_rejected():
    with pytest.raises(ParameterError):
        get_fitter_for_learner("knn")
    assert get_fitter_for_learner(" ENet ") is not None


def test_setup_feature_columns():
    fpc = ["FPC1", "FPC2"]
    assert get_feature_columns_for_setup("baseline", fpc) == ALL_FEATURES + fpc
    assert get_feature_columns_for_setup("within_window", fpc) == ALL_FEATURES
    assert get_feature_columns_for_setup("fpca", fpc) == WINDOW_LEVEL_FEATURES + fpc
    assert get_feature_columns_for_setup("standard", fpc) == WINDOW_LEVEL_FEATURES
    with pytest.raises(ParameterError):
        get_feature_columns_for_setup("everything", fpc)


def test_comparisons_need_both_setups():
    assert comparisons_for_setups(["baseline", "fpca"]) == {"strategy_i": ("baseline", "fpca")}
    assert set(comparisons_for_setups(["baseline", "ensemble", "within_window", "fpca", "standard"])) == {
        "strategy_i",
        "strategy_ii",
        "strategy_iii",
        "strategy_i_short",
    }


def test_learner_spec_from_settings():
    spec = learner_spec("svm", EnetSettings(), SvmParams(c=2.0))
    assert spec.kind == "svm"
    assert spec.svm.c == 2.0
    with pytest.raises(ParameterError):
        learner_spec("tree", EnetSettings(), SvmParams())


def test_fit_predict_round(spec):
    rows = _rows()
    model = fit_learner(rows, spec, FEATURES)
    labels = predict(model, rows)
    assert len(labels) == len(rows)
    assert set(labels) <= set(Label)
    assert np.mean(predict_codes(model, rows) == rows["label"].to_numpy()) > 0.85


def test_column_stats_are_attached(spec):
    rows = _rows()
    stats = fit_stats(rows, FEATURES)
    assert fit_learner(rows, spec, FEATURES, stats).column_stats == stats
    assert fit_learner(rows, spec, FEATURES).column_stats is None


def test_unseen_class_scores_minus_infinity(spec):
    rows = _rows(classes=(0, 2))
    model = fit_learner(rows, spec, FEATURES)
    scores = decision_scores(model, rows)
    assert scores.shape == (len(rows), 3)
    assert np.all(scores[:, 1] == -np.inf)
    assert np.isfinite(scores[:, [0, 2]]).all()
    assert set(predict_codes(model, rows)) <= {0, 2}


def test_predict_uses_feature_order(spec):
    rows = _rows()
    model = fit_learner(rows, spec, FEATURES)
    shuffled = rows[["label", "V2", "V1"]]
    assert np.array_equal(predict_codes(model, shuffled), predict_codes(model, rows))


def test_model_matrix_errors(spec):
    model = fit_learner(_rows(), spec, FEATURES)
    with pytest.raises(ParameterError):
        model_matrix(model, pd.DataFrame({"V1": [1.0]}))
    with pytest.raises(ParameterError):
        model_matrix(model, np.zeros((2, 3)))
    assert predict_codes(model, np.zeros((0, 2))).size == 0


def test_check_model_on_training_data(spec):
    rows = _rows()
    tight = spec.model_copy(
        update={"enet": EnetParams(lambda_=1e-3, tol=1e-10), "svm": SvmParams(tol=1e-6)}
    )
    model = fit_learner(rows, tight, FEATURES)
    reports = check_model(model, rows[FEATURES].to_numpy(), rows["label"].to_numpy())
    assert len(reports) == 3
    assert all(report["is_satisfied"] for report in reports), reports


def test_saved_model_predicts_identically(tmp_path, spec):
    rows = _rows()
    model = fit_learner(rows, spec, FEATURES, fit_stats(rows, FEATURES))
    loaded = load_model(save_model(model, tmp_path / "model.json"))
    assert loaded.kind == model.kind
    assert loaded.column_stats == model.column_stats
    assert np.array_equal(decision_scores(loaded, rows), decision_scores(model, rows))


def test_empty_rows_predict_nothing(spec):
    model = fit_learner(_rows(), spec, FEATURES)
    empty = _rows().iloc[:0]
    assert predict(model, empty) == []
    assert predict_codes(model, empty).dtype == np.int64
    assert decision_scores(model, empty).shape == (0, 3)


def test_intercept_only_model_predicts_its_largest_intercept():
    model = TrainedModel(
        kind="enet",
        classes=[Label.DOWNWARDS, Label.STATIONARY, Label.UPWARDS],
        feature_order=FEATURES,
        params={"lambda": 10.0, "alpha_star": 1.0},
        coef=np.zeros((3, 2)),
        intercept=np.array([-0.4, 0.3, 0.1]),
    )
    rows = _rows()
    assert predict(model, rows) == [Label.STATIONARY] * len(rows)
    assert np.allclose(decision_scores(model, rows), [-0.4, 0.3, 0.1])
