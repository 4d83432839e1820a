"""Fitting, prediction and persistence of base learners."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from lob_bench.errors import ParameterError
from lob_bench.learner_functions.enet import enet_cv_fit, enet_fit
from lob_bench.learner_functions.svm import svm_fit
from lob_bench.learner_router import (
    get_fitter_for_learner,
    get_predictor_for_model,
    get_scorer_for_model,
)
from lob_bench.pydantic_models import (
    LABEL_ORDER,
    ColumnStats,
    Label,
    LearnerSpec,
    TrainedModel,
    labels_from_codes,
)

logger = logging.getLogger(__name__)

__all__ = [
    "decision_scores",
    "enet_cv_fit",
    "enet_fit",
    "fit_learner",
    "load_model",
    "model_matrix",
    "predict",
    "predict_codes",
    "save_model",
    "svm_fit",
]


def fit_learner(
    train: pd.DataFrame,
    spec: LearnerSpec,
    feature_order: list[str],
    column_stats: ColumnStats | None = None,
    n_jobs: int = 1,
) -> TrainedModel:
    model = get_fitter_for_learner(spec.kind)(train, spec, list(feature_order), n_jobs)
    if column_stats is not None:
        model = model.model_copy(update={"column_stats": column_stats})
    return model


def model_matrix(model_or_order: TrainedModel | list[str], rows: pd.DataFrame | np.ndarray) -> np.ndarray:
    """
    Feature matrix in the model's feature order.

    Raises:
        ParameterError: If rows lack a model feature (or an array has the wrong width).
    """
    order = (
        model_or_order.feature_order
        if isinstance(model_or_order, TrainedModel)
        else model_or_order
    )
    if isinstance(rows, pd.DataFrame):
        missing = [name for name in order if name not in rows.columns]
        if missing:
            raise ParameterError(f"Rows lack model feature(s) {missing}")
        return rows[order].to_numpy(dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != len(order):
        raise ParameterError(
            f"Expected a matrix with {len(order)} column(s) in the model feature order"
        )
    return rows


def predict_codes(model: TrainedModel, rows: pd.DataFrame | np.ndarray) -> np.ndarray:
    X = model_matrix(model, rows)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return get_predictor_for_model(model)(model, X)


def predict(model: TrainedModel, rows: pd.DataFrame | np.ndarray) -> list[Label]:
    return labels_from_codes(predict_codes(model, rows))


def decision_scores(model: TrainedModel, rows: pd.DataFrame | np.ndarray) -> np.ndarray:
    """
    (n, 3) score matrix in class order; classes the model never saw score
    -inf.
    """
    X = model_matrix(model, rows)
    full = np.full((X.shape[0], len(LABEL_ORDER)), -np.inf)
    if X.shape[0] == 0:
        return full
    scores = get_scorer_for_model(model)(model, X)
    for position, label in enumerate(model.classes):
        full[:, LABEL_ORDER.index(label)] = scores[:, position]
    return full


def save_model(model: TrainedModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Saved {model.kind} model to {path}")
    return path


def load_model(path: str | Path) -> TrainedModel:
    return TrainedModel.model_validate_json(Path(path).read_text(encoding="utf-8"))
