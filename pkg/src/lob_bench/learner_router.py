"""
Name-keyed registries: learners, feature sets per setup, strategy comparisons.
"""

from typing import Callable, Dict

import numpy as np
import pandas as pd

from lob_bench.errors import ParameterError
from lob_bench.learner_functions import enet, svm
from lob_bench.pydantic_models import (
    ALL_FEATURES,
    LABEL_ORDER,
    WINDOW_LEVEL_FEATURES,
    EnetSettings,
    LearnerSpec,
    PairwiseMachine,
    SvmParams,
    TrainedModel,
)

# learner kind -> fit(train, spec, feature_order, n_jobs) -> TrainedModel
LEARNER_FITTERS: Dict[str, Callable[[pd.DataFrame, LearnerSpec, list[str], int], TrainedModel]] = {
    "enet": lambda train, spec, order, n_jobs: (
        enet.enet_cv_fit(train, spec.enet_grid, order, spec.enet, n_jobs)
        if spec.use_cv
        else enet.enet_fit(train, spec.enet, order)
    ),
    "svm": lambda train, spec, order, n_jobs: svm.svm_fit(train, spec.svm, order),
}
# learner kind -> class-code predictor
LEARNER_PREDICTORS: Dict[str, Callable[[TrainedModel, np.ndarray], np.ndarray]] = {
    "enet": enet.predict_codes,
    "svm": svm.predict_codes,
}
# learner kind -> per-class decision scores
LEARNER_SCORERS: Dict[str, Callable[[TrainedModel, np.ndarray], np.ndarray]] = {
    "enet": enet.decision_scores,
    "svm": svm.decision_scores,
}
# learner kind -> per-part optimality checker
LEARNER_CHECKERS: Dict[str, Callable[..., dict]] = {
    "enet": enet.check_kkt_enet,
    "svm": svm.check_svm_dual,
}

# setup -> feature columns, given the FPC score columns of the repeat
SETUP_FEATURES: Dict[str, Callable[[list[str]], list[str]]] = {
    "baseline": lambda fpc: ALL_FEATURES + fpc,
    "ensemble": lambda fpc: ALL_FEATURES + fpc,
    "within_window": lambda fpc: list(ALL_FEATURES),
    "fpca": lambda fpc: WINDOW_LEVEL_FEATURES + fpc,
    "standard": lambda fpc: list(WINDOW_LEVEL_FEATURES),
}
SETUPS_WITH_FPCA = {"baseline", "ensemble", "fpca"}
ENSEMBLE_SETUPS = {"ensemble"}

# strategy -> (setup, setup) whose macro-F1 difference (first - second) is tested
STRATEGY_COMPARISONS: Dict[str, tuple[str, str]] = {
    "strategy_i": ("baseline", "fpca"),
    "strategy_ii": ("ensemble", "baseline"),
    "strategy_iii": ("baseline", "within_window"),
    "strategy_i_short": ("within_window", "standard"),
}


def get_fitter_for_learner(kind: str):
    """
    Raises:
        ParameterError: If no learner is registered under ``kind``.
    """
    func = LEARNER_FITTERS.get(kind.strip().lower())
    if func is None:
        raise ParameterError(
            f"Unknown learner '{kind}'. Known learners: {list(LEARNER_FITTERS.keys())}"
        )
    return func


def get_predictor_for_model(model: TrainedModel):
    return LEARNER_PREDICTORS[model.kind]


def get_scorer_for_model(model: TrainedModel):
    return LEARNER_SCORERS[model.kind]


def check_model(
    model: TrainedModel, X: np.ndarray, codes: np.ndarray, tolerance: float = 1e-4
) -> list[dict]:
    """
    Run the optimality checker of the model's learner on each part (class for
    ENet, class pair for SVM), on the training data.
    """
    checker = LEARNER_CHECKERS[model.kind]
    if model.kind == "enet":
        params = model.params
        return [
            checker(
                X,
                (codes == LABEL_ORDER.index(label)).astype(np.float64),
                model.coef[row],
                float(model.intercept[row]),
                params["lambda"],
                params["alpha_star"],
                tolerance=tolerance,
            )
            for row, label in enumerate(model.classes)
        ]
    machines: list[PairwiseMachine] = model.machines
    return [
        checker(machine, model.params["c"], int(model.params["degree"]), tolerance)
        for machine in machines
    ]


def get_feature_columns_for_setup(setup: str, fpc_columns: list[str]) -> list[str]:
    """
    Raises:
        ParameterError: If ``setup`` is not registered.
    """
    func = SETUP_FEATURES.get(setup)
    if func is None:
        raise ParameterError(
            f"Unknown setup '{setup}'. Known setups: {list(SETUP_FEATURES.keys())}"
        )
    return func(list(fpc_columns))


def comparisons_for_setups(setups: list[str]) -> Dict[str, tuple[str, str]]:
    """Strategies whose two setups are both configured."""
    return {
        name: pair
        for name, pair in STRATEGY_COMPARISONS.items()
        if pair[0] in setups and pair[1] in setups
    }


def learner_spec(kind: str, enet_settings: EnetSettings, svm_params: SvmParams) -> LearnerSpec:
    get_fitter_for_learner(kind)
    return LearnerSpec(
        kind=kind,
        enet=enet_settings.params,
        enet_grid=enet_settings.grid,
        use_cv=enet_settings.use_cv,
        svm=svm_params,
    )
