"""
One-vs-rest elastic-net logistic regression.

Per class the objective is

    mean logistic loss + lambda * (alpha * |beta|_1 + (1 - alpha) / 2 * |beta|_2^2)

with an unpenalized intercept. Each sweep is a proximal Newton step: the loss
is replaced by its second-order model at the current point (weighted Gram
matrix), the penalized quadratic is minimized by cyclic coordinate descent with
soft thresholding, and the full objective is line-searched along the result.
The Gram matrix is (p+1) x (p+1), so the coordinate passes never touch the n
training rows. Backtracking keeps every sweep non-increasing.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import expit

from lob_bench.errors import FitError
from lob_bench.pydantic_models import (
    LABEL_ORDER,
    EnetGrid,
    EnetParams,
    Label,
    TrainedModel,
)

logger = logging.getLogger(__name__)

KIND = "enet"
_MONOTONE_SLACK = 1e-12
_CURVATURE_FLOOR = 1e-12
_ARMIJO = 1e-4
_MAX_HALVINGS = 40
_MAX_INNER_PASSES = 1_000


@dataclass
class BinaryFit:
    beta: np.ndarray
    intercept: float
    converged: bool
    sweeps: int
    objective: float
    objective_trace: list[float] = field(default_factory=list)


def soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _loss(eta: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, eta) - target * eta))


def _penalty(beta: np.ndarray, lam: float, alpha: float) -> float:
    return lam * (alpha * float(np.abs(beta).sum()) + (1 - alpha) / 2 * float(beta @ beta))


def objective(
    X: np.ndarray, target: np.ndarray, beta: np.ndarray, intercept: float, lam: float, alpha: float
) -> float:
    return _loss(intercept + X @ beta, target) + _penalty(beta, lam, alpha)


def _active_set_solution(
    H: np.ndarray, g: np.ndarray, w: np.ndarray, z: np.ndarray, l1: float, ridge: float
) -> Optional[np.ndarray]:
    """
    Exact minimizer of the quadratic model with the support and signs of ``z``,
    or None when it breaks sign consistency or the zero coefficients' optimality.
    Index 0 is the unpenalized intercept.
    """
    if l1 == 0.0:
        active = np.arange(z.size)
        signs = np.zeros(z.size)
    else:
        active = np.union1d([0], np.flatnonzero(z != 0))
        signs = np.sign(z[active])
        signs[0] = 0.0
    system = H[np.ix_(active, active)].copy()
    system[1:, 1:] += ridge * np.eye(active.size - 1)
    rhs = H[active] @ w - g[active] - l1 * signs
    try:
        solved = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(solved).all():
        return None
    if l1 > 0.0 and np.any(np.sign(solved[1:]) != signs[1:]):
        return None

    candidate = np.zeros_like(z)
    candidate[active] = solved
    gradient = g + H @ (candidate - w)
    inactive = np.ones(z.size, dtype=bool)
    inactive[active] = False
    if np.any(np.abs(gradient[inactive]) > l1 * (1 + 1e-9) + 1e-12):
        return None
    return candidate


def _minimize_model(
    H: np.ndarray, g: np.ndarray, w: np.ndarray, lam: float, alpha: float, tol: float
) -> np.ndarray:
    """Minimize g.(z - w) + (z - w)'H(z - w)/2 + penalty(z[1:]) over z."""
    l1 = lam * alpha
    ridge = lam * (1 - alpha)
    z = w.copy()
    gradient = g.copy()
    diagonal = np.diag(H).tolist()
    for _ in range(_MAX_INNER_PASSES):
        largest = 0.0
        for j, hjj in enumerate(diagonal):
            current = float(z[j])
            if j == 0:
                if hjj < _CURVATURE_FLOOR:
                    continue
                new = current - float(gradient[j]) / hjj
            else:
                if hjj + ridge < _CURVATURE_FLOOR:
                    continue
                new = soft_threshold(hjj * current - float(gradient[j]), l1) / (hjj + ridge)
            delta = new - current
            if delta != 0.0:
                z[j] = new
                gradient += H[:, j] * delta
                largest = max(largest, abs(delta))
        if largest < tol:
            return z
        polished = _active_set_solution(H, g, w, z, l1, ridge)
        if polished is not None:
            return polished
    return z


def fit_binary(
    X: np.ndarray,
    target: np.ndarray,
    lam: float,
    alpha: float,
    max_iters: int = 100_000,
    tol: float = 1e-7,
    beta: Optional[np.ndarray] = None,
    intercept: Optional[float] = None,
    record_trace: bool = False,
) -> BinaryFit:
    """
    Proximal Newton sweeps for one binary problem (``target`` in {0, 1}).

    Converged when the largest coefficient change proposed by a sweep is below
    ``tol``; ``max_iters`` caps the number of sweeps.

    Raises:
        FitError: If a sweep increases the objective.
    """
    n, p = X.shape
    beta = np.zeros(p) if beta is None else np.array(beta, dtype=np.float64)
    if intercept is None:
        rate = float(np.clip(target.mean(), 1e-6, 1 - 1e-6))
        intercept = float(np.log(rate / (1 - rate)))

    design = np.column_stack([np.ones(n), X])
    w = np.concatenate([[intercept], beta])
    eta = design @ w
    current = _loss(eta, target) + _penalty(w[1:], lam, alpha)
    trace = [current] if record_trace else []

    converged = False
    sweeps = 0
    while sweeps < max_iters:
        sweeps += 1
        start = current
        prob = expit(eta)
        g = design.T @ (prob - target) / n
        H = design.T @ (design * (prob * (1 - prob))[:, None]) / n

        z = _minimize_model(H, g, w, lam, alpha, 0.1 * tol)
        direction = z - w
        step_size = float(np.abs(direction).max(initial=0.0))
        decrease = float(g @ direction) + _penalty(z[1:], lam, alpha) - _penalty(w[1:], lam, alpha)
        slack = _MONOTONE_SLACK * max(1.0, abs(start))

        moved = design @ direction
        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            trial_w = w + t * direction
            trial_eta = eta + t * moved
            trial = _loss(trial_eta, target) + _penalty(trial_w[1:], lam, alpha)
            if trial <= start + _ARMIJO * t * min(decrease, 0.0) + slack:
                w, eta, current = trial_w, trial_eta, trial
                accepted = True
                break
            t /= 2

        if record_trace:
            trace.append(current)
        if current > start + slack:
            raise FitError(f"Objective increased during sweep {sweeps}: {start} -> {current}")
        if step_size < tol:
            converged = True
            break
        if not accepted:
            logger.debug(f"Line search stalled at sweep {sweeps} with step {step_size:.3g}")
            break

    return BinaryFit(
        beta=w[1:].copy(),
        intercept=float(w[0]),
        converged=converged,
        sweeps=sweeps,
        objective=current,
        objective_trace=trace,
    )


def design_matrix(rows: pd.DataFrame, feature_order: list[str]) -> np.ndarray:
    missing = [c for c in feature_order if c not in rows.columns]
    if missing:
        raise FitError(f"Training rows lack feature column(s) {missing}")
    X = rows[feature_order].to_numpy(dtype=np.float64)
    if not np.isfinite(X).all():
        raise FitError("Training features must be finite")
    return X


def training_classes(codes: np.ndarray) -> list[Label]:
    present = [label for c, label in enumerate(LABEL_ORDER) if np.any(codes == c)]
    if len(present) < 2:
        raise FitError("Training rows contain fewer than 2 classes")
    return present


def _fit_arrays(
    X: np.ndarray,
    codes: np.ndarray,
    classes: list[Label],
    params: EnetParams,
    start: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> tuple[np.ndarray, np.ndarray, list[bool]]:
    coef = np.zeros((len(classes), X.shape[1]))
    intercept = np.zeros(len(classes))
    converged = []
    for row, label in enumerate(classes):
        target = (codes == LABEL_ORDER.index(label)).astype(np.float64)
        fitted = fit_binary(
            X,
            target,
            params.lambda_,
            params.alpha_star,
            params.max_iters,
            params.tol,
            beta=None if start is None else start[0][row],
            intercept=None if start is None else float(start[1][row]),
        )
        coef[row] = fitted.beta
        intercept[row] = fitted.intercept
        converged.append(fitted.converged)
    return coef, intercept, converged


def enet_fit(
    train: pd.DataFrame, params: EnetParams, feature_order: list[str]
) -> TrainedModel:
    """
    Fit one binary elastic-net logistic model per class present in ``train``.

    Non-convergence is reported through ``converged=False`` and a diagnostic,
    never raised.

    Raises:
        FitError: For a single-class training set or non-finite features.
    """
    X = design_matrix(train, feature_order)
    codes = train["label"].to_numpy(dtype=np.int64)
    classes = training_classes(codes)
    coef, intercept, converged = _fit_arrays(X, codes, classes, params)

    diagnostics = []
    for label, ok in zip(classes, converged):
        if not ok:
            message = (
                f"ENet for class {label.value} did not converge within "
                f"{params.max_iters} sweeps"
            )
            logger.warning(message)
            diagnostics.append(message)

    return TrainedModel(
        kind=KIND,
        classes=classes,
        feature_order=list(feature_order),
        params=params.model_dump(by_alias=True),
        coef=coef,
        intercept=intercept,
        converged=all(converged),
        diagnostics=diagnostics,
    )


def decision_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Linear scores, one column per model class."""
    return X @ model.coef.T + model.intercept


def predict_codes(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    scores = decision_scores(model, X)
    class_codes = np.array([LABEL_ORDER.index(label) for label in model.classes])
    return class_codes[np.argmax(scores, axis=1)]


def fold_assignment(codes: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Stratified fold ids: each class is shuffled and dealt round-robin."""
    rng = np.random.default_rng(seed)
    assignment = np.empty(codes.size, dtype=np.int64)
    for c in range(len(LABEL_ORDER)):
        members = np.flatnonzero(codes == c)
        shuffled = rng.permutation(members)
        assignment[shuffled] = np.arange(shuffled.size) % folds
    return assignment


def _macro_f1(predicted: np.ndarray, actual: np.ndarray) -> float:
    scores = []
    for c in range(len(LABEL_ORDER)):
        tp = np.count_nonzero((predicted == c) & (actual == c))
        fp = np.count_nonzero((predicted == c) & (actual != c))
        fn = np.count_nonzero((predicted != c) & (actual == c))
        scores.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    return float(np.mean(scores))


def _fold_path(
    X: np.ndarray,
    codes: np.ndarray,
    assignment: np.ndarray,
    fold: int,
    alpha_star: float,
    lambdas: np.ndarray,
    base: EnetParams,
) -> np.ndarray:
    """Validation macro-F1 along a descending lambda path, warm-started."""
    train_mask = assignment != fold
    X_train, codes_train = X[train_mask], codes[train_mask]
    X_valid, codes_valid = X[~train_mask], codes[~train_mask]
    classes = training_classes(codes_train)
    class_codes = np.array([LABEL_ORDER.index(label) for label in classes])

    scores = np.zeros(lambdas.size)
    start = None
    for position, lam in enumerate(lambdas):
        params = base.model_copy(update={"lambda_": float(lam), "alpha_star": alpha_star})
        coef, intercept, _ = _fit_arrays(X_train, codes_train, classes, params, start)
        start = (coef, intercept)
        predicted = class_codes[np.argmax(X_valid @ coef.T + intercept, axis=1)]
        scores[position] = _macro_f1(predicted, codes_valid)
    return scores


def enet_cv_fit(
    train: pd.DataFrame,
    grid: EnetGrid,
    feature_order: list[str],
    base: EnetParams | None = None,
    n_jobs: int = 1,
) -> TrainedModel:
    """
    Choose (lambda, alpha*) by k-fold mean validation macro-F1, then refit on
    all of ``train``. Ties go to the larger lambda, then the larger alpha*.
    """
    base = base or EnetParams()
    X = design_matrix(train, feature_order)
    codes = train["label"].to_numpy(dtype=np.int64)
    training_classes(codes)

    lambdas = np.sort(grid.lambdas())[::-1]
    alphas = list(grid.alpha_grid)
    assignment = fold_assignment(codes, grid.folds, grid.seed)

    jobs = [(a, fold) for a in range(len(alphas)) for fold in range(grid.folds)]
    paths = Parallel(n_jobs=n_jobs)(
        delayed(_fold_path)(X, codes, assignment, fold, alphas[a], lambdas, base)
        for a, fold in jobs
    )
    mean_f1 = np.zeros((len(alphas), lambdas.size))
    for (a, _), path in zip(jobs, paths):
        mean_f1[a] += path / grid.folds

    best = None
    for a, alpha_star in enumerate(alphas):
        for position, lam in enumerate(lambdas):
            key = (mean_f1[a, position], lam, alpha_star)
            if best is None or key > best:
                best = key
    best_f1, best_lambda, best_alpha = best
    logger.info(
        f"ENet CV over {grid.n_candidates} candidate(s): lambda={best_lambda:.3g}, "
        f"alpha*={best_alpha}, macro-F1={best_f1:.4f}"
    )

    chosen = base.model_copy(update={"lambda_": float(best_lambda), "alpha_star": best_alpha})
    model = enet_fit(train, chosen, feature_order)
    summary: Dict[str, Any] = {
        "lambda": float(best_lambda),
        "alpha_star": float(best_alpha),
        "mean_macro_f1": float(best_f1),
        "n_candidates": grid.n_candidates,
        "folds": grid.folds,
    }
    return model.model_copy(update={"cv_summary": summary})


def check_kkt_enet(
    X: np.ndarray,
    target: np.ndarray,
    beta: np.ndarray,
    intercept: float,
    lam: float,
    alpha: float,
    tolerance: float = 1e-6,
) -> Dict[str, Any]:
    """
    Optimality check of one binary fit.

    Zero coefficients need |smooth gradient| <= lambda*alpha + tolerance;
    nonzero ones need the subgradient equation within tolerance; the intercept
    needs a vanishing gradient.
    """
    n = X.shape[0]
    residual = expit(intercept + X @ beta) - target
    smooth = X.T @ residual / n + lam * (1 - alpha) * beta
    zero = beta == 0
    violation = np.where(
        zero,
        np.maximum(np.abs(smooth) - lam * alpha, 0.0),
        np.abs(smooth + lam * alpha * np.sign(beta)),
    )
    intercept_violation = abs(float(residual.mean()))
    max_violation = max(float(violation.max(initial=0.0)), intercept_violation)
    return {
        "max_violation": max_violation,
        "intercept_violation": intercept_violation,
        "tolerance": tolerance,
        "is_satisfied": max_violation <= tolerance,
    }
