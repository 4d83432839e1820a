"""
One-vs-one soft-margin SVM with the polynomial kernel (x.y + 1)^d, trained by
sequential minimal optimization (second-order working-set selection).

The dual is solved in the minimization form

    min 1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K_ij

and each machine predicts f(x) = sum_i a_i y_i K(x_i, x) - rho.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict

import numpy as np
import pandas as pd

from lob_bench.learner_functions.enet import design_matrix, training_classes
from lob_bench.pydantic_models import (
    LABEL_ORDER,
    PairwiseMachine,
    SvmParams,
    TrainedModel,
)

logger = logging.getLogger(__name__)

KIND = "svm"
_TAU = 1e-12


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    converged: bool
    iterations: int


def polynomial_kernel(A: np.ndarray, B: np.ndarray, degree: int) -> np.ndarray:
    return (A @ B.T + 1.0) ** degree


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    weighted = alpha * y
    return 0.5 * float(weighted @ K @ weighted) - float(alpha.sum())


def _rho(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, c: float) -> float:
    yG = y * G
    upper = alpha >= c
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return float(yG[free].mean())
    # no free vectors: midpoint of the feasible interval
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = float(yG[ub_mask].min()) if ub_mask.any() else np.inf
    lb = float(yG[lb_mask].max()) if lb_mask.any() else -np.inf
    return (ub + lb) / 2


def smo(K: np.ndarray, y: np.ndarray, c: float, tol: float = 1e-3, max_iter: int = 200_000) -> SmoResult:
    """
    Solve one binary dual. ``y`` holds +1/-1; stops when the maximal KKT
    violation m(a) - M(a) drops below ``tol`` or after ``max_iter`` updates.
    """
    n = y.size
    y = y.astype(np.float64)
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)

    converged = False
    iterations = 0
    while iterations < max_iter:
        minus_yG = -y * G
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            converged = True
            break

        up_values = np.where(up, minus_yG, -np.inf)
        i = int(np.argmax(up_values))
        g_max = up_values[i]
        g_min = float(np.where(low, minus_yG, np.inf).min())
        if g_max - g_min < tol:
            converged = True
            break

        # second-order choice of j among violating low candidates
        b = g_max - minus_yG
        candidates = low & (b > 0)
        quad = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        quad = np.where(quad > 0, quad, _TAU)
        gain = np.where(candidates, -(b * b) / quad, np.inf)
        j = int(np.argmin(gain))
        iterations += 1

        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad_ij = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad_ij = quad_ij if quad_ij > 0 else _TAU
            delta = (-G[i] - G[j]) / quad_ij
            diff = old_i - old_j
            a_i, a_j = old_i + delta, old_j + delta
            if diff > 0:
                if a_j < 0:
                    a_j, a_i = 0.0, diff
            elif a_i < 0:
                a_i, a_j = 0.0, -diff
            if diff > 0:
                if a_i > c:
                    a_i, a_j = c, c - diff
            elif a_j > c:
                a_j, a_i = c, c + diff
        else:
            quad_ij = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad_ij = quad_ij if quad_ij > 0 else _TAU
            delta = (G[i] - G[j]) / quad_ij
            total = old_i + old_j
            a_i, a_j = old_i - delta, old_j + delta
            if total > c:
                if a_i > c:
                    a_i, a_j = c, total - c
            elif a_j < 0:
                a_j, a_i = 0.0, total
            if total > c:
                if a_j > c:
                    a_j, a_i = c, total - c
            elif a_i < 0:
                a_i, a_j = 0.0, total

        alpha[i], alpha[j] = a_i, a_j
        G += Q[:, i] * (a_i - old_i) + Q[:, j] * (a_j - old_j)

    return SmoResult(alpha=alpha, rho=_rho(alpha, y, G, c), converged=converged, iterations=iterations)


def _fit_machine(
    X: np.ndarray, codes: np.ndarray, positive: int, negative: int, params: SvmParams
) -> PairwiseMachine:
    mask = (codes == positive) | (codes == negative)
    X_pair = X[mask]
    y = np.where(codes[mask] == positive, 1.0, -1.0)
    result = smo(
        polynomial_kernel(X_pair, X_pair, params.degree), y, params.c, params.tol, params.max_iter
    )
    support = result.alpha > 0
    return PairwiseMachine(
        positive=LABEL_ORDER[positive],
        negative=LABEL_ORDER[negative],
        support_vectors=X_pair[support],
        dual_coef=result.alpha[support] * y[support],
        bias=-result.rho,
        converged=result.converged,
        iterations=result.iterations,
    )


def svm_fit(train: pd.DataFrame, params: SvmParams, feature_order: list[str]) -> TrainedModel:
    """
    One machine per pair of classes present, in class order; the first class of
    a pair is the positive side.

    Raises:
        FitError: For a single-class training set or non-finite features.
    """
    X = design_matrix(train, feature_order)
    codes = train["label"].to_numpy(dtype=np.int64)
    classes = training_classes(codes)
    class_codes = [LABEL_ORDER.index(label) for label in classes]

    machines = [
        _fit_machine(X, codes, positive, negative, params)
        for positive, negative in combinations(class_codes, 2)
    ]
    diagnostics = []
    for machine in machines:
        if not machine.converged:
            message = (
                f"SMO for {machine.positive.value} vs {machine.negative.value} hit the "
                f"iteration cap ({params.max_iter})"
            )
            logger.warning(message)
            diagnostics.append(message)

    return TrainedModel(
        kind=KIND,
        classes=classes,
        feature_order=list(feature_order),
        params=params.model_dump(),
        machines=machines,
        converged=all(machine.converged for machine in machines),
        diagnostics=diagnostics,
    )


def machine_decision(machine: PairwiseMachine, X: np.ndarray, degree: int) -> np.ndarray:
    if machine.support_vectors.size == 0:
        return np.full(X.shape[0], machine.bias)
    return polynomial_kernel(X, machine.support_vectors, degree) @ machine.dual_coef + machine.bias


def _votes_and_scores(model: TrainedModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    degree = int(model.params["degree"])
    column = {label: position for position, label in enumerate(model.classes)}
    votes = np.zeros((X.shape[0], len(model.classes)))
    scores = np.zeros((X.shape[0], len(model.classes)))
    for machine in model.machines:
        f = machine_decision(machine, X, degree)
        positive, negative = column[machine.positive], column[machine.negative]
        wins = f > 0
        votes[:, positive] += wins
        votes[:, negative] += ~wins
        scores[:, positive] += f
        scores[:, negative] -= f
    return votes, scores


def decision_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Summed pairwise decision values, one column per model class."""
    return _votes_and_scores(model, X)[1]


def predict_codes(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Pairwise majority vote; ties go to the larger summed decision value, then class order."""
    votes, scores = _votes_and_scores(model, X)
    tied = votes == votes.max(axis=1, keepdims=True)
    masked = np.where(tied, scores, -np.inf)
    best = tied & (masked == masked.max(axis=1, keepdims=True))
    class_codes = np.array([LABEL_ORDER.index(label) for label in model.classes])
    return class_codes[np.argmax(best, axis=1)]


def check_svm_dual(
    machine: PairwiseMachine, c: float, degree: int, tolerance: float = 1e-3
) -> Dict[str, Any]:
    """
    Dual feasibility (0 <= a <= C, sum a_i y_i = 0) and the margin condition
    y f(x) = 1 on free support vectors.
    """
    alpha = np.abs(machine.dual_coef)
    y = np.sign(machine.dual_coef)
    equality_residual = float(machine.dual_coef.sum())
    box_ok = bool(np.all(alpha >= 0) and np.all(alpha <= c * (1 + 1e-12)))

    free = (alpha > 0) & (alpha < c * (1 - 1e-9))
    if free.any():
        margins = y[free] * machine_decision(machine, machine.support_vectors[free], degree)
        margin_error = float(np.abs(margins - 1.0).max())
    else:
        margin_error = 0.0
    return {
        "equality_residual": equality_residual,
        "box_satisfied": box_ok,
        "max_margin_error": margin_error,
        "tolerance": tolerance,
        "is_satisfied": box_ok and abs(equality_residual) <= 1e-8 and margin_error <= tolerance,
    }
