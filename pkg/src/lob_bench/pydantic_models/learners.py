from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ._arrays import FloatArray
from .preprocess import ColumnStats
from .windows import Label


class EnetParams(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(default=1e-3, ge=0, alias="lambda")
    alpha_star: float = Field(default=0.5, ge=0, le=1)
    max_iters: int = Field(default=100_000, gt=0)
    tol: float = Field(default=1e-7, gt=0)


class EnetGrid(BaseModel):
    """Two-layer CV grid: λ log-spaced over [lambda_min, lambda_max], α* from alpha_grid."""

    lambda_min: float = Field(default=1e-8, gt=0)
    lambda_max: float = Field(default=5.0, gt=0)
    lambda_count: int = Field(default=100, ge=1)
    alpha_grid: list[float] = Field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    folds: int = Field(default=5, ge=2)
    seed: int = Field(default=0, ge=0, lt=2**64)

    def lambdas(self) -> np.ndarray:
        if self.lambda_count == 1:
            return np.array([self.lambda_max])
        return np.geomspace(self.lambda_min, self.lambda_max, self.lambda_count)

    @property
    def n_candidates(self) -> int:
        return self.lambda_count * len(self.alpha_grid)


class SvmParams(BaseModel):
    """Polynomial-kernel SVM, κ(x, y) = (x·y + 1)^degree."""

    degree: int = Field(default=2, ge=1)
    c: float = Field(default=0.25, gt=0)
    tol: float = Field(default=1e-3, gt=0)
    max_iter: int = Field(default=200_000, gt=0)


class LearnerSpec(BaseModel):
    kind: Literal["enet", "svm"] = "enet"
    enet: EnetParams = Field(default_factory=EnetParams)
    enet_grid: EnetGrid = Field(default_factory=EnetGrid)
    use_cv: bool = True
    svm: SvmParams = Field(default_factory=SvmParams)


class PairwiseMachine(BaseModel):
    """One-vs-one soft-margin SVM; f(x) = Σ dual_coef_i κ(sv_i, x) + bias, f > 0 → positive."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    positive: Label
    negative: Label
    support_vectors: FloatArray
    dual_coef: FloatArray
    bias: float
    converged: bool = True
    iterations: int = 0


class TrainedModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    format_version: int = 1
    kind: Literal["enet", "svm"]
    classes: list[Label]
    feature_order: list[str]
    params: dict
    # ENet: one row per class (one-vs-rest)
    coef: Optional[FloatArray] = None
    intercept: Optional[FloatArray] = None
    # SVM: one machine per class pair
    machines: list[PairwiseMachine] = Field(default_factory=list)
    column_stats: Optional[ColumnStats] = None
    converged: bool = True
    diagnostics: list[str] = Field(default_factory=list)
    cv_summary: Optional[dict] = None
