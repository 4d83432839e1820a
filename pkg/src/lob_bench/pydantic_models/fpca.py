from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ._arrays import FloatArray


class Trajectory(BaseModel):
    """Mid-price history sampled on a uniform grid over the normalized horizon [0, 1)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: FloatArray
    values: FloatArray
    day: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "Trajectory":
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("A trajectory needs a 1-D grid of at least 2 points")
        if self.values.shape != self.grid.shape:
            raise ValueError("Trajectory values must match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Trajectory values must be finite")
        return self


class FpcaBasis(BaseModel):
    """Frozen FPCA basis; ``components`` has shape (J, G)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    format_version: int = 1
    grid: FloatArray
    mean_curve: FloatArray
    components: FloatArray
    eigenvalues: FloatArray
    total_variance: float = Field(ge=0)
    quadrature_weight: float = Field(gt=0)
    variance_threshold: float = Field(gt=0, le=1)
    diagnostics: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "FpcaBasis":
        n_grid = self.grid.size
        if self.components.size == 0:
            object.__setattr__(self, "components", self.components.reshape(0, n_grid))
        if self.components.ndim != 2 or self.components.shape[1] != n_grid:
            raise ValueError("components must have shape (J, G)")
        if self.eigenvalues.shape != (self.components.shape[0],):
            raise ValueError("one eigenvalue per component is required")
        if self.mean_curve.shape != self.grid.shape:
            raise ValueError("mean_curve must match the grid")
        return self

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])


class FpcScores(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scores: FloatArray
    day: Optional[int] = None
