from pydantic import BaseModel, Field, model_validator

from .windows import LABEL_ORDER, Label


class ColumnStat(BaseModel):
    q1: float
    q3: float
    iqr: float
    lower: float
    upper: float
    mean: float
    stddev: float = Field(ge=0)
    constant: bool = False

    @model_validator(mode="after")
    def _check_bounds(self) -> "ColumnStat":
        if self.lower > self.upper:
            raise ValueError("winsorization lower bound exceeds upper bound")
        return self


class ColumnStats(BaseModel):
    """Training-sample statistics per feature column."""

    format_version: int = 1
    columns: dict[str, ColumnStat]


def _balanced_ratio() -> dict[Label, float]:
    return {label: 1.0 / len(LABEL_ORDER) for label in LABEL_ORDER}


class SamplingPlan(BaseModel):
    train_size: int = Field(gt=0)
    test_size: int = Field(gt=0)
    ratio: dict[Label, float] = Field(default_factory=_balanced_ratio)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_ratio(self) -> "SamplingPlan":
        if any(value < 0 for value in self.ratio.values()):
            raise ValueError("label proportions must be non-negative")
        if abs(sum(self.ratio.values()) - 1.0) > 1e-9:
            raise ValueError("label proportions must sum to 1")
        return self
