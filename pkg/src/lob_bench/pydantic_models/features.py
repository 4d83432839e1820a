import math
from enum import Enum

from pydantic import BaseModel, model_validator

from .windows import Label


class FeatureId(str, Enum):
    V1 = "V1"
    V2 = "V2"
    V3 = "V3"
    V4 = "V4"
    V5 = "V5"
    V6 = "V6"
    V7 = "V7"
    V8 = "V8"
    V9 = "V9"
    V10 = "V10"
    V11 = "V11"
    V12 = "V12"
    V13 = "V13"
    V14 = "V14"
    V15 = "V15"
    V16 = "V16"
    V17 = "V17"
    V18 = "V18"
    V19 = "V19"
    V20 = "V20"
    V21 = "V21"
    V22 = "V22"


WITHIN_WINDOW_FEATURES: list[str] = [f"V{n}" for n in range(1, 11)]
WINDOW_LEVEL_FEATURES: list[str] = [f"V{n}" for n in range(11, 23)]
ALL_FEATURES: list[str] = WITHIN_WINDOW_FEATURES + WINDOW_LEVEL_FEATURES

FPC_PREFIX = "FPC"


def fpc_feature_id(j: int) -> str:
    """Identifier of the j-th (1-based) FPC score column."""
    if j < 1:
        raise ValueError("FPC components are numbered from 1")
    return f"{FPC_PREFIX}{j}"


def is_fpc_feature(name: str) -> bool:
    return name.startswith(FPC_PREFIX) and name[len(FPC_PREFIX) :].isdigit()


def is_known_feature(name: str) -> bool:
    return name in ALL_FEATURES or is_fpc_feature(name)


class FeatureRow(BaseModel):
    """One supervised-learning sample."""

    window_index: int
    label: Label
    values: dict[str, float]
    day: int = 0

    @model_validator(mode="after")
    def _check_values(self) -> "FeatureRow":
        for name, value in self.values.items():
            if not is_known_feature(name):
                raise ValueError(f"Unknown feature identifier '{name}'")
            if not math.isfinite(value):
                raise ValueError(f"Feature {name} is not finite")
        return self
