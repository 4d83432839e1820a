from enum import Enum
from typing import Iterable

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .quotes import QuoteEvent


class Label(str, Enum):
    """Mid-price movement state of a window."""

    DOWNWARDS = "Downwards"
    STATIONARY = "Stationary"
    UPWARDS = "Upwards"


# Fixed class order; also the last-resort tie-break order.
LABEL_ORDER: tuple[Label, ...] = (Label.DOWNWARDS, Label.STATIONARY, Label.UPWARDS)
LABEL_CODES: dict[Label, int] = {label: code for code, label in enumerate(LABEL_ORDER)}


def label_codes(labels: Iterable[Label | str]) -> np.ndarray:
    return np.array([LABEL_CODES[Label(label)] for label in labels], dtype=np.int64)


def labels_from_codes(codes: Iterable[int]) -> list[Label]:
    return [LABEL_ORDER[int(code)] for code in codes]


class LabelingParams(BaseModel):
    alpha: float = Field(default=1e-5, ge=0)
    k: int = Field(default=5, ge=2)


class EventWindow(BaseModel):
    """k consecutive cleaned events; ``window_index`` is 1-based within the day."""

    window_index: int = Field(ge=1)
    k: int = Field(ge=2)
    events: list[QuoteEvent]

    @model_validator(mode="after")
    def _check_events(self) -> "EventWindow":
        if len(self.events) != self.k:
            raise ValueError(f"Window holds {len(self.events)} events, expected {self.k}")
        stamps = [event.timestamp_ns for event in self.events]
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("Window events are not in time order")
        return self

    @property
    def mid_prices(self) -> np.ndarray:
        return np.array([event.mid_price for event in self.events])
