from typing import Optional

from pydantic import BaseModel, Field, model_validator

from .learners import TrainedModel
from .preprocess import ColumnStats, SamplingPlan


class MemberFailure(BaseModel):
    index: int
    seed: int
    error: str


class EnsembleModel(BaseModel):
    format_version: int = 1
    members: list[TrainedModel]
    member_plans: list[SamplingPlan]
    vote_rule: str = "plurality"
    failures: list[MemberFailure] = Field(default_factory=list)
    column_stats: Optional[ColumnStats] = None

    @model_validator(mode="after")
    def _check_members(self) -> "EnsembleModel":
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        if len(self.member_plans) != len(self.members):
            raise ValueError("one sampling plan per member is required")
        order = self.members[0].feature_order
        if any(member.feature_order != order for member in self.members):
            raise ValueError("ensemble members must share one feature order")
        return self

    @property
    def feature_order(self) -> list[str]:
        return self.members[0].feature_order

    @property
    def n_converged(self) -> int:
        return sum(1 for member in self.members if member.converged)
