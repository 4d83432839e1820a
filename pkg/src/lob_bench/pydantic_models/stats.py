from typing import Literal, Optional

from pydantic import BaseModel, Field

from .windows import Label


class ClassCounts(BaseModel):
    tp: int
    fp: int
    fn: int


class ConfusionCounts(BaseModel):
    """``table[a][p]`` counts rows with actual class a predicted as p (LABEL_ORDER)."""

    table: list[list[int]]
    per_class: dict[Label, ClassCounts]


class ClassMetrics(BaseModel):
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)
    precision_undefined: bool = False
    recall_undefined: bool = False
    f1_undefined: bool = False


class MetricsReport(BaseModel):
    n: int
    per_class: dict[Label, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: ConfusionCounts


class WilcoxonResult(BaseModel):
    n: int
    w: float
    p: float
    method: Literal["exact", "normal", "degenerate"]
    diagnostics: list[str] = Field(default_factory=list)


class SignificanceRow(BaseModel):
    stock: str
    learner: str
    strategy: str
    n: int
    w: float
    raw_p: float
    adjusted_p: float
    significant: bool


class ImportanceEntry(BaseModel):
    stock: str
    label: Label
    feature: str
    n_models: int
    n_selected: int
    fraction: float = Field(ge=0, le=1)
    high_impact: bool


class ImportanceCount(BaseModel):
    label: Label
    feature: str
    n_stocks: int


class ImportanceReport(BaseModel):
    threshold: float
    entries: list[ImportanceEntry] = Field(default_factory=list)
    histogram: list[ImportanceCount] = Field(default_factory=list)

    def fraction(self, stock: str, label: Label, feature: str) -> Optional[float]:
        for entry in self.entries:
            if (entry.stock, entry.label, entry.feature) == (stock, label, feature):
                return entry.fraction
        return None
