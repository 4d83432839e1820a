from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .learners import EnetGrid, EnetParams, SvmParams
from .preprocess import _balanced_ratio
from .quotes import CleaningReport, ColumnMapping
from .stats import ImportanceReport, SignificanceRow
from .synth import SynthConfig
from .windows import Label

SetupName = Literal["baseline", "ensemble", "within_window", "fpca", "standard"]


class SymbolSource(BaseModel):
    """Quote files (one per trading day, chronological) or a synthetic stream."""

    symbol: str
    paths: list[str] = Field(default_factory=list)
    synth: Optional[SynthConfig] = None

    @model_validator(mode="after")
    def _one_source(self) -> "SymbolSource":
        if bool(self.paths) == (self.synth is not None):
            raise ValueError(f"Symbol '{self.symbol}' needs either paths or a synth config")
        return self


class FpcaSettings(BaseModel):
    horizon_seconds: float = Field(default=23_400.0, gt=0, le=23_400.0)
    grid_size: int = Field(default=390, ge=2)
    variance_threshold: float = Field(default=0.999, gt=0, le=1)


class EnetSettings(BaseModel):
    params: EnetParams = Field(default_factory=EnetParams)
    grid: EnetGrid = Field(default_factory=EnetGrid)
    use_cv: bool = True


class ExperimentConfig(BaseModel):
    symbols: list[SymbolSource] = Field(min_length=1)
    k: int = Field(default=5, ge=2)
    alpha: float = Field(default=1e-5, ge=0)
    train_size: int = Field(default=8000, gt=0)
    test_size: int = Field(default=2000, gt=0)
    n_repeats: int = Field(default=100, gt=0)
    n_members: int = Field(default=100, gt=0)
    learner: Literal["svm", "enet"] = "svm"
    setups: list[SetupName] = Field(
        default_factory=lambda: ["baseline", "ensemble", "within_window", "fpca"],
        min_length=1,
    )
    ratio: dict[Label, float] = Field(default_factory=_balanced_ratio)
    fpca: FpcaSettings = Field(default_factory=FpcaSettings)
    enet: EnetSettings = Field(default_factory=EnetSettings)
    svm: SvmParams = Field(default_factory=SvmParams)
    ingest: ColumnMapping = Field(default_factory=ColumnMapping)
    seed: int = Field(default=0, ge=0, lt=2**64)
    repeat_failure_budget: int = Field(default=0, ge=0)
    importance_threshold: float = Field(default=0.8, ge=0, le=1)
    fdr_level: float = Field(default=0.05, gt=0, lt=1)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if len(set(self.setups)) != len(self.setups):
            raise ValueError("setups must not repeat")
        names = [source.symbol for source in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("symbol names must be unique")
        return self


class RepeatSeed(BaseModel):
    stock: str
    repeat: int
    seed: int


class TimingRecord(BaseModel):
    stock: str
    learner: str
    setup: str
    repeat: int
    seconds: float


class RunManifest(BaseModel):
    format_version: int = 1
    config_hash: str
    code_version: str
    seeds: list[RepeatSeed] = Field(default_factory=list)
    timings: list[TimingRecord] = Field(default_factory=list)


class RepeatMetrics(BaseModel):
    stock: str
    learner: str
    setup: str
    repeat: int
    precision: float
    recall: float
    f1: float
    per_class_f1: dict[Label, float]
    converged: bool
    n_features: int


class DeltaRecord(BaseModel):
    stock: str
    learner: str
    strategy: str
    repeat: int
    f1_delta: float


class RepeatFailure(BaseModel):
    stock: str
    repeat: int
    error: str


class LabelShare(BaseModel):
    stock: str
    alpha: float
    label: Label
    count: int
    proportion: float


class QuoteSummary(BaseModel):
    stock: str
    statistic: str
    mean: float
    median: float
    std: float
    min: float
    max: float


class BenchmarkReport(BaseModel):
    format_version: int = 1
    config: ExperimentConfig
    manifest: RunManifest
    metrics: list[RepeatMetrics] = Field(default_factory=list)
    deltas: list[DeltaRecord] = Field(default_factory=list)
    significance: list[SignificanceRow] = Field(default_factory=list)
    importance: Optional[ImportanceReport] = None
    label_distribution: list[LabelShare] = Field(default_factory=list)
    quote_summary: list[QuoteSummary] = Field(default_factory=list)
    cleaning: dict[str, CleaningReport] = Field(default_factory=dict)
    failures: list[RepeatFailure] = Field(default_factory=list)
