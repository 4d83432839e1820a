"""Pydantic models for quotes, features, models and benchmark reports."""

from .ensemble import EnsembleModel, MemberFailure
from .experiment import (
    BenchmarkReport,
    DeltaRecord,
    EnetSettings,
    ExperimentConfig,
    FpcaSettings,
    LabelShare,
    QuoteSummary,
    RepeatFailure,
    RepeatMetrics,
    RepeatSeed,
    RunManifest,
    SymbolSource,
    TimingRecord,
)
from .features import (
    ALL_FEATURES,
    WINDOW_LEVEL_FEATURES,
    WITHIN_WINDOW_FEATURES,
    FeatureId,
    FeatureRow,
    fpc_feature_id,
    is_fpc_feature,
    is_known_feature,
)
from .fpca import FpcaBasis, FpcScores, Trajectory
from .learners import (
    EnetGrid,
    EnetParams,
    LearnerSpec,
    PairwiseMachine,
    SvmParams,
    TrainedModel,
)
from .preprocess import ColumnStat, ColumnStats, SamplingPlan
from .quotes import (
    NS_PER_SECOND,
    SESSION_CLOSE_NS,
    SESSION_OPEN_NS,
    CleaningReport,
    ColumnMapping,
    ParseDiagnostic,
    QuoteEvent,
    RawQuoteRecord,
)
from .stats import (
    ClassCounts,
    ClassMetrics,
    ConfusionCounts,
    ImportanceCount,
    ImportanceEntry,
    ImportanceReport,
    MetricsReport,
    SignificanceRow,
    WilcoxonResult,
)
from .synth import SynthConfig
from .windows import (
    LABEL_CODES,
    LABEL_ORDER,
    EventWindow,
    Label,
    LabelingParams,
    label_codes,
    labels_from_codes,
)

__all__ = [
    "ALL_FEATURES",
    "BenchmarkReport",
    "ClassCounts",
    "ClassMetrics",
    "CleaningReport",
    "ColumnMapping",
    "ColumnStat",
    "ColumnStats",
    "ConfusionCounts",
    "DeltaRecord",
    "EnetGrid",
    "EnetParams",
    "EnetSettings",
    "EnsembleModel",
    "EventWindow",
    "ExperimentConfig",
    "FeatureId",
    "FeatureRow",
    "FpcScores",
    "FpcaBasis",
    "FpcaSettings",
    "ImportanceCount",
    "ImportanceEntry",
    "ImportanceReport",
    "LABEL_CODES",
    "LABEL_ORDER",
    "Label",
    "LabelShare",
    "LabelingParams",
    "LearnerSpec",
    "MemberFailure",
    "MetricsReport",
    "NS_PER_SECOND",
    "PairwiseMachine",
    "ParseDiagnostic",
    "QuoteEvent",
    "QuoteSummary",
    "RawQuoteRecord",
    "RepeatFailure",
    "RepeatMetrics",
    "RepeatSeed",
    "RunManifest",
    "SESSION_CLOSE_NS",
    "SESSION_OPEN_NS",
    "SamplingPlan",
    "SignificanceRow",
    "SvmParams",
    "SymbolSource",
    "SynthConfig",
    "TimingRecord",
    "Trajectory",
    "TrainedModel",
    "WINDOW_LEVEL_FEATURES",
    "WITHIN_WINDOW_FEATURES",
    "WilcoxonResult",
    "fpc_feature_id",
    "is_fpc_feature",
    "is_known_feature",
    "label_codes",
    "labels_from_codes",
]
