"""Open-set network attack detection.

A softmax MLP over 78 flow features plus a confidence-threshold ruleset:
flows confidently matching the normal class pass, flows confidently
matching a known attack class are reported as that attack, and everything
the model cannot place is quarantined as a novel attack for analyst
labeling and class-expanding retraining.
"""

from .bundle import (
    PipelineBundle,
    TrainingProvenance,
    content_digest,
    load_bundle,
    predict_proba,
    predict_proba_batch,
    save_bundle,
    score,
)
from .dataset import (
    DEFAULT_FEATURE_COUNT,
    DEFAULT_LABEL_MAP,
    NORMAL_CLASS,
    Dataset,
    FlowRecord,
    IngestReport,
    SplitSpec,
    canonical_class_order,
    ingest_csv,
    load_label_map,
    merge,
    normalize_label,
    split,
    subsample,
)
from .errors import (
    BundleConsistencyError,
    BundleError,
    BundleFormatError,
    BundleVersionError,
    CliError,
    FlowsentryError,
    IngestError,
    LabelError,
    QuarantineError,
    QuarantineStateError,
    RetrainError,
    SplitError,
    TrainingError,
)
from .metrics import (
    BinaryCounts,
    ConfusionMatrix,
    EvalReport,
    NovelEvalResult,
    confusion_matrix,
    f1,
    fpr_paper,
    fpr_standard,
    novel_eval,
    precision,
    recall,
    report,
)
from .neural import (
    AdamState,
    EpochStats,
    MlpModel,
    TrainConfig,
    TrainResult,
    forward,
    forward_batch,
    init_model,
    flow_layer_dims,
    train,
)
from .pipeline import FitResult, evaluate_bundle, fit_pipeline, retrain
from .preprocess import FeatureScaler, LabelCodec, fit_scaler, transform
from .quarantine import QuarantineItem, QuarantineStatus, QuarantineStore
from .ruleset import (
    DEFAULT_THRESHOLD,
    ProbabilityProfile,
    RuleConfig,
    Verdict,
    VerdictKind,
    classify,
    profile,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BinaryCounts",
    "BundleConsistencyError",
    "BundleError",
    "BundleFormatError",
    "BundleVersionError",
    "CliError",
    "ConfusionMatrix",
    "DEFAULT_FEATURE_COUNT",
    "DEFAULT_LABEL_MAP",
    "DEFAULT_THRESHOLD",
    "Dataset",
    "EpochStats",
    "EvalReport",
    "FeatureScaler",
    "FitResult",
    "FlowRecord",
    "FlowsentryError",
    "IngestError",
    "IngestReport",
    "LabelCodec",
    "LabelError",
    "MlpModel",
    "NORMAL_CLASS",
    "NovelEvalResult",
    "PipelineBundle",
    "ProbabilityProfile",
    "QuarantineError",
    "QuarantineItem",
    "QuarantineStateError",
    "QuarantineStatus",
    "QuarantineStore",
    "RetrainError",
    "RuleConfig",
    "SplitError",
    "SplitSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "TrainingProvenance",
    "Verdict",
    "VerdictKind",
    "canonical_class_order",
    "classify",
    "confusion_matrix",
    "content_digest",
    "evaluate_bundle",
    "f1",
    "fit_pipeline",
    "fit_scaler",
    "forward",
    "forward_batch",
    "fpr_paper",
    "fpr_standard",
    "ingest_csv",
    "init_model",
    "load_bundle",
    "load_label_map",
    "merge",
    "normalize_label",
    "novel_eval",
    "flow_layer_dims",
    "precision",
    "predict_proba",
    "predict_proba_batch",
    "profile",
    "recall",
    "report",
    "retrain",
    "save_bundle",
    "score",
    "split",
    "subsample",
    "train",
    "transform",
]
