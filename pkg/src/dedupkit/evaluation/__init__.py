from .metrics import (
    DEFAULT_THRESHOLDS,
    ConfusionCounts,
    CurvePoint,
    FScorePoint,
    average_precision,
    confusion,
    f_beta,
    false_positive_rate,
    fbeta_sweep,
    pr_auc,
    pr_curve,
    precision,
    recall,
    roc_auc,
    roc_curve,
    sensitivity,
)
from .protocols import (
    EvalReport,
    GridScanResult,
    grid_scan,
    mean_roc,
    run_cv_experiment,
    run_loco_experiment,
    score_report,
    stratified_kfold,
    to_arrays,
    undersample,
)

__all__ = [
    "DEFAULT_THRESHOLDS",
    "ConfusionCounts",
    "CurvePoint",
    "EvalReport",
    "FScorePoint",
    "GridScanResult",
    "average_precision",
    "confusion",
    "f_beta",
    "false_positive_rate",
    "fbeta_sweep",
    "grid_scan",
    "mean_roc",
    "pr_auc",
    "pr_curve",
    "precision",
    "recall",
    "roc_auc",
    "roc_curve",
    "run_cv_experiment",
    "run_loco_experiment",
    "score_report",
    "sensitivity",
    "stratified_kfold",
    "to_arrays",
    "undersample",
]
