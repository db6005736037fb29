from .crossval import (
    METRICS,
    REPRESENTATIONS,
    BenchmarkReport,
    BenchmarkRow,
    FoldError,
    FoldMetrics,
    benchmark_all,
    cross_validate,
    fit_representation,
    parse_row,
)
from .metrics import accuracy, all_metrics, macro_f1, macro_precision, macro_recall, per_class_scores
from .report import emit_report, read_folds_csv, read_report_csv

__all__ = [
    "METRICS", "REPRESENTATIONS", "BenchmarkReport", "BenchmarkRow", "FoldError", "FoldMetrics",
    "accuracy", "all_metrics", "benchmark_all", "cross_validate", "emit_report", "fit_representation",
    "macro_f1", "macro_precision", "macro_recall", "parse_row", "per_class_scores",
    "read_folds_csv", "read_report_csv",
]
