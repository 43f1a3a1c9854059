from .experiments import (ABLATION_ROWS, AblationConfig, Bundle, DatasetConfig, LabeledPool, Table,
                          ablation_means, ablation_suite, build_dataset, compare_models,
                          generation_mmd, label_pool, model_config_for, run_training,
                          simulate_pool, sweep_quantum, sweep_sampling_window, windows)
from .metrics import (Metrics, auc_rank, auc_trapezoid, confusion, evaluate, f1_from_counts,
                      metrics_from_scores)
from .report import SUMMARY_SCHEMA_VERSION, Report, csv_text, emit_report, trace_text
from .training import (Dataset, TrainConfig, TrainingDiverged, TrainResult, stratified_split,
                       train)

__all__ = [
    "ABLATION_ROWS", "AblationConfig", "Bundle", "Dataset", "DatasetConfig", "LabeledPool", "Metrics",
    "Report", "SUMMARY_SCHEMA_VERSION", "Table", "TrainConfig", "TrainResult", "TrainingDiverged",
    "ablation_means", "ablation_suite", "auc_rank", "auc_trapezoid", "build_dataset",
    "compare_models", "confusion", "csv_text", "emit_report", "evaluate", "f1_from_counts",
    "generation_mmd", "label_pool", "metrics_from_scores", "model_config_for", "run_training",
    "simulate_pool", "stratified_split", "sweep_quantum", "sweep_sampling_window", "train",
    "trace_text", "windows",
]
