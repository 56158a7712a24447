"""Orchestration: configs, training phases, strategies, the loop, reports."""

from .config import RunConfig, TrainSettings, derive_seed
from .loop import build_dataset, init_model, prepare_split, run_active_loop
from .report import MetricsLog, RunReport, round_table, write_report
from .strategies import SelectionTrace, select_ids
from .training import BatchArrays, EvalMetrics, collate, evaluate, train_phase, train_step

__all__ = [
    "BatchArrays",
    "EvalMetrics",
    "MetricsLog",
    "RunConfig",
    "RunReport",
    "SelectionTrace",
    "TrainSettings",
    "build_dataset",
    "collate",
    "derive_seed",
    "evaluate",
    "init_model",
    "prepare_split",
    "round_table",
    "run_active_loop",
    "select_ids",
    "train_phase",
    "train_step",
    "write_report",
]
