"""Data model, ingestion, synthetic benchmark generation, and the oracle."""

from .io import load_dataset, save_dataset
from .records import (
    FAKE,
    REAL,
    BudgetPlan,
    Dims,
    DomainSet,
    Oracle,
    SampleRecord,
    oracle_annotate,
)
from .sampler import Sampler
from .synth import PATTERNS, SynthSpec, generate

__all__ = [
    "FAKE",
    "REAL",
    "BudgetPlan",
    "Dims",
    "DomainSet",
    "Oracle",
    "PATTERNS",
    "SampleRecord",
    "Sampler",
    "SynthSpec",
    "generate",
    "load_dataset",
    "oracle_annotate",
    "save_dataset",
]
