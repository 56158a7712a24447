"""Active domain adaptation for two-view binary classification.

The package couples an expert-fusion classifier (per-view encoders, domain
discriminators behind gradient reversal, contrastively aligned cross-view
features, three fused expert heads) with a two-stage active selection
strategy: least-disagree uncertainty estimation under Gaussian weight
perturbations, then multi-view diversity filtering.
"""

from .corpus import BudgetPlan, DomainSet, SampleRecord, SynthSpec, generate, load_dataset, oracle_annotate
from .estimator import MefnClassifier
from .harness import RunConfig, evaluate, run_active_loop, train_phase
from .lus import LdmTable, LusConfig, estimate_ldm, select_uncertain
from .mdc import DiversityScores, diversity_scores, select_diverse, shallow_features
from .mefn import EncodedViews, MefnConfig, ModelState, encode, fuse_predict
from .objectives import LossBreakdown, LossWeights
from .validation import stack_views

__version__ = "0.1.0"

__all__ = [
    "BudgetPlan",
    "DiversityScores",
    "DomainSet",
    "EncodedViews",
    "LdmTable",
    "LossBreakdown",
    "LossWeights",
    "LusConfig",
    "MefnClassifier",
    "MefnConfig",
    "ModelState",
    "RunConfig",
    "SampleRecord",
    "SynthSpec",
    "diversity_scores",
    "encode",
    "estimate_ldm",
    "evaluate",
    "fuse_predict",
    "generate",
    "load_dataset",
    "oracle_annotate",
    "run_active_loop",
    "select_diverse",
    "select_uncertain",
    "shallow_features",
    "stack_views",
    "train_phase",
]
