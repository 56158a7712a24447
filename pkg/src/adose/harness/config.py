"""Run configuration: a versioned JSON schema with strict key checking.

Defaults follow the reference protocol: learning rate 0.001, weight decay
0.0005, 16 samples per domain per minibatch, a 10% label budget over 5
rounds, embed dim 256, and loss weights 0.5/0.2/0.5/0.2. The two named
profiles only change the candidate multiplier default (2 and 5).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..lus import LusConfig
from ..objectives import LossWeights

SCHEMA_VERSION = 1

STRATEGIES = ("adose", "random", "entropy", "lus-only", "mdc-only")
PROFILES = {"pheme-like": {"multiplier": 2}, "weibo-like": {"multiplier": 5}}
NEGATIVE_FILTERS = ("auto", "hv", "visual")

_TOP_KEYS = {
    "schema_version", "dataset", "out_dir", "seed", "strategy", "deterministic",
    "profile", "model", "weights", "lus", "budget", "training", "evaluation",
    "diversity_mode", "negative_filter",
}
_MODEL_KEYS = {"embed_dim", "hidden_dim", "fusion_mode"}
_WEIGHT_KEYS = {"lambda_c", "lambda_a", "lambda_t", "lambda_n", "tau", "beta"}
_LUS_KEYS = {"levels", "samplings", "multiplier", "variances", "include_bias"}
_BUDGET_KEYS = {"fraction", "rounds"}
_TRAIN_KEYS = {
    "initial_epochs", "round_epochs", "learning_rate", "weight_decay",
    "batch_per_domain", "grl_coeff", "normalize_alignment", "reinit_each_round",
}
_EVAL_KEYS = {"test_fraction"}


@dataclass
class ModelSettings:
    embed_dim: int = 256
    hidden_dim: int = 128
    fusion_mode: str = "poe"


@dataclass
class BudgetSettings:
    fraction: float = 0.10
    rounds: int = 5


@dataclass
class TrainSettings:
    initial_epochs: int = 30
    round_epochs: int = 10
    learning_rate: float = 0.001
    weight_decay: float = 0.0005
    batch_per_domain: int = 16
    grl_coeff: float = 1.0
    normalize_alignment: bool = True
    reinit_each_round: bool = False


@dataclass
class EvalSettings:
    test_fraction: float = 0.30


@dataclass
class RunConfig:
    dataset: dict
    out_dir: str = "run_out"
    seed: int = 0
    strategy: str = "adose"
    deterministic: bool = True
    profile: str | None = None
    model: ModelSettings = field(default_factory=ModelSettings)
    weights: LossWeights = field(default_factory=LossWeights)
    lus: LusConfig = field(default_factory=LusConfig)
    budget: BudgetSettings = field(default_factory=BudgetSettings)
    training: TrainSettings = field(default_factory=TrainSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    diversity_mode: str = "dissimilar"
    negative_filter: str = "auto"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.profile is not None and self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {self.profile!r}")
        if self.diversity_mode not in ("dissimilar", "literal"):
            raise ConfigError(f"diversity_mode must be 'dissimilar' or 'literal'")
        if self.negative_filter not in NEGATIVE_FILTERS:
            raise ConfigError(f"negative_filter must be one of {NEGATIVE_FILTERS}")
        if not isinstance(self.dataset, dict) or len(set(self.dataset) & {"manifest", "synth"}) != 1:
            raise ConfigError("dataset must contain exactly one of 'manifest' or 'synth'")
        unknown = set(self.dataset) - {"manifest", "synth"}
        if unknown:
            raise ConfigError(f"dataset has unknown keys {sorted(unknown)}")
        if not 0 < self.budget.fraction <= 1:
            raise ConfigError("budget fraction must be in (0, 1]")
        if self.budget.rounds < 1:
            raise ConfigError("budget rounds must be >= 1")
        if not 0 <= self.evaluation.test_fraction < 1:
            raise ConfigError("test_fraction must be in [0, 1)")
        if self.training.grl_coeff < 0:
            raise ConfigError("grl_coeff must be >= 0")

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("run config must be a JSON object")
        version = obj.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {version}")
        unknown = set(obj) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"config has unknown keys {sorted(unknown)}")
        if "dataset" not in obj:
            raise ConfigError("config missing required key 'dataset'")

        def sub(key: str, allowed: set[str]) -> dict:
            raw = obj.get(key, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            bad = set(raw) - allowed
            if bad:
                raise ConfigError(f"config section {key!r} has unknown keys {sorted(bad)}")
            return dict(raw)

        lus_raw = sub("lus", _LUS_KEYS)
        profile = obj.get("profile")
        if profile is not None:
            if profile not in PROFILES:
                raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {profile!r}")
            for key, value in PROFILES[profile].items():
                lus_raw.setdefault(key, value)

        try:
            weights = LossWeights(**sub("weights", _WEIGHT_KEYS))
            lus = LusConfig(**lus_raw)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return cls(
            dataset=obj["dataset"],
            out_dir=obj.get("out_dir", "run_out"),
            seed=int(obj.get("seed", 0)),
            strategy=obj.get("strategy", "adose"),
            deterministic=bool(obj.get("deterministic", True)),
            profile=profile,
            model=ModelSettings(**sub("model", _MODEL_KEYS)),
            weights=weights,
            lus=lus,
            budget=BudgetSettings(**sub("budget", _BUDGET_KEYS)),
            training=TrainSettings(**sub("training", _TRAIN_KEYS)),
            evaluation=EvalSettings(**sub("evaluation", _EVAL_KEYS)),
            diversity_mode=obj.get("diversity_mode", "dissimilar"),
            negative_filter=obj.get("negative_filter", "auto"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(obj)

    def to_dict(self, include_out_dir: bool = True) -> dict:
        # the per-round selection seed is derived at runtime, so the config-
        # level LusConfig.seed field is not part of the snapshot
        lus = {k: v for k, v in asdict(self.lus).items() if k != "seed"}
        out = {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset,
            "seed": self.seed,
            "strategy": self.strategy,
            "deterministic": self.deterministic,
            "profile": self.profile,
            "model": asdict(self.model),
            "weights": asdict(self.weights),
            "lus": lus,
            "budget": asdict(self.budget),
            "training": asdict(self.training),
            "evaluation": asdict(self.evaluation),
            "diversity_mode": self.diversity_mode,
            "negative_filter": self.negative_filter,
        }
        if include_out_dir:
            out["out_dir"] = self.out_dir
        return out


def derive_seed(base: int, *tags: int) -> int:
    """Stable child seed for a named purpose (and optional round index)."""
    return int(np.random.SeedSequence([int(base), *map(int, tags)]).generate_state(1)[0])


# purpose tags for derive_seed
SEED_SYNTH = 0
SEED_SPLIT = 1
SEED_MODEL = 2
SEED_TRAIN = 3
SEED_SELECT = 4
