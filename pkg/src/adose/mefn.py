"""Modal-dependency expertise fusion network.

Two per-view encoders feed three expert classifiers: one per view on the
encoder outputs, one cross-view on the concatenated alignment projections.
Domain discriminators sit behind a gradient reversal layer on each encoder
output. The fused prediction sums the experts' log-probabilities (product of
experts) before a final softmax.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import diffcore
from .diffcore import AdamState, DenseNet, Tensor
from .errors import CheckpointError

NET_NAMES = ("enc_t", "enc_v", "align_t", "align_v", "disc_t", "disc_v", "cls_t", "cls_v", "cls_c")

FUSION_MODES = ("poe", "literal")


@dataclass
class MefnConfig:
    """Topology and fusion settings; widths follow the defaults in the README."""

    text_dim: int
    visual_dim: int
    n_domains: int  # M + 1, including the target
    embed_dim: int = 256
    hidden_dim: int = 128
    fusion_mode: str = "poe"

    def __post_init__(self):
        if self.n_domains < 2:
            raise ValueError("need at least one source domain plus the target")
        if self.fusion_mode not in FUSION_MODES:
            raise ValueError(f"fusion_mode must be one of {FUSION_MODES}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ModelState:
    """All learnable parameter groups plus one Adam state per group."""

    def __init__(self, cfg: MefnConfig, nets: dict[str, DenseNet], seed: int,
                 lr: float = 0.001, weight_decay: float = 0.0005):
        missing = set(NET_NAMES) - set(nets)
        if missing:
            raise ValueError(f"missing network groups: {sorted(missing)}")
        d = cfg.embed_dim
        expect_in = {
            "enc_t": cfg.text_dim, "enc_v": cfg.visual_dim,
            "align_t": d, "align_v": d, "disc_t": d, "disc_v": d,
            "cls_t": d, "cls_v": d, "cls_c": 2 * d,
        }
        expect_out = {
            "enc_t": d, "enc_v": d, "align_t": d, "align_v": d,
            "disc_t": cfg.n_domains, "disc_v": cfg.n_domains,
            "cls_t": 2, "cls_v": 2, "cls_c": 2,
        }
        for name in NET_NAMES:
            net = nets[name]
            if net.in_dim != expect_in[name] or net.out_dim != expect_out[name]:
                raise ValueError(
                    f"{name}: expected {expect_in[name]}->{expect_out[name]}, "
                    f"got {net.in_dim}->{net.out_dim}"
                )
        for name in ("cls_t", "cls_v", "cls_c"):
            if len(nets[name].layers) != 2:
                raise ValueError(f"{name} must be a two-layer classifier")
        self.cfg = cfg
        self.nets = nets
        self.seed = seed
        self.adam = {
            name: AdamState.for_params(nets[name].parameters(), lr=lr, weight_decay=weight_decay)
            for name in NET_NAMES
        }

    @classmethod
    def initialize(cls, cfg: MefnConfig, seed: int, lr: float = 0.001,
                   weight_decay: float = 0.0005, dtype=np.float32) -> "ModelState":
        rng = np.random.default_rng(seed)
        d, h, k = cfg.embed_dim, cfg.hidden_dim, cfg.n_domains
        nets = {
            "enc_t": DenseNet.build([cfg.text_dim, d, d], ["relu", "relu"], rng, dtype),
            "enc_v": DenseNet.build([cfg.visual_dim, d, d], ["relu", "relu"], rng, dtype),
            "align_t": DenseNet.build([d, d], ["identity"], rng, dtype),
            "align_v": DenseNet.build([d, d], ["identity"], rng, dtype),
            "disc_t": DenseNet.build([d, h, k], ["relu", "identity"], rng, dtype),
            "disc_v": DenseNet.build([d, h, k], ["relu", "identity"], rng, dtype),
            "cls_t": DenseNet.build([d, h, 2], ["relu", "identity"], rng, dtype),
            "cls_v": DenseNet.build([d, h, 2], ["relu", "identity"], rng, dtype),
            "cls_c": DenseNet.build([2 * d, h, 2], ["relu", "identity"], rng, dtype),
        }
        return cls(cfg, nets, seed=seed, lr=lr, weight_decay=weight_decay)

    def parameters(self) -> list[Tensor]:
        out = []
        for name in NET_NAMES:
            out.extend(self.nets[name].parameters())
        return out

    def copy(self) -> "ModelState":
        first = self.adam[NET_NAMES[0]]
        state = ModelState(
            self.cfg,
            {name: net.copy() for name, net in self.nets.items()},
            seed=self.seed,
            lr=first.lr,
            weight_decay=first.weight_decay,
        )
        return state

    def save(self, out_dir: str | Path, config_hash: str | None = None) -> None:
        """Write the parameter container plus a model-card JSON."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        diffcore.save_nets(out_dir / "model.bin", self.nets)
        card = {
            "format": "adose-model-card",
            "version": 1,
            "config": self.cfg.to_dict(),
            "topology": {name: self.nets[name].topology() for name in NET_NAMES},
            "seed": self.seed,
            "config_hash": config_hash,
            "created_unix": int(time.time()),
        }
        (out_dir / "model_card.json").write_text(
            json.dumps(card, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, model_dir: str | Path, lr: float = 0.001, weight_decay: float = 0.0005,
             dtype=np.float32) -> "ModelState":
        model_dir = Path(model_dir)
        try:
            card = json.loads((model_dir / "model_card.json").read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise CheckpointError(f"cannot read model card in {model_dir}: {e}") from e
        if card.get("format") != "adose-model-card" or card.get("version") != 1:
            raise CheckpointError(f"{model_dir}: not a version-1 model card")
        cfg = MefnConfig(**card["config"])
        nets = diffcore.load_nets(model_dir / "model.bin", dtype=dtype)
        return cls(cfg, nets, seed=int(card.get("seed", 0)), lr=lr, weight_decay=weight_decay)


@dataclass
class EncodedViews:
    """All per-sample representations produced by one encoding pass (batched)."""

    e_t: Tensor
    e_v: Tensor
    x_t: Tensor
    x_v: Tensor
    f_t: Tensor  # post-activation first layer of each classifier
    f_v: Tensor
    f_c: Tensor
    logits_t: Tensor
    logits_v: Tensor
    logits_c: Tensor


def encode(state: ModelState, texts, visuals) -> EncodedViews:
    """Run encoders, alignment heads, and all three classifiers in one pass."""
    texts = np.atleast_2d(np.asarray(texts)) if not isinstance(texts, Tensor) else texts
    visuals = np.atleast_2d(np.asarray(visuals)) if not isinstance(visuals, Tensor) else visuals
    t_width = texts.shape[-1] if isinstance(texts, np.ndarray) else texts.data.shape[-1]
    v_width = visuals.shape[-1] if isinstance(visuals, np.ndarray) else visuals.data.shape[-1]
    if t_width != state.cfg.text_dim or v_width != state.cfg.visual_dim:
        raise ValueError(
            f"input widths ({t_width}, {v_width}) do not match the configured "
            f"views ({state.cfg.text_dim}, {state.cfg.visual_dim})"
        )
    nets = state.nets
    e_t = nets["enc_t"].forward(texts)
    e_v = nets["enc_v"].forward(visuals)
    x_t = nets["align_t"].forward(e_t)
    x_v = nets["align_v"].forward(e_v)
    f_t, logits_t = nets["cls_t"].layer_outputs(e_t)
    f_v, logits_v = nets["cls_v"].layer_outputs(e_v)
    f_c, logits_c = nets["cls_c"].layer_outputs(diffcore.concat([x_t, x_v], axis=1))
    return EncodedViews(e_t, e_v, x_t, x_v, f_t, f_v, f_c, logits_t, logits_v, logits_c)


def fuse_scores(logits_t: Tensor, logits_v: Tensor, logits_c: Tensor) -> Tensor:
    """Per-class sum of the three classifiers' log-probabilities."""
    return (
        diffcore.log_softmax(logits_t)
        + diffcore.log_softmax(logits_v)
        + diffcore.log_softmax(logits_c)
    )


def fuse_predict(views: EncodedViews, mode: str = "poe") -> Tensor:
    """Fused probability pairs for a batch.

    ``poe`` (default) applies a softmax to the summed log-probabilities.
    ``literal`` first divides the scores by log(sum_y exp(score_y)); that
    denominator can be negative or cross zero, so the mode exists only for
    comparison and is not numerically safe in general.
    """
    for logits in (views.logits_t, views.logits_v, views.logits_c):
        if not np.isfinite(logits.data).all():
            raise ValueError("non-finite classifier logits")
    score = fuse_scores(views.logits_t, views.logits_v, views.logits_c)
    if mode == "poe":
        return diffcore.softmax(score)
    if mode == "literal":
        lse = diffcore.log(diffcore.tsum(diffcore.exp(score), axis=1, keepdims=True))
        return diffcore.softmax(diffcore.div(score, lse))
    raise ValueError(f"unknown fusion mode {mode!r}")


def discriminate(state: ModelState, views: EncodedViews, coeff: float) -> tuple[Tensor, Tensor]:
    """Per-view domain log-probabilities through the gradient reversal layer."""
    logp_t = diffcore.log_softmax(state.nets["disc_t"].forward(diffcore.grl(views.e_t, coeff)))
    logp_v = diffcore.log_softmax(state.nets["disc_v"].forward(diffcore.grl(views.e_v, coeff)))
    return logp_t, logp_v


def predict_proba(state: ModelState, texts, visuals) -> np.ndarray:
    """Fused probabilities as a plain array (evaluation/selection path)."""
    views = encode(state, texts, visuals)
    return fuse_predict(views, mode=state.cfg.fusion_mode).data


def predict_labels(state: ModelState, texts, visuals) -> np.ndarray:
    """Fused argmax labels; ties resolve to the lower label (argmax order)."""
    return np.argmax(predict_proba(state, texts, visuals), axis=1)


def config_hash(obj: dict) -> str:
    """Stable hash of a JSON-serializable config snapshot."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
