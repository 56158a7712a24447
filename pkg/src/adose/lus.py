"""Least-disagree uncertainty selector.

Each hypothesis draws Gaussian noise onto the last-layer weights of all three
expert classifiers and re-predicts the unlabeled target pool. A sample's
uncertainty estimate is the smallest flip rate among hypotheses that changed
its prediction; samples that never flip keep the initial value 1. The m*k
smallest estimates become candidates for the diversity stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus import SampleRecord
from .diffcore import perturb_last_layer
from .mefn import ModelState, encode

logger = logging.getLogger(__name__)

_CLS_NAMES = ("cls_t", "cls_v", "cls_c")


@dataclass
class LusConfig:
    """Perturbation schedule: K variance levels, J weight draws per level."""

    levels: int = 10
    samplings: int = 10
    multiplier: int = 2
    variances: list[float] | None = None  # explicit sigma list overriding k/K
    include_bias: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.levels < 1 or self.samplings < 1:
            raise ValueError("levels and samplings must be >= 1")
        if self.multiplier < 1:
            raise ValueError("multiplier must be >= 1")
        self.sigmas()

    def sigmas(self) -> list[float]:
        """Noise scales per level; defaults to k/K for k in 1..K."""
        if self.variances is None:
            return [(k + 1) / self.levels for k in range(self.levels)]
        sig = [float(s) for s in self.variances]
        if len(sig) != self.levels:
            raise ValueError(f"expected {self.levels} variance entries, got {len(sig)}")
        if any(not 0 < s <= 1 for s in sig):
            raise ValueError("each sigma must lie in (0, 1]")
        if any(b <= a for a, b in zip(sig, sig[1:])):
            raise ValueError("sigmas must be strictly increasing")
        return sig


@dataclass
class Hypothesis:
    """Bookkeeping for one perturbed network evaluation."""

    level: int
    sampling: int
    sigma: float
    flip_rate: float
    flips: np.ndarray


@dataclass
class LdmTable:
    """Per-sample least-disagree estimates plus the full flip history."""

    ids: list[str]
    l_e: np.ndarray
    baseline: np.ndarray
    hypotheses: list[Hypothesis] = field(default_factory=list)
    discarded: int = 0

    def rows(self) -> list[tuple[str, float]]:
        return list(zip(self.ids, (float(v) for v in self.l_e)))


def _log_softmax_np(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def fused_scores_np(logits_t: np.ndarray, logits_v: np.ndarray, logits_c: np.ndarray) -> np.ndarray:
    """Plain-array product-of-experts scores (sum of log-probabilities)."""
    return _log_softmax_np(logits_t) + _log_softmax_np(logits_v) + _log_softmax_np(logits_c)


def _collate(records: list[SampleRecord]) -> tuple[np.ndarray, np.ndarray]:
    texts = np.stack([r.text_raw for r in records])
    visuals = np.stack([r.visual_raw for r in records])
    return texts, visuals


def baseline_predictions(state: ModelState, records: list[SampleRecord]) -> np.ndarray:
    """Fused argmax labels under the unperturbed network (ties -> label 0)."""
    texts, visuals = _collate(records)
    views = encode(state, texts, visuals)
    scores = fused_scores_np(views.logits_t.data, views.logits_v.data, views.logits_c.data)
    return np.argmax(scores, axis=1)


def estimate_ldm(state: ModelState, records: list[SampleRecord], cfg: LusConfig) -> LdmTable:
    """Run the full K x J perturbation protocol over the unlabeled pool.

    The encoder pass is shared across hypotheses: perturbation only touches
    classifier last layers, so each hypothesis re-evaluates the heads from
    the cached hidden activations. Deterministic for a fixed config.
    """
    if not records:
        raise ValueError("estimate_ldm needs a nonempty target pool")
    texts, visuals = _collate(records)
    views = encode(state, texts, visuals)
    hidden = {
        "cls_t": views.f_t.data,
        "cls_v": views.f_v.data,
        "cls_c": views.f_c.data,
    }
    base_logits = {
        "cls_t": views.logits_t.data,
        "cls_v": views.logits_v.data,
        "cls_c": views.logits_c.data,
    }
    baseline = np.argmax(
        fused_scores_np(base_logits["cls_t"], base_logits["cls_v"], base_logits["cls_c"]), axis=1
    )

    n = len(records)
    table = LdmTable(
        ids=[r.id for r in records],
        l_e=np.ones(n, dtype=np.float64),
        baseline=baseline,
    )
    rng = np.random.default_rng(cfg.seed)
    for level, sigma in enumerate(cfg.sigmas()):
        for sampling in range(cfg.samplings):
            logits = {}
            for name in _CLS_NAMES:
                perturbed = perturb_last_layer(
                    state.nets[name], sigma, rng, include_bias=cfg.include_bias
                )
                logits[name] = perturbed.head_forward(hidden[name]).data
            fused = fused_scores_np(logits["cls_t"], logits["cls_v"], logits["cls_c"])
            if not np.isfinite(fused).all():
                table.discarded += 1
                logger.warning(
                    "discarding hypothesis (level=%d, sampling=%d, sigma=%.3f): non-finite logits",
                    level, sampling, sigma,
                )
                continue
            preds = np.argmax(fused, axis=1)
            flips = preds != baseline
            rho = float(flips.mean())
            if flips.any():
                table.l_e[flips] = np.minimum(table.l_e[flips], rho)
            table.hypotheses.append(Hypothesis(level, sampling, sigma, rho, flips))
    return table


def select_uncertain(table: LdmTable, m: int, k: int) -> list[str]:
    """Ids of the m*k smallest estimates, ties broken by ascending id."""
    wanted = m * k
    order = sorted(range(len(table.ids)), key=lambda i: (table.l_e[i], table.ids[i]))
    if wanted > len(order):
        logger.warning(
            "requested %d candidates from a pool of %d; returning the whole pool",
            wanted, len(order),
        )
        wanted = len(order)
    return [table.ids[i] for i in order[:wanted]]
