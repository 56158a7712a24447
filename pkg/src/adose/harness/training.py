"""Training steps, phases, and evaluation metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import diffcore, objectives
from ..corpus import DomainSet, Sampler, SampleRecord
from ..diffcore import adam_step, backward
from ..errors import DivergenceError
from ..mefn import ModelState, NET_NAMES, discriminate, encode, fuse_predict
from .config import TrainSettings

logger = logging.getLogger(__name__)


@dataclass
class BatchArrays:
    texts: np.ndarray
    visuals: np.ndarray
    labels: np.ndarray  # -1 for unlabeled target samples
    domains: np.ndarray
    sim_features: np.ndarray  # hv when available, else visual embeddings


def collate(records: list[SampleRecord], negative_filter: str = "auto") -> BatchArrays:
    """Stack records into batch arrays; pick the negative-filter feature."""
    have_hv = all(r.hv is not None for r in records)
    if negative_filter == "hv" and not have_hv:
        raise ValueError("negative_filter='hv' but some records lack hv")
    use_hv = negative_filter == "hv" or (negative_filter == "auto" and have_hv)
    if negative_filter == "auto" and not have_hv:
        logger.debug("records lack hv; falling back to visual embeddings for negative filtering")
    return BatchArrays(
        texts=np.stack([r.text_raw for r in records]),
        visuals=np.stack([r.visual_raw for r in records]),
        labels=np.array([-1 if r.label is None else r.label for r in records], dtype=int),
        domains=np.array([r.domain_id for r in records], dtype=int),
        sim_features=np.stack([r.hv if use_hv else r.visual_raw for r in records]),
    )


def compute_batch_losses(
    state: ModelState,
    batch: BatchArrays,
    weights: objectives.LossWeights,
    settings: TrainSettings,
    counters: objectives.LossCounters | None = None,
):
    """All loss components for one batch, as graph tensors plus the breakdown."""
    views = encode(state, batch.texts, batch.visuals)
    logp = discriminate(state, views, settings.grl_coeff)
    l_adv = objectives.adversarial_loss(logp, batch.domains)

    labeled = np.flatnonzero(batch.labels >= 0)
    if labeled.size == 0:
        raise ValueError("every batch must contain labeled source samples")
    y = batch.labels[labeled]
    p_mefn = fuse_predict(views, mode=state.cfg.fusion_mode)
    p_t = diffcore.softmax(views.logits_t)
    p_v = diffcore.softmax(views.logits_v)
    p_c = diffcore.softmax(views.logits_c)
    sel = lambda t: diffcore.rows(t, labeled)
    l_efn, l_cls = objectives.classification_loss(
        sel(p_mefn), sel(p_t), sel(p_v), sel(p_c), y, counters
    )
    l_ctr = objectives.contrastive_loss(
        sel(views.x_t),
        sel(views.x_v),
        y,
        batch.sim_features[labeled],
        weights,
        normalize=settings.normalize_alignment,
        counters=counters,
    )
    l_nego = objectives.negotiation_loss(sel(p_t), sel(p_v), sel(p_c), y, counters)
    total, breakdown = objectives.total_loss(l_efn, l_cls, l_adv, l_ctr, l_nego, weights)
    return total, breakdown


def train_step(
    state: ModelState,
    batch: BatchArrays,
    weights: objectives.LossWeights,
    settings: TrainSettings,
    counters: objectives.LossCounters | None = None,
) -> objectives.LossBreakdown:
    """One forward/backward/update pass over a collated batch."""
    total, breakdown = compute_batch_losses(state, batch, weights, settings, counters)
    if not np.isfinite(breakdown.total):
        raise DivergenceError(f"non-finite total loss: {breakdown}")
    params = state.parameters()
    for p in params:
        p.zero_grad()
    backward(total)
    for name in NET_NAMES:
        group = state.nets[name].parameters()
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in group]
        adam_step(state.adam[name], group, grads)
    return breakdown


def train_phase(
    state: ModelState,
    ds: DomainSet,
    weights: objectives.LossWeights,
    settings: TrainSettings,
    epochs: int,
    seed: int,
    negative_filter: str = "auto",
    metrics=None,
    counters: objectives.LossCounters | None = None,
) -> ModelState:
    """Run ``epochs`` of minibatch updates, warm-starting from ``state``."""
    if epochs <= 0:
        return state
    sampler = Sampler(ds, settings.batch_per_domain, seed=seed)
    for _ in range(epochs):
        for records in sampler.epoch():
            batch = collate(records, negative_filter)
            breakdown = train_step(state, batch, weights, settings, counters)
            if metrics is not None:
                metrics.append(breakdown)
    return state


@dataclass
class EvalMetrics:
    accuracy: float
    f1_fake: float
    f1_real: float
    tp: int  # fake predicted fake
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_fake": self.f1_fake,
            "f1_real": self.f1_real,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def evaluate(
    state: ModelState, records: list[SampleRecord]
) -> tuple[EvalMetrics, list[tuple[str, int, int, float]]]:
    """Fused-prediction metrics on a labeled split; fake (1) is positive.

    Also returns per-sample prediction rows (id, true, pred, p_fake) for the
    dump file.
    """
    if not records:
        raise ValueError("cannot evaluate an empty split")
    if any(r.label is None for r in records):
        raise ValueError("evaluation split must be fully labeled")
    texts = np.stack([r.text_raw for r in records])
    visuals = np.stack([r.visual_raw for r in records])
    views = encode(state, texts, visuals)
    probs = fuse_predict(views, mode=state.cfg.fusion_mode).data
    preds = np.argmax(probs, axis=1)
    truth = np.array([r.label for r in records])

    tp = int(((preds == 1) & (truth == 1)).sum())
    fp = int(((preds == 1) & (truth == 0)).sum())
    fn = int(((preds == 0) & (truth == 1)).sum())
    tn = int(((preds == 0) & (truth == 0)).sum())
    metrics = EvalMetrics(
        accuracy=(tp + tn) / len(records),
        f1_fake=_f1(tp, fp, fn),
        f1_real=_f1(tn, fn, fp),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )
    rows = [
        (r.id, int(t), int(p), float(pf))
        for r, t, p, pf in zip(records, truth, preds, probs[:, 1])
    ]
    return metrics, rows
