"""Training losses: classification, adversarial, contrastive, negotiation.

All losses are differentiable through the diffcore tape and operate on
batched probability/logit tensors plus plain numpy label arrays. Only labeled
samples reach the supervised losses; unlabeled target samples contribute to
the adversarial term alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import (
    Tensor,
    as_tensor,
    clip_min,
    exp,
    log,
    pick,
    rows,
    sqrt,
    tmean,
    transpose,
    tsum,
)

PROB_FLOOR = 1e-12
_LOG_EPS = 1e-30


@dataclass
class LossWeights:
    """Loss mixing weights plus the contrastive temperature and threshold."""

    lambda_c: float = 0.5
    lambda_a: float = 0.2
    lambda_t: float = 0.5
    lambda_n: float = 0.2
    tau: float = 0.5
    beta: float = 0.8

    def __post_init__(self):
        for name in ("lambda_c", "lambda_a", "lambda_t", "lambda_n"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite nonnegative real, got {v}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")


@dataclass
class LossBreakdown:
    """Scalar components of one batch, satisfying the total identity."""

    l_efn: float
    l_cls: float
    l_adv: float
    l_ctr: float
    l_nego: float
    total: float


@dataclass
class LossCounters:
    """Soft-failure tallies accumulated across a training phase."""

    clamped_probs: int = 0
    batches_without_real_posts: int = 0
    zero_similarity_vectors: int = 0


def _nll(probs: Tensor, labels: np.ndarray, counters: LossCounters | None) -> Tensor:
    picked = pick(probs, labels)
    if counters is not None:
        counters.clamped_probs += int((picked.data < PROB_FLOOR).sum())
    return -log(clip_min(picked, PROB_FLOOR))


def classification_loss(
    p_mefn: Tensor,
    p_t: Tensor,
    p_v: Tensor,
    p_c: Tensor,
    labels: np.ndarray,
    counters: LossCounters | None = None,
) -> tuple[Tensor, Tensor]:
    """Fused-network and per-classifier cross-entropies over labeled samples."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("classification_loss needs at least one labeled sample")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 (real) or 1 (fake)")
    l_efn = tmean(_nll(p_mefn, labels, counters))
    l_cls = tmean(
        _nll(p_t, labels, counters) + _nll(p_v, labels, counters) + _nll(p_c, labels, counters)
    )
    return l_efn, l_cls


def adversarial_loss(
    domain_logprobs: tuple[Tensor, Tensor], domain_labels: np.ndarray
) -> Tensor:
    """Sum of the two discriminators' cross-entropies (means over the batch)."""
    logp_t, logp_v = domain_logprobs
    domain_labels = np.asarray(domain_labels)
    n_domains = logp_t.data.shape[1]
    if domain_labels.min(initial=0) < 0 or domain_labels.max(initial=0) >= n_domains:
        raise ValueError(f"domain labels must lie in [0, {n_domains})")
    return tmean(-pick(logp_t, domain_labels)) + tmean(-pick(logp_v, domain_labels))


def _cosine_rows(a: np.ndarray, b: np.ndarray, counters: LossCounters | None) -> np.ndarray:
    """Pairwise cosine similarity; zero-norm rows contribute cosine 0."""
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    n_zero = int((na == 0).sum() + (nb == 0).sum())
    if n_zero and counters is not None:
        counters.zero_similarity_vectors += n_zero
    a = np.divide(a, na, out=np.zeros_like(a, dtype=np.float64), where=na != 0)
    b = np.divide(b, nb, out=np.zeros_like(b, dtype=np.float64), where=nb != 0)
    return a @ b.T


def negative_weight(hv_i: np.ndarray, hv_j: np.ndarray, beta: float) -> float:
    """Filter weight for one pair: 0 when similarity >= beta, else beta - sim."""
    w = negative_weights(np.atleast_2d(hv_i), np.atleast_2d(hv_j), beta)[0, 0]
    return float(w)


def negative_weights(
    anchor_hv: np.ndarray,
    other_hv: np.ndarray,
    beta: float,
    counters: LossCounters | None = None,
) -> np.ndarray:
    """Matrix of negative-pair weights in [0, beta] from visual similarity."""
    cos = _cosine_rows(np.asarray(anchor_hv, dtype=np.float64),
                       np.asarray(other_hv, dtype=np.float64), counters)
    sim = (cos + 1.0) / 2.0
    return np.where(sim >= beta, 0.0, beta - sim)


def _l2_normalize_rows(x: Tensor) -> Tensor:
    norm = sqrt(tsum(x * x, axis=1, keepdims=True) + 1e-12)
    return x / norm


def contrastive_loss(
    x_t: Tensor,
    x_v: Tensor,
    labels: np.ndarray,
    hv: np.ndarray,
    weights: LossWeights,
    normalize: bool = True,
    counters: LossCounters | None = None,
) -> Tensor:
    """Alignment loss with real-post anchors and similarity-filtered negatives.

    ``hv`` is whatever similarity feature the caller uses for negative
    filtering: backbone probability vectors when available, otherwise the
    raw visual embeddings.
    """
    labels = np.asarray(labels)
    anchors = np.flatnonzero(labels == 0)
    dtype = x_t.data.dtype
    if anchors.size == 0:
        if counters is not None:
            counters.batches_without_real_posts += 1
        return Tensor(np.asarray(0.0, dtype=dtype))
    if normalize:
        x_t = _l2_normalize_rows(x_t)
        x_v = _l2_normalize_rows(x_v)
    sim = (rows(x_t, anchors) @ transpose(x_v)) * (1.0 / weights.tau)  # (a, n)
    w = negative_weights(hv[anchors], hv, weights.beta, counters)
    w[np.arange(anchors.size), anchors] = 0.0  # the positive pair is not a negative
    positive = pick(sim, anchors)  # sim[r, anchors[r]]
    shifted = exp(sim - _reshape_column(positive))
    weighted = shifted * w.astype(dtype)
    denom = tsum(weighted, axis=1) + 1.0
    return tmean(log(denom))


def _reshape_column(t: Tensor) -> Tensor:
    out = Tensor(t.data.reshape(-1, 1), parents=(t,))

    def bw(g):
        if t.requires_grad:
            t._accumulate(g.reshape(-1))

    out._bw = bw
    return out


def js_divergence(p: Tensor | np.ndarray, q: Tensor | np.ndarray) -> Tensor:
    """Rowwise Jensen-Shannon divergence, natural log (bounded by ln 2)."""
    p, q = as_tensor(p), as_tensor(q)
    m = (p + q) * 0.5
    log_m = log(clip_min(m, _LOG_EPS))
    kl_pm = tsum(p * (log(clip_min(p, _LOG_EPS)) - log_m), axis=1)
    kl_qm = tsum(q * (log(clip_min(q, _LOG_EPS)) - log_m), axis=1)
    return (kl_pm + kl_qm) * 0.5


def negotiation_loss(
    p_t: Tensor,
    p_v: Tensor,
    p_c: Tensor,
    labels: np.ndarray,
    counters: LossCounters | None = None,
) -> Tensor:
    """Mean over real posts of the JS agreement with the cross-view expert."""
    labels = np.asarray(labels)
    positives = np.flatnonzero(labels == 0)
    if positives.size == 0:
        if counters is not None:
            counters.batches_without_real_posts += 1
        return Tensor(np.asarray(0.0, dtype=p_t.data.dtype))
    pt, pv, pc = rows(p_t, positives), rows(p_v, positives), rows(p_c, positives)
    per_sample = js_divergence(pt, pc) + js_divergence(pv, pc)
    return tmean(per_sample) * 0.5


def total_loss(l_efn, l_cls, l_adv, l_ctr, l_nego, weights: LossWeights):
    """Weighted sum; returns the combined value plus a float breakdown."""
    total = (
        l_efn
        + weights.lambda_c * l_cls
        + weights.lambda_a * l_adv
        + weights.lambda_t * l_ctr
        + weights.lambda_n * l_nego
    )

    def _val(x):
        return float(x.item()) if isinstance(x, Tensor) else float(x)

    breakdown = LossBreakdown(
        l_efn=_val(l_efn),
        l_cls=_val(l_cls),
        l_adv=_val(l_adv),
        l_ctr=_val(l_ctr),
        l_nego=_val(l_nego),
        total=_val(total),
    )
    return total, breakdown
