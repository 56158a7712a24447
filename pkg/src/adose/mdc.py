"""Multi-view diversity calculator.

Candidates from the uncertainty stage are scored by their mean cosine
similarity to the whole unlabeled pool across the three shallow classifier
feature views. The default selection keeps the candidates with the smallest
mean similarity, i.e. the ones most dissimilar from the pool; the sentence-
literal largest-score mode is kept for ablation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import SampleRecord
from .mefn import ModelState, encode

logger = logging.getLogger(__name__)

MODES = ("dissimilar", "literal")


@dataclass
class DiversityScores:
    """Mean pool similarity per candidate (includes the self term)."""

    ids: list[str]
    d: np.ndarray

    def rows(self) -> list[tuple[str, float]]:
        return list(zip(self.ids, (float(v) for v in self.d)))


def shallow_features(
    state: ModelState, records: list[SampleRecord]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First-layer post-activation outputs of the three classifiers."""
    texts = np.stack([r.text_raw for r in records])
    visuals = np.stack([r.visual_raw for r in records])
    views = encode(state, texts, visuals)
    return views.f_t.data, views.f_v.data, views.f_c.data


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    n_zero = int((norms == 0).sum())
    if n_zero:
        logger.warning("%d zero-norm feature rows contribute cosine 0", n_zero)
    return np.divide(x, norms, out=np.zeros_like(x, dtype=np.float64), where=norms != 0)


def diversity_scores(
    candidate_ids: list[str],
    pool_ids: list[str],
    features: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> DiversityScores:
    """Mean cosine similarity of each candidate against the full pool.

    ``features`` are the pool's three shallow views, row-aligned with
    ``pool_ids``; candidates must be pool members. The sum over the pool
    includes the candidate itself (a constant offset that cannot change the
    candidate ordering).
    """
    index = {sample_id: i for i, sample_id in enumerate(pool_ids)}
    missing = [c for c in candidate_ids if c not in index]
    if missing:
        raise ValueError(f"candidates not in pool: {missing[:5]}")
    n_pool = len(pool_ids)
    cand_rows = np.array([index[c] for c in candidate_ids], dtype=int)
    total = np.zeros(len(candidate_ids), dtype=np.float64)
    for view in features:
        if view.shape[0] != n_pool:
            raise ValueError("feature rows must align with pool_ids")
        normalized = _normalize_rows(np.asarray(view, dtype=np.float64))
        pool_sum = normalized.sum(axis=0)
        total += normalized[cand_rows] @ pool_sum
    return DiversityScores(ids=list(candidate_ids), d=total / (3.0 * n_pool))


def select_diverse(scores: DiversityScores, k: int, mode: str = "dissimilar") -> list[str]:
    """Pick k candidates: smallest mean similarity by default, largest in
    ``literal`` mode. Ties break by ascending id."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if k > len(scores.ids):
        logger.warning("requested %d of %d candidates; returning all", k, len(scores.ids))
        k = len(scores.ids)
    if mode == "dissimilar":
        order = sorted(range(len(scores.ids)), key=lambda i: (scores.d[i], scores.ids[i]))
    else:
        order = sorted(range(len(scores.ids)), key=lambda i: (-scores.d[i], scores.ids[i]))
    return [scores.ids[i] for i in order[:k]]
