"""Selection strategies; all consume the same budget and differ only in ids."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import lus, mdc
from ..corpus import DomainSet
from ..mefn import ModelState, encode, fuse_predict


@dataclass
class SelectionTrace:
    """Per-round diagnostics for dumps and the inspect command."""

    strategy: str
    chosen: list[str]
    ldm: lus.LdmTable | None = None
    diversity: mdc.DiversityScores | None = None


def _entropy_scores(state: ModelState, ds: DomainSet) -> np.ndarray:
    records = ds.target_unlabeled
    texts = np.stack([r.text_raw for r in records])
    visuals = np.stack([r.visual_raw for r in records])
    probs = fuse_predict(encode(state, texts, visuals), mode=state.cfg.fusion_mode).data
    p = np.clip(probs, 1e-12, 1.0)
    return -(p * np.log(p)).sum(axis=1)


def select_ids(
    strategy: str,
    state: ModelState,
    ds: DomainSet,
    quota: int,
    lus_cfg: lus.LusConfig,
    diversity_mode: str,
    seed: int,
) -> SelectionTrace:
    """Choose ``quota`` ids from the unlabeled pool under one strategy."""
    pool = ds.target_unlabeled
    pool_ids = ds.unlabeled_ids()
    if quota > len(pool):
        raise ValueError(f"quota {quota} exceeds pool size {len(pool)}")
    round_cfg = replace(lus_cfg, seed=seed)
    rng = np.random.default_rng(seed)

    if strategy == "random":
        chosen = sorted(rng.choice(pool_ids, size=quota, replace=False).tolist())
        return SelectionTrace(strategy, chosen)

    if strategy == "entropy":
        scores = _entropy_scores(state, ds)
        order = sorted(range(len(pool_ids)), key=lambda i: (-scores[i], pool_ids[i]))
        return SelectionTrace(strategy, [pool_ids[i] for i in order[:quota]])

    if strategy == "lus-only":
        table = lus.estimate_ldm(state, pool, round_cfg)
        return SelectionTrace(strategy, lus.select_uncertain(table, 1, quota), ldm=table)

    if strategy == "mdc-only":
        n_cand = min(round_cfg.multiplier * quota, len(pool_ids))
        candidates = sorted(rng.choice(pool_ids, size=n_cand, replace=False).tolist())
        features = mdc.shallow_features(state, pool)
        scores = mdc.diversity_scores(candidates, pool_ids, features)
        chosen = mdc.select_diverse(scores, quota, mode=diversity_mode)
        return SelectionTrace(strategy, chosen, diversity=scores)

    if strategy == "adose":
        table = lus.estimate_ldm(state, pool, round_cfg)
        candidates = lus.select_uncertain(table, round_cfg.multiplier, quota)
        features = mdc.shallow_features(state, pool)
        scores = mdc.diversity_scores(candidates, pool_ids, features)
        chosen = mdc.select_diverse(scores, quota, mode=diversity_mode)
        return SelectionTrace(strategy, chosen, ldm=table, diversity=scores)

    raise ValueError(f"unknown strategy {strategy!r}")
