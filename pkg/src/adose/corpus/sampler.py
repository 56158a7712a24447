"""Per-domain minibatch stream.

Every batch carries ``per_domain`` samples from each source domain and from
the unlabeled target pool, plus up to ``per_domain`` actively labeled target
samples once annotation has started. Within an epoch each domain is consumed
without replacement from a shuffled permutation; streams that run dry mid-
epoch reshuffle and wrap (logged once), which only happens when domain sizes
are unequal or smaller than ``per_domain``.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .records import DomainSet, SampleRecord

logger = logging.getLogger(__name__)


class _Stream:
    """Without-replacement draws from a list, reshuffling on exhaustion."""

    def __init__(self, records: list[SampleRecord], rng: np.random.Generator, label: str):
        self.records = records
        self.rng = rng
        self.label = label
        self.order: list[int] = []
        self.pos = 0
        self.warned = False

    def draw(self, n: int) -> list[SampleRecord]:
        out = []
        while len(out) < n:
            if self.pos >= len(self.order):
                if self.order and not self.warned and len(self.records) < n:
                    logger.warning(
                        "domain %s has %d samples, fewer than the %d requested per batch; "
                        "sampling with replacement across wraps",
                        self.label, len(self.records), n,
                    )
                    self.warned = True
                self.order = self.rng.permutation(len(self.records)).tolist()
                self.pos = 0
            take = min(n - len(out), len(self.order) - self.pos)
            out.extend(self.records[i] for i in self.order[self.pos : self.pos + take])
            self.pos += take
        return out


class Sampler:
    """Deterministic minibatch scheduler over a DomainSet snapshot."""

    def __init__(self, ds: DomainSet, per_domain: int, seed: int):
        if per_domain < 1:
            raise ValueError("per_domain must be >= 1")
        for di, records in enumerate(ds.sources):
            if not records:
                raise ValueError(f"source domain {di} is empty")
        if not ds.target_unlabeled and not ds.target_labeled:
            raise ValueError("target domain is empty")
        self.ds = ds
        self.per_domain = per_domain
        self.rng = np.random.default_rng(seed)
        self._sources = [
            _Stream(records, self.rng, f"source_{di}") for di, records in enumerate(ds.sources)
        ]
        self._unlabeled: _Stream | None = None
        self._unlabeled_pool: list[SampleRecord] | None = None
        self._labeled: _Stream | None = None
        self._labeled_count = -1

    def batches_per_epoch(self) -> int:
        return max(math.ceil(len(records) / self.per_domain) for records in self.ds.sources)

    def epoch(self) -> list[list[SampleRecord]]:
        """One epoch of batches; call again for the next (reshuffled) epoch."""
        # the pool shrinks and T_l grows between rounds; refresh stale streams
        if self.ds.target_unlabeled is not self._unlabeled_pool:
            self._unlabeled_pool = self.ds.target_unlabeled
            self._unlabeled = (
                _Stream(self.ds.target_unlabeled, self.rng, "target_unlabeled")
                if self.ds.target_unlabeled
                else None
            )
        if len(self.ds.target_labeled) != self._labeled_count:
            self._labeled_count = len(self.ds.target_labeled)
            self._labeled = (
                _Stream(self.ds.target_labeled, self.rng, "target_labeled")
                if self.ds.target_labeled
                else None
            )
        batches = []
        for _ in range(self.batches_per_epoch()):
            batch: list[SampleRecord] = []
            for stream in self._sources:
                batch.extend(stream.draw(self.per_domain))
            if self._unlabeled is not None:
                batch.extend(self._unlabeled.draw(self.per_domain))
            if self._labeled is not None:
                if len(self.ds.target_labeled) <= self.per_domain:
                    batch.extend(self.ds.target_labeled)
                else:
                    batch.extend(self._labeled.draw(self.per_domain))
            batches.append(batch)
        return batches
