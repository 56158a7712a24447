"""Data model: samples, the domain partition, the labeling oracle, and budgets.

Target-domain labels are held in a private oracle store and revealed only
through :func:`oracle_annotate` (charged against the budget) or through the
test-split withdrawal used by evaluation. Records visible to the training
path carry ``label=None`` until annotated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetError, DatasetError

REAL, FAKE = 0, 1


@dataclass
class SampleRecord:
    """One two-view item: pre-extracted text and visual embeddings."""

    id: str
    domain_id: int
    text_raw: np.ndarray
    visual_raw: np.ndarray
    hv: np.ndarray | None = None
    label: int | None = None

    def validate(self, text_dim: int, visual_dim: int, hv_dim: int) -> None:
        if self.text_raw.shape != (text_dim,):
            raise DatasetError(f"record {self.id}: text_raw has shape {self.text_raw.shape}, expected ({text_dim},)")
        if self.visual_raw.shape != (visual_dim,):
            raise DatasetError(f"record {self.id}: visual_raw has shape {self.visual_raw.shape}, expected ({visual_dim},)")
        if hv_dim:
            if self.hv is None:
                raise DatasetError(f"record {self.id}: missing hv (manifest declares hv dim {hv_dim})")
            if self.hv.shape != (hv_dim,):
                raise DatasetError(f"record {self.id}: hv has shape {self.hv.shape}, expected ({hv_dim},)")
            if (self.hv < 0).any() or abs(float(self.hv.sum()) - 1.0) > 1e-4:
                raise DatasetError(f"record {self.id}: hv must be a probability vector")
        if self.label is not None and self.label not in (REAL, FAKE):
            raise DatasetError(f"record {self.id}: label must be 0 (real) or 1 (fake), got {self.label}")
        for name in ("text_raw", "visual_raw"):
            if not np.isfinite(getattr(self, name)).all():
                raise DatasetError(f"record {self.id}: non-finite values in {name}")


class Oracle:
    """Hidden label store for the target pool; every reveal is audited."""

    def __init__(self, labels: dict[str, int]):
        self._labels = dict(labels)
        self.audit_log: list[str] = []

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def reveal(self, sample_id: str) -> int:
        if sample_id not in self._labels:
            raise DatasetError(f"oracle holds no label for id {sample_id!r}")
        self.audit_log.append(sample_id)
        return self._labels[sample_id]

    def withdraw(self, sample_id: str) -> int:
        """Remove and return a label without audit; used only for test splits."""
        if sample_id not in self._labels:
            raise DatasetError(f"oracle holds no label for id {sample_id!r}")
        return self._labels.pop(sample_id)


@dataclass
class Dims:
    text: int
    visual: int
    hv: int = 0


class DomainSet:
    """M fully labeled source domains plus a target pool split into T_u / T_l.

    The target domain id is always M. Mutation happens only through
    :func:`oracle_annotate` and :meth:`withdraw_test_split`.
    """

    def __init__(
        self,
        name: str,
        dims: Dims,
        sources: list[list[SampleRecord]],
        target_unlabeled: list[SampleRecord],
        oracle: Oracle,
        meta: dict | None = None,
    ):
        self.name = name
        self.dims = dims
        self.sources = sources
        self.target_unlabeled = list(target_unlabeled)
        self.target_labeled: list[SampleRecord] = []
        self.oracle = oracle
        self.meta = meta or {}
        self._check()

    def _check(self) -> None:
        seen: set[str] = set()
        for records in self.sources + [self.target_unlabeled]:
            for rec in records:
                if rec.id in seen:
                    raise DatasetError(f"duplicate sample id {rec.id!r}")
                seen.add(rec.id)
        for di, records in enumerate(self.sources):
            for rec in records:
                if rec.label is None:
                    raise DatasetError(f"source record {rec.id} has no label")
                if rec.domain_id != di:
                    raise DatasetError(f"record {rec.id}: domain_id {rec.domain_id} != source index {di}")
        for rec in self.target_unlabeled:
            if rec.label is not None:
                raise DatasetError(f"unlabeled target record {rec.id} carries a visible label")
            if rec.id not in self.oracle:
                raise DatasetError(f"target record {rec.id} has no oracle label")

    @property
    def n_source_domains(self) -> int:
        return len(self.sources)

    @property
    def n_domains(self) -> int:
        """Total domain count M+1 (sources plus the target)."""
        return len(self.sources) + 1

    @property
    def target_domain_id(self) -> int:
        return len(self.sources)

    @property
    def n_unlabeled(self) -> int:
        return len(self.target_unlabeled)

    @property
    def n_labeled_target(self) -> int:
        return len(self.target_labeled)

    def unlabeled_ids(self) -> list[str]:
        return [r.id for r in self.target_unlabeled]

    def labeled_records(self) -> list[SampleRecord]:
        """Everything the supervised losses may see: sources plus T_l."""
        out: list[SampleRecord] = []
        for records in self.sources:
            out.extend(records)
        out.extend(self.target_labeled)
        return out

    def withdraw_test_split(self, fraction: float, seed: int) -> list[SampleRecord]:
        """Remove a held-out labeled test split from the target pool.

        Must be called before any annotation; the withdrawn records leave the
        selection pool entirely, so they can never appear in training batches.
        """
        if self.target_labeled:
            raise DatasetError("test split must be withdrawn before any annotation")
        if not 0 <= fraction < 1:
            raise DatasetError(f"test fraction must be in [0, 1), got {fraction}")
        n_test = int(round(fraction * len(self.target_unlabeled)))
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(self.target_unlabeled))
        test_idx = set(order[:n_test].tolist())
        test, pool = [], []
        for i, rec in enumerate(self.target_unlabeled):
            if i in test_idx:
                rec.label = self.oracle.withdraw(rec.id)
                test.append(rec)
            else:
                pool.append(rec)
        self.target_unlabeled = pool
        test.sort(key=lambda r: r.id)
        return test


@dataclass
class BudgetPlan:
    """Total label budget and its per-round schedule (remainder on the last)."""

    total: int
    rounds: int
    multiplier: int
    schedule: list[int] = field(default_factory=list)
    spent: int = 0
    next_round: int = 0

    @classmethod
    def from_pool(cls, n_unlabeled: int, fraction: float = 0.10, rounds: int = 5,
                  multiplier: int = 2) -> "BudgetPlan":
        if n_unlabeled < 1:
            raise BudgetError("cannot plan a budget over an empty pool")
        total = math.ceil(fraction * n_unlabeled)
        base = total // rounds
        schedule = [base] * rounds
        schedule[-1] += total - base * rounds
        return cls(total=total, rounds=rounds, multiplier=multiplier, schedule=schedule)

    @property
    def k(self) -> int:
        """Nominal per-round label count (the last round may add a remainder)."""
        return self.schedule[0] if self.schedule else 0

    @property
    def remaining(self) -> int:
        return self.total - self.spent

    def current_quota(self) -> int:
        if self.next_round >= self.rounds:
            raise BudgetError(f"budget exhausted after {self.rounds} rounds")
        return self.schedule[self.next_round]


def oracle_annotate(ds: DomainSet, ids: list[str], plan: BudgetPlan) -> list[SampleRecord]:
    """Move ``ids`` from T_u to T_l, revealing their labels against the budget.

    Atomic: every precondition is checked before anything changes, so a
    failure leaves both the DomainSet and the plan untouched.
    """
    if plan.next_round >= plan.rounds:
        raise BudgetError(f"budget exhausted: all {plan.rounds} rounds already consumed")
    quota = plan.schedule[plan.next_round]
    if len(ids) > quota:
        raise BudgetError(f"requested {len(ids)} labels but round {plan.next_round} allows {quota}")
    if plan.spent + len(ids) > plan.total:
        raise BudgetError(f"request would spend {plan.spent + len(ids)} of budget {plan.total}")
    if len(set(ids)) != len(ids):
        raise BudgetError("duplicate ids in annotation request")
    by_id = {r.id: r for r in ds.target_unlabeled}
    labeled_ids = {r.id for r in ds.target_labeled}
    for sample_id in ids:
        if sample_id in labeled_ids:
            raise BudgetError(f"id {sample_id!r} is already annotated")
        if sample_id not in by_id:
            raise BudgetError(f"id {sample_id!r} is not in the unlabeled pool")

    chosen = set(ids)
    for sample_id in ids:
        rec = by_id[sample_id]
        rec.label = ds.oracle.reveal(sample_id)
        ds.target_labeled.append(rec)
    ds.target_unlabeled = [r for r in ds.target_unlabeled if r.id not in chosen]
    plan.spent += len(ids)
    plan.next_round += 1
    return [by_id[i] for i in ids]
