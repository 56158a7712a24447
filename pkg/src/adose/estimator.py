"""scikit-learn estimator facade over the fusion network.

``X`` stacks the two views (and optionally the backbone probability vector)
column-wise: ``[text | visual | hv]``. Rows with ``y == -1`` are treated as
unlabeled target samples, following the semi-supervised convention: they feed
the domain-adversarial term but never a supervised loss. ``domain`` assigns a
source domain id per row; unlabeled rows always belong to the target domain.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .corpus import Dims, DomainSet, Oracle, SampleRecord
from .harness.config import TrainSettings
from .harness.training import train_phase
from .mefn import MefnConfig, ModelState, predict_proba
from .objectives import LossCounters, LossWeights
from .validation import check_domains, check_labels, check_matrix, split_views


class MefnClassifier(BaseEstimator, ClassifierMixin):
    """Two-view expert-fusion classifier with domain-adversarial training.

    Parameters mirror the run-config defaults; ``text_dim`` and ``visual_dim``
    may be left as None when there is no hv block, in which case the columns
    of X are split evenly between the views.
    """

    def __init__(
        self,
        text_dim=None,
        visual_dim=None,
        hv_dim=0,
        embed_dim=64,
        hidden_dim=32,
        epochs=30,
        batch_per_domain=16,
        learning_rate=0.001,
        weight_decay=0.0005,
        lambda_c=0.5,
        lambda_a=0.2,
        lambda_t=0.5,
        lambda_n=0.2,
        tau=0.5,
        beta=0.8,
        grl_coeff=1.0,
        fusion_mode="poe",
        normalize_alignment=True,
        warm_start=False,
        random_state=0,
    ):
        self.text_dim = text_dim
        self.visual_dim = visual_dim
        self.hv_dim = hv_dim
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_per_domain = batch_per_domain
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.lambda_c = lambda_c
        self.lambda_a = lambda_a
        self.lambda_t = lambda_t
        self.lambda_n = lambda_n
        self.tau = tau
        self.beta = beta
        self.grl_coeff = grl_coeff
        self.fusion_mode = fusion_mode
        self.normalize_alignment = normalize_alignment
        self.warm_start = warm_start
        self.random_state = random_state

    def _dims(self, n_cols: int) -> tuple[int, int, int]:
        if self.text_dim is None and self.visual_dim is None:
            if self.hv_dim:
                raise ValueError("text_dim/visual_dim are required when hv_dim > 0")
            if n_cols % 2:
                raise ValueError("cannot split an odd column count evenly between views")
            return n_cols // 2, n_cols // 2, 0
        if self.text_dim is None or self.visual_dim is None:
            raise ValueError("set both text_dim and visual_dim or neither")
        return int(self.text_dim), int(self.visual_dim), int(self.hv_dim)

    def _to_records(self, X, y, domain):
        X = check_matrix(X)
        y = check_labels(y, X.shape[0], allow_unlabeled=True)
        text_dim, visual_dim, hv_dim = self._dims(X.shape[1])
        if domain is None:
            domain = np.where(y == -1, 1, 0)
        domain = check_domains(domain, X.shape[0])
        target_id = int(domain.max())
        if target_id == 0:
            raise ValueError("need at least one source domain besides the target")
        if ((y == -1) & (domain != target_id)).any():
            raise ValueError("unlabeled rows (y == -1) must carry the target domain id")
        text, visual, hv = split_views(X, text_dim, visual_dim, hv_dim)

        sources: list[list[SampleRecord]] = [[] for _ in range(target_id)]
        target_unlabeled: list[SampleRecord] = []
        target_labeled: list[SampleRecord] = []
        hidden: dict[str, int] = {}
        for i in range(X.shape[0]):
            rec = SampleRecord(
                id=f"row_{i:06d}",
                domain_id=int(domain[i]),
                text_raw=text[i].astype(np.float32),
                visual_raw=visual[i].astype(np.float32),
                hv=None if hv is None else hv[i].astype(np.float32),
                label=None if y[i] == -1 else int(y[i]),
            )
            if rec.domain_id == target_id:
                if rec.label is None:
                    # satisfies the "every pool record has an oracle label"
                    # invariant; fit never annotates, so it is never read
                    hidden[rec.id] = 0
                    target_unlabeled.append(rec)
                else:
                    target_labeled.append(rec)
            else:
                if rec.label is None:
                    raise ValueError(f"source row {i} is unlabeled")
                sources[rec.domain_id].append(rec)
        for di, records in enumerate(sources):
            if not records:
                raise ValueError(f"source domain {di} has no rows")
        ds = DomainSet(
            name="arrays",
            dims=Dims(text=text_dim, visual=visual_dim, hv=hv_dim),
            sources=sources,
            target_unlabeled=target_unlabeled,
            oracle=Oracle(hidden),
        )
        ds.target_labeled = target_labeled
        return ds, (text_dim, visual_dim, hv_dim)

    def fit(self, X, y, domain=None):
        """Train on labeled rows plus unlabeled target rows (y == -1)."""
        ds, (text_dim, visual_dim, hv_dim) = self._to_records(X, y, domain)
        settings = TrainSettings(
            initial_epochs=self.epochs,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            batch_per_domain=self.batch_per_domain,
            grl_coeff=self.grl_coeff,
            normalize_alignment=self.normalize_alignment,
        )
        weights = LossWeights(
            lambda_c=self.lambda_c, lambda_a=self.lambda_a, lambda_t=self.lambda_t,
            lambda_n=self.lambda_n, tau=self.tau, beta=self.beta,
        )
        if not (self.warm_start and hasattr(self, "state_")):
            cfg = MefnConfig(
                text_dim=text_dim,
                visual_dim=visual_dim,
                n_domains=ds.n_domains,
                embed_dim=self.embed_dim,
                hidden_dim=self.hidden_dim,
                fusion_mode=self.fusion_mode,
            )
            self.state_ = ModelState.initialize(
                cfg, seed=self.random_state,
                lr=self.learning_rate, weight_decay=self.weight_decay,
            )
        self.counters_ = LossCounters()
        train_phase(
            self.state_, ds, weights, settings, self.epochs,
            seed=self.random_state, counters=self.counters_,
        )
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "state_"):
            raise ValueError("this MefnClassifier instance is not fitted yet")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_matrix(X)
        cfg = self.state_.cfg
        text, visual, _ = split_views(X, cfg.text_dim, cfg.visual_dim,
                                      X.shape[1] - cfg.text_dim - cfg.visual_dim)
        return predict_proba(self.state_, text, visual)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y, sample_weight=None):
        y = check_labels(y, np.asarray(X).shape[0])
        return float((self.predict(X) == y).mean())
