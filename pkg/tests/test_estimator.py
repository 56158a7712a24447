"""scikit-learn facade tests: API contract, semi-supervised fit, validation."""

from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone

from adose.corpus import SynthSpec, generate
from adose.estimator import MefnClassifier
from adose.validation import stack_views


def dataset_arrays(seed=0, n_target=60):
    spec = SynthSpec(
        samples_per_domain=[50, 50, 50, n_target],
        text_dim=6,
        visual_dim=6,
        anomaly_offset=5.0,
        noise_sigma=0.6,
        pattern_mix={"text_anomaly": 0.5, "visual_anomaly": 0.5, "cross_mismatch": 0.0},
    )
    ds = generate(spec, seed=seed)
    rows, y, dom = [], [], []
    for recs in ds.sources:
        for r in recs:
            rows.append(np.concatenate([r.text_raw, r.visual_raw]))
            y.append(r.label)
            dom.append(r.domain_id)
    truth = {}
    for r in ds.target_unlabeled:
        rows.append(np.concatenate([r.text_raw, r.visual_raw]))
        y.append(-1)
        dom.append(r.domain_id)
        truth[len(rows) - 1] = ds.oracle._labels[r.id]
    return np.stack(rows), np.array(y), np.array(dom), truth


class TestSklearnContract:
    def test_get_set_params_round_trip(self):
        clf = MefnClassifier(embed_dim=24, tau=0.7)
        params = clf.get_params()
        assert params["embed_dim"] == 24
        assert params["tau"] == 0.7
        clf2 = MefnClassifier().set_params(**params)
        assert clf2.get_params() == params

    def test_clone(self):
        clf = MefnClassifier(embed_dim=24, random_state=5)
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_unfitted_predict_raises(self):
        with pytest.raises(ValueError, match="not fitted"):
            MefnClassifier().predict(np.zeros((2, 12)))


class TestFitPredict:
    def test_fit_predict_on_separable_data(self):
        X, y, dom, truth = dataset_arrays()
        clf = MefnClassifier(embed_dim=16, hidden_dim=8, epochs=20, random_state=1)
        clf.fit(X, y, domain=dom)
        labeled = y >= 0
        acc = clf.score(X[labeled], y[labeled])
        assert acc >= 0.9
        assert clf.classes_.tolist() == [0, 1]
        proba = clf.predict_proba(X[:5])
        assert proba.shape == (5, 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-6)

    def test_unlabeled_rows_reach_target_predictions(self):
        X, y, dom, truth = dataset_arrays()
        clf = MefnClassifier(embed_dim=16, hidden_dim=8, epochs=25, random_state=2)
        clf.fit(X, y, domain=dom)
        target_rows = np.flatnonzero(y == -1)
        preds = clf.predict(X[target_rows])
        target_truth = np.array([truth[i] for i in target_rows])
        assert (preds == target_truth).mean() >= 0.8

    def test_default_domain_assignment(self):
        X, y, _, _ = dataset_arrays()
        # without domains: labeled rows become domain 0, unlabeled the target
        clf = MefnClassifier(embed_dim=12, hidden_dim=6, epochs=2, random_state=0)
        clf.fit(X, y)
        assert clf.state_.cfg.n_domains == 2

    def test_warm_start_continues_training(self):
        X, y, dom, _ = dataset_arrays()
        clf = MefnClassifier(embed_dim=12, hidden_dim=6, epochs=2, warm_start=True, random_state=3)
        clf.fit(X, y, domain=dom)
        first = clf.state_
        clf.fit(X, y, domain=dom)
        assert clf.state_ is first  # same state object, trained further

    def test_cold_start_reinitializes(self):
        X, y, dom, _ = dataset_arrays()
        clf = MefnClassifier(embed_dim=12, hidden_dim=6, epochs=1, random_state=3)
        clf.fit(X, y, domain=dom)
        first_weights = clf.state_.nets["enc_t"].layers[0].weight.data.copy()
        clf.fit(X, y, domain=dom)
        # reinitialized from the same seed, then retrained identically
        assert np.array_equal(first_weights, clf.state_.nets["enc_t"].layers[0].weight.data)


class TestValidation:
    def test_rejects_odd_columns_without_dims(self):
        X = np.zeros((4, 13))
        with pytest.raises(ValueError, match="odd column count"):
            MefnClassifier().fit(X, np.zeros(4))

    def test_rejects_unlabeled_source_rows(self):
        X = np.zeros((4, 8))
        y = np.array([0, 1, -1, -1])
        dom = np.array([0, 0, 0, 1])  # row 2 unlabeled but marked source
        with pytest.raises(ValueError, match="target domain id"):
            MefnClassifier().fit(X, y, domain=dom)

    def test_rejects_bad_label_values(self):
        X = np.zeros((3, 8))
        with pytest.raises(ValueError, match="labels"):
            MefnClassifier().fit(X, np.array([0, 1, 2]))

    def test_rejects_nonfinite_input(self):
        X = np.zeros((3, 8))
        X[1, 2] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            MefnClassifier().fit(X, np.array([0, 1, 0]))

    def test_explicit_dims_with_hv_block(self):
        rng = np.random.default_rng(0)
        text, visual = rng.normal(size=(40, 5)), rng.normal(size=(40, 4))
        hv = rng.dirichlet(np.ones(3), size=40)
        X = stack_views(text, visual, hv)
        y = rng.integers(0, 2, size=40)
        y[25:] = -1
        dom = np.where(y == -1, 1, 0)
        clf = MefnClassifier(
            text_dim=5, visual_dim=4, hv_dim=3, embed_dim=8, hidden_dim=4, epochs=1
        )
        clf.fit(X, y, domain=dom)
        assert clf.predict(X).shape == (40,)
