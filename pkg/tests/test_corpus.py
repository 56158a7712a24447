"""Dataset tests: ingestion, generation oracles, sampling, budget accounting."""

from __future__ import annotations

import json

import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from adose.corpus import (
    BudgetPlan,
    Sampler,
    SynthSpec,
    generate,
    load_dataset,
    oracle_annotate,
    save_dataset,
)
from adose.errors import BudgetError, DatasetError


class TestLoad:
    def write_dataset(self, tmp_path, mutate=None):
        spec = SynthSpec(samples_per_domain=[10, 10, 10, 12], text_dim=4, visual_dim=4)
        ds = generate(spec, seed=2)
        manifest = save_dataset(ds, tmp_path)
        if mutate:
            mutate(tmp_path)
        return manifest

    def test_counts_and_dims(self, tmp_path):
        manifest = self.write_dataset(tmp_path)
        ds = load_dataset(manifest)
        assert ds.n_source_domains == 3
        assert ds.n_unlabeled == 12
        assert ds.dims.text == 4 and ds.dims.hv == 4

    def test_missing_field_names_offending_record(self, tmp_path):
        def drop_visual(root):
            path = root / "domain_1.jsonl"
            lines = path.read_text().splitlines()
            obj = json.loads(lines[3])
            del obj["visual_raw"]
            lines[3] = json.dumps(obj)
            path.write_text("\n".join(lines) + "\n")

        manifest = self.write_dataset(tmp_path, drop_visual)
        with pytest.raises(DatasetError, match="visual_raw"):
            load_dataset(manifest)

    def test_duplicate_id_rejected(self, tmp_path):
        def duplicate(root):
            path = root / "domain_0.jsonl"
            lines = path.read_text().splitlines()
            lines.append(lines[0])
            path.write_text("\n".join(lines) + "\n")

        manifest = self.write_dataset(tmp_path, duplicate)
        with pytest.raises(DatasetError, match="duplicate"):
            load_dataset(manifest)

    def test_dimension_mismatch_names_record(self, tmp_path):
        def truncate(root):
            path = root / "domain_2.jsonl"
            lines = path.read_text().splitlines()
            obj = json.loads(lines[0])
            obj["text_raw"] = obj["text_raw"][:-1]
            bad_id = obj["id"]
            lines[0] = json.dumps(obj)
            path.write_text("\n".join(lines) + "\n")
            (root / "bad_id.txt").write_text(bad_id)

        manifest = self.write_dataset(tmp_path, truncate)
        bad_id = (tmp_path / "bad_id.txt").read_text()
        with pytest.raises(DatasetError, match=bad_id):
            load_dataset(manifest)

    def test_unknown_manifest_key_rejected(self, tmp_path):
        manifest = self.write_dataset(tmp_path)
        obj = json.loads(manifest.read_text())
        obj["surprise"] = 1
        manifest.write_text(json.dumps(obj))
        with pytest.raises(DatasetError, match="unknown keys"):
            load_dataset(manifest)

    def test_round_trip_field_for_field(self, tmp_path):
        manifest = self.write_dataset(tmp_path)
        ds1 = load_dataset(manifest)
        save_dataset(ds1, tmp_path / "again")
        ds2 = load_dataset(tmp_path / "again" / "manifest.json")
        assert ds1.name == ds2.name and ds1.dims == ds2.dims
        for recs1, recs2 in zip(
            ds1.sources + [ds1.target_unlabeled], ds2.sources + [ds2.target_unlabeled]
        ):
            assert len(recs1) == len(recs2)
            for a, b in zip(recs1, recs2):
                assert a.id == b.id and a.domain_id == b.domain_id and a.label == b.label
                assert np.array_equal(a.text_raw, b.text_raw)
                assert np.array_equal(a.visual_raw, b.visual_raw)
                assert np.array_equal(a.hv, b.hv)
        assert ds1.oracle._labels == ds2.oracle._labels

    def test_target_labels_hidden_after_load(self, tmp_path):
        ds = load_dataset(self.write_dataset(tmp_path))
        assert all(r.label is None for r in ds.target_unlabeled)
        assert len(ds.oracle) == ds.n_unlabeled
        assert ds.oracle.audit_log == []


class TestSynth:
    def test_same_seed_bit_identical(self):
        spec = SynthSpec(samples_per_domain=[15, 15, 15, 20], text_dim=6, visual_dim=5)
        a, b = generate(spec, seed=9), generate(spec, seed=9)
        for ra, rb in zip(a.target_unlabeled, b.target_unlabeled):
            assert ra.id == rb.id
            assert np.array_equal(ra.text_raw, rb.text_raw)
            assert np.array_equal(ra.hv, rb.hv)
        assert a.oracle._labels == b.oracle._labels

    def test_degenerate_specs_rejected(self):
        with pytest.raises(DatasetError):
            SynthSpec(samples_per_domain=[0, 10, 10, 10])
        with pytest.raises(DatasetError):
            SynthSpec(noise_sigma=0.0)
        with pytest.raises(DatasetError):
            SynthSpec(pattern_mix={"text_anomaly": 0.5, "visual_anomaly": 0.2, "cross_mismatch": 0.2})
        with pytest.raises(DatasetError, match="unknown keys"):
            SynthSpec.from_dict({"bogus": 1})

    def test_hv_is_probability_vector(self):
        ds = generate(SynthSpec(samples_per_domain=[10, 10, 10, 10]), seed=3)
        for rec in ds.target_unlabeled:
            assert (rec.hv >= 0).all()
            assert abs(float(rec.hv.sum()) - 1.0) < 1e-4

    def test_zero_shift_domains_are_probe_indistinguishable(self):
        """With no inter-domain shift a domain probe stays near chance (0.25)."""
        spec = SynthSpec(
            samples_per_domain=[150, 150, 150, 150],
            domain_shift=0.0,
            target_shift=0.0,
        )
        ds = generate(spec, seed=31)
        records = [r for recs in ds.sources for r in recs] + ds.target_unlabeled
        X = np.stack([np.concatenate([r.text_raw, r.visual_raw]) for r in records])
        y = np.array([r.domain_id for r in records])
        rng = np.random.default_rng(0)
        order = rng.permutation(len(y))
        cut = int(0.7 * len(y))
        train, test = order[:cut], order[cut:]
        probe = LogisticRegression(max_iter=1000).fit(X[train], y[train])
        acc = probe.score(X[test], y[test])
        assert acc <= 0.35, f"probe accuracy {acc:.3f} should be near chance 0.25"

    @staticmethod
    def _gaussian_loglik(x, centers, sigma):
        # log N(x; c, sigma^2 I) up to a shared constant, per center
        d2 = ((centers - x) ** 2).sum(axis=1)
        return -d2 / (2 * sigma**2)

    def test_mismatch_fakes_need_cross_modal_evidence(self):
        """Closed-form Bayes rules from the generative parameters: the
        text-only rule stays near chance while the joint rule succeeds."""
        spec = SynthSpec(
            samples_per_domain=[50, 50, 50, 400],
            pattern_mix=[
                {"text_anomaly": 1.0, "visual_anomaly": 0.0, "cross_mismatch": 0.0}
            ] * 3
            + [{"text_anomaly": 0.0, "visual_anomaly": 0.0, "cross_mismatch": 1.0}],
            domain_shift=0.0,
            target_shift=0.0,
        )
        ds = generate(spec, seed=17)
        meta = ds.meta
        ct = np.array(meta["topic_centers_text"])
        cv = np.array(meta["topic_centers_visual"])
        sigma = spec.noise_sigma
        n_topics = len(ct)
        truth = np.array([ds.oracle._labels[r.id] for r in ds.target_unlabeled])

        def logsumexp(v):
            m = v.max()
            return m + np.log(np.exp(v - m).sum())

        text_correct = 0
        joint_correct = 0
        for rec, label in zip(ds.target_unlabeled, truth):
            lt = self._gaussian_loglik(rec.text_raw, ct, sigma)
            lv = self._gaussian_loglik(rec.visual_raw, cv, sigma)
            # real text: topic mixture; mismatch-fake text: the text topic is
            # also uniform, so the marginal is the same mixture
            text_real_ll = logsumexp(lt) - np.log(n_topics)
            text_fake_ll = logsumexp(lt) - np.log(n_topics)
            text_pred = 0 if text_real_ll >= text_fake_ll else 1
            text_correct += text_pred == label
            # joint: real pairs share a topic, fakes mix two different topics
            real_ll = logsumexp(lt + lv) - np.log(n_topics)
            cross = [
                lt[i] + lv[j]
                for i in range(n_topics)
                for j in range(n_topics)
                if i != j
            ]
            fake_ll = logsumexp(np.array(cross)) - np.log(n_topics * (n_topics - 1))
            joint_correct += (0 if real_ll >= fake_ll else 1) == label
        text_acc = text_correct / len(truth)
        joint_acc = joint_correct / len(truth)
        assert text_acc <= 0.6, f"text-only Bayes should fail, got {text_acc:.3f}"
        assert joint_acc >= 0.9, f"cross-modal Bayes should succeed, got {joint_acc:.3f}"


class TestSampler:
    def make_ds(self, per=40, target=60):
        spec = SynthSpec(samples_per_domain=[per, per, per, target], text_dim=4, visual_dim=4)
        return generate(spec, seed=5)

    def test_batch_composition(self):
        ds = self.make_ds()
        batch = Sampler(ds, per_domain=16, seed=1).epoch()[0]
        assert len(batch) == 3 * 16 + 16  # sources + unlabeled target
        by_domain = {}
        for rec in batch:
            by_domain.setdefault(rec.domain_id, []).append(rec)
        assert {d: len(v) for d, v in sorted(by_domain.items())} == {0: 16, 1: 16, 2: 16, 3: 16}

    def test_fixed_seed_reproduces_stream(self):
        ds = self.make_ds()
        a = Sampler(ds, per_domain=8, seed=7)
        b = Sampler(ds, per_domain=8, seed=7)
        for _ in range(2):
            for ba, bb in zip(a.epoch(), b.epoch()):
                assert [r.id for r in ba] == [r.id for r in bb]

    def test_epoch_covers_each_source_exactly_once(self):
        ds = self.make_ds(per=40)
        sampler = Sampler(ds, per_domain=8, seed=3)
        seen: list[str] = []
        for batch in sampler.epoch():
            seen.extend(r.id for r in batch if r.domain_id < 3)
        full = sorted(r.id for recs in ds.sources for r in recs)
        assert sorted(seen) == full  # multiset equality: full set, no duplicates

    def test_labeled_target_appended_when_small(self):
        ds = self.make_ds()
        plan = BudgetPlan.from_pool(ds.n_unlabeled, rounds=5)  # schedule [1,1,1,1,2]
        ids = [ds.target_unlabeled[0].id]
        oracle_annotate(ds, ids, plan)
        ids.append(ds.target_unlabeled[0].id)
        oracle_annotate(ds, ids[-1:], plan)
        batch = Sampler(ds, per_domain=16, seed=1).epoch()[0]
        labeled_target = [r for r in batch if r.domain_id == 3 and r.label is not None]
        assert sorted(r.id for r in labeled_target) == sorted(ids)

    def test_small_domain_warns_and_wraps(self, caplog):
        spec = SynthSpec(samples_per_domain=[5, 40, 40, 40], text_dim=4, visual_dim=4)
        ds = generate(spec, seed=6)
        with caplog.at_level("WARNING"):
            batches = Sampler(ds, per_domain=16, seed=2).epoch()
        assert any("fewer than" in rec.message for rec in caplog.records)
        assert all(sum(r.domain_id == 0 for r in b) == 16 for b in batches)


class TestBudget:
    @pytest.mark.parametrize(
        "n,total,schedule",
        [
            (47, 5, [1, 1, 1, 1, 1]),
            (200, 20, [4, 4, 4, 4, 4]),
            (1000, 100, [20, 20, 20, 20, 20]),
            (230, 23, [4, 4, 4, 4, 7]),
        ],
    )
    def test_ceil_fraction_with_remainder_on_last_round(self, n, total, schedule):
        plan = BudgetPlan.from_pool(n, fraction=0.10, rounds=5)
        assert plan.total == total
        assert plan.schedule == schedule
        assert sum(plan.schedule) == plan.total

    def test_paper_protocol_example(self):
        # 10% of 200 target samples over 5 rounds: B=20, k=4
        plan = BudgetPlan.from_pool(200, fraction=0.10, rounds=5)
        assert plan.total == 20 and plan.k == 4


class TestOracleAnnotate:
    def make(self):
        ds = generate(SynthSpec(samples_per_domain=[10, 10, 10, 200], text_dim=4, visual_dim=4), seed=4)
        plan = BudgetPlan.from_pool(ds.n_unlabeled, fraction=0.10, rounds=5)
        return ds, plan

    def test_bookkeeping(self):
        ds, plan = self.make()
        ids = [r.id for r in ds.target_unlabeled[:4]]
        oracle_annotate(ds, ids, plan)
        assert ds.n_labeled_target == 4
        assert ds.n_unlabeled == 196
        assert plan.spent == 4
        assert all(r.label in (0, 1) for r in ds.target_labeled)
        assert ds.oracle.audit_log == ids

    def test_sixth_round_is_refused_without_effect(self):
        ds, plan = self.make()
        for _ in range(5):
            ids = [r.id for r in ds.target_unlabeled[:4]]
            oracle_annotate(ds, ids, plan)
        before = (ds.n_unlabeled, ds.n_labeled_target, plan.spent)
        with pytest.raises(BudgetError, match="exhausted"):
            oracle_annotate(ds, [ds.target_unlabeled[0].id], plan)
        assert (ds.n_unlabeled, ds.n_labeled_target, plan.spent) == before

    def test_unknown_id_is_atomic(self):
        ds, plan = self.make()
        good = [r.id for r in ds.target_unlabeled[:3]]
        with pytest.raises(BudgetError, match="not in the unlabeled pool"):
            oracle_annotate(ds, good + ["nope"], plan)
        assert ds.n_labeled_target == 0 and plan.spent == 0
        assert all(r.label is None for r in ds.target_unlabeled)

    def test_reannotation_refused(self):
        ds, plan = self.make()
        ids = [r.id for r in ds.target_unlabeled[:4]]
        oracle_annotate(ds, ids, plan)
        with pytest.raises(BudgetError, match="already annotated"):
            oracle_annotate(ds, ids[:1], plan)

    def test_over_quota_refused(self):
        ds, plan = self.make()
        ids = [r.id for r in ds.target_unlabeled[:5]]
        with pytest.raises(BudgetError, match="allows"):
            oracle_annotate(ds, ids, plan)

    def test_total_annotations_equal_budget(self):
        ds, plan = self.make()
        annotated = []
        for quota in plan.schedule:
            ids = [r.id for r in ds.target_unlabeled[:quota]]
            oracle_annotate(ds, ids, plan)
            annotated.extend(ids)
        assert len(annotated) == plan.total == plan.spent
        assert len(set(annotated)) == plan.total


class TestSplit:
    def test_withdrawn_split_is_labeled_and_disjoint(self):
        ds = generate(SynthSpec(samples_per_domain=[10, 10, 10, 100], text_dim=4, visual_dim=4), seed=1)
        test = ds.withdraw_test_split(0.3, seed=0)
        assert len(test) == 30
        assert ds.n_unlabeled == 70
        assert all(r.label in (0, 1) for r in test)
        pool_ids = set(ds.unlabeled_ids())
        assert pool_ids.isdisjoint({r.id for r in test})
        # withdrawn ids left the oracle entirely
        assert all(r.id not in ds.oracle for r in test)
        assert ds.oracle.audit_log == []

    def test_split_after_annotation_rejected(self):
        ds = generate(SynthSpec(samples_per_domain=[10, 10, 10, 100], text_dim=4, visual_dim=4), seed=1)
        plan = BudgetPlan.from_pool(100)
        oracle_annotate(ds, [ds.target_unlabeled[0].id], plan)
        with pytest.raises(DatasetError, match="before any annotation"):
            ds.withdraw_test_split(0.3, seed=0)
