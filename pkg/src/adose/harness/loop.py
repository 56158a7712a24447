"""The round-based active adaptation loop."""

from __future__ import annotations

import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..corpus import BudgetPlan, DomainSet, SampleRecord, SynthSpec, generate, load_dataset, oracle_annotate
from ..mefn import MefnConfig, ModelState, config_hash
from ..objectives import LossCounters
from .config import (
    SEED_MODEL,
    SEED_SELECT,
    SEED_SPLIT,
    SEED_SYNTH,
    SEED_TRAIN,
    RunConfig,
    derive_seed,
)
from .report import (
    MetricsLog,
    RunReport,
    round_table,
    write_diversity_csv,
    write_ldm_csv,
    write_predictions_csv,
    write_report,
)
from .strategies import select_ids
from .training import evaluate, train_phase

logger = logging.getLogger(__name__)


def build_dataset(cfg: RunConfig) -> DomainSet:
    """Load the manifest or generate the synthetic benchmark."""
    if "manifest" in cfg.dataset:
        return load_dataset(cfg.dataset["manifest"])
    spec = SynthSpec.from_dict(cfg.dataset["synth"])
    return generate(spec, seed=derive_seed(cfg.seed, SEED_SYNTH))


def prepare_split(cfg: RunConfig, ds: DomainSet) -> list[SampleRecord]:
    """Withdraw the held-out target test split (evaluator-only labels)."""
    return ds.withdraw_test_split(cfg.evaluation.test_fraction, derive_seed(cfg.seed, SEED_SPLIT))


def init_model(cfg: RunConfig, ds: DomainSet, seed: int | None = None) -> ModelState:
    mefn_cfg = MefnConfig(
        text_dim=ds.dims.text,
        visual_dim=ds.dims.visual,
        n_domains=ds.n_domains,
        embed_dim=cfg.model.embed_dim,
        hidden_dim=cfg.model.hidden_dim,
        fusion_mode=cfg.model.fusion_mode,
    )
    return ModelState.initialize(
        mefn_cfg,
        seed=derive_seed(cfg.seed, SEED_MODEL) if seed is None else seed,
        lr=cfg.training.learning_rate,
        weight_decay=cfg.training.weight_decay,
    )


def run_active_loop(cfg: RunConfig, out_dir: str | Path | None = None) -> RunReport:
    """Initial source training, then select/annotate/adapt rounds.

    Writes report.json, metrics.csv, predictions.csv, and per-round dumps to
    the output directory. On a mid-run failure the partial report is written
    with ``incomplete: true`` before the error propagates.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # the output location is provenance, not an experimental parameter: two
    # runs that differ only in out_dir hash and report identically
    snapshot = cfg.to_dict(include_out_dir=False)
    report = RunReport(config=snapshot, config_hash=config_hash(snapshot))
    try:
        _run(cfg, out, report)
    except Exception as e:
        report.incomplete = True
        report.error = f"{type(e).__name__}: {e}"
        write_report(out / "report.json", report)
        raise
    write_report(out / "report.json", report)
    return report


def _run(cfg: RunConfig, out: Path, report: RunReport) -> None:
    ds = build_dataset(cfg)
    test_split = prepare_split(cfg, ds)
    if not test_split:
        raise ValueError("test split is empty; increase test_fraction or pool size")
    plan = BudgetPlan.from_pool(
        ds.n_unlabeled, cfg.budget.fraction, cfg.budget.rounds, cfg.lus.multiplier
    )
    report.dataset = {
        "name": ds.name,
        "n_source_domains": ds.n_source_domains,
        "source_sizes": [len(s) for s in ds.sources],
        "pool_size": ds.n_unlabeled,
        "test_size": len(test_split),
    }
    report.budget = {"total": plan.total, "rounds": plan.rounds, "schedule": list(plan.schedule)}

    state = init_model(cfg, ds)
    metrics = MetricsLog(out / "metrics.csv")
    counters = LossCounters()

    train_phase(
        state, ds, cfg.weights, cfg.training, cfg.training.initial_epochs,
        seed=derive_seed(cfg.seed, SEED_TRAIN, 0),
        negative_filter=cfg.negative_filter, metrics=metrics, counters=counters,
    )
    eval_metrics, rows = evaluate(state, test_split)
    report.rounds.append({"round": 0, "selected_ids": [], "n_labeled": 0, **eval_metrics.to_dict()})
    logger.info("round 0 (source training): accuracy %.4f", eval_metrics.accuracy)

    selected_all: set[str] = set()
    for round_idx in range(plan.rounds):
        quota = plan.current_quota()
        trace = select_ids(
            cfg.strategy, state, ds, quota, cfg.lus, cfg.diversity_mode,
            seed=derive_seed(cfg.seed, SEED_SELECT, round_idx),
        )
        if set(trace.chosen) & selected_all:
            raise RuntimeError("strategy re-selected an already annotated id")
        selected_all.update(trace.chosen)

        round_dir = out / "rounds" / f"round_{round_idx + 1}"
        if trace.ldm is not None:
            write_ldm_csv(round_dir / "ldm.csv", trace.ldm)
        if trace.diversity is not None:
            write_diversity_csv(round_dir / "diversity.csv", trace.diversity, trace.chosen)

        oracle_annotate(ds, trace.chosen, plan)
        if cfg.training.reinit_each_round:
            state = init_model(cfg, ds)
            epochs = cfg.training.initial_epochs + cfg.training.round_epochs
        else:
            epochs = cfg.training.round_epochs
        train_phase(
            state, ds, cfg.weights, cfg.training, epochs,
            seed=derive_seed(cfg.seed, SEED_TRAIN, round_idx + 1),
            negative_filter=cfg.negative_filter, metrics=metrics, counters=counters,
        )
        eval_metrics, rows = evaluate(state, test_split)
        report.rounds.append(
            {
                "round": round_idx + 1,
                "selected_ids": sorted(trace.chosen),
                "n_labeled": ds.n_labeled_target,
                **eval_metrics.to_dict(),
            }
        )
        logger.info(
            "round %d: +%d labels (total %d), accuracy %.4f",
            round_idx + 1, quota, ds.n_labeled_target, eval_metrics.accuracy,
        )

    write_predictions_csv(out / "predictions.csv", rows)
    state.save(out / "model", config_hash=report.config_hash)
    report.final = {
        "accuracy": eval_metrics.accuracy,
        "f1_fake": eval_metrics.f1_fake,
        "f1_real": eval_metrics.f1_real,
        "budget_spent": plan.spent,
        "n_labeled": ds.n_labeled_target,
    }
    report.counters = asdict(counters)
    if plan.spent != plan.total:
        raise RuntimeError(f"budget accounting mismatch: spent {plan.spent} of {plan.total}")


def print_summary(report: RunReport) -> str:
    return round_table(report)
