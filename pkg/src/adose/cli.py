"""Command-line surface.

Subcommands: ``synth`` (write a synthetic dataset), ``train`` (source-only
training), ``run`` (full active adaptation loop), ``evaluate`` (checkpoint
metrics on the held-out split), ``inspect-selection`` (per-round dumps of a
finished run). Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .corpus import SynthSpec, generate, save_dataset
from .errors import AdoseError
from .harness import (
    MetricsLog,
    RunConfig,
    build_dataset,
    derive_seed,
    evaluate,
    init_model,
    prepare_split,
    round_table,
    run_active_loop,
    train_phase,
)
from .harness.config import SEED_TRAIN
from .mefn import ModelState, config_hash
from .objectives import LossCounters

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output directory")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "strategy", None) is not None:
        cfg = replace(cfg, strategy=args.strategy)
    if getattr(args, "deterministic", None) is not None:
        cfg = replace(cfg, deterministic=args.deterministic)
    return cfg


def cmd_synth(args) -> int:
    spec = SynthSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    ds = generate(spec, seed=args.seed if args.seed is not None else 0)
    manifest = save_dataset(ds, args.out)
    summary = {
        "manifest": str(manifest),
        "n_source_domains": ds.n_source_domains,
        "source_sizes": [len(s) for s in ds.sources],
        "target_size": ds.n_unlabeled,
        "dims": {"text": ds.dims.text, "visual": ds.dims.visual, "hv": ds.dims.hv},
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg)
    test_split = prepare_split(cfg, ds)
    state = init_model(cfg, ds)
    metrics = MetricsLog(out / "metrics.csv")
    counters = LossCounters()
    train_phase(
        state, ds, cfg.weights, cfg.training, cfg.training.initial_epochs,
        seed=derive_seed(cfg.seed, SEED_TRAIN, 0),
        negative_filter=cfg.negative_filter, metrics=metrics, counters=counters,
    )
    snapshot = cfg.to_dict()
    state.save(out / "model", config_hash=config_hash(snapshot))
    eval_metrics, _ = evaluate(state, test_split)
    result = {"phase": "source-training", **eval_metrics.to_dict(), "model_dir": str(out / "model")}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_active_loop(cfg)
    print(round_table(report))
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    ds = build_dataset(cfg)
    test_split = prepare_split(cfg, ds)
    state = ModelState.load(args.model)
    eval_metrics, rows = evaluate(state, test_split)
    result = eval_metrics.to_dict()
    result["n_test"] = len(rows)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_inspect_selection(args) -> int:
    run_dir = Path(args.run)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise AdoseError(f"no report.json under {run_dir}")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    print(f"strategy: {report['config']['strategy']}  seed: {report['config']['seed']}")
    for entry in report["rounds"]:
        if entry["round"] == 0:
            continue
        print(f"\nround {entry['round']}: selected {', '.join(entry['selected_ids'])}")
        round_dir = run_dir / "rounds" / f"round_{entry['round']}"
        for name, col in (("ldm.csv", "l_e"), ("diversity.csv", "d")):
            path = round_dir / name
            if not path.exists():
                continue
            with path.open(newline="", encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
            rows.sort(key=lambda r: float(r[col]))
            print(f"  {name} ({len(rows)} rows, {col} ascending, first 10):")
            for row in rows[:10]:
                chosen = " *" if row.get("chosen") == "1" else ""
                print(f"    {row['id']}  {float(row[col]):.6f}{chosen}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adose", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="source-only training; saves a checkpoint")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="full active adaptation loop")
    _add_common(p)
    p.add_argument("--strategy", default=None,
                   choices=("adose", "random", "entropy", "lus-only", "mdc-only"))
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="evaluate a saved model on the test split")
    _add_common(p)
    p.add_argument("--model", required=True, help="model directory (model.bin + model_card.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-selection", help="print per-round selection tables")
    p.add_argument("--run", required=True, help="directory of a finished run")
    p.set_defaults(func=cmd_inspect_selection)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except AdoseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failures also exit 1, with the type named
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
