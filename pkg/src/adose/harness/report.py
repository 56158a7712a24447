"""Run artifacts: metrics CSV, per-round dumps, and the report JSON.

The report's metric sections (everything except ``environment``) are written
with sorted keys so identical runs produce byte-identical documents.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..lus import LdmTable
from ..mdc import DiversityScores
from ..objectives import LossBreakdown


class MetricsLog:
    """Append-only per-step loss log (CSV)."""

    HEADER = ("step", "l_efn", "l_cls", "l_adv", "l_ctr", "l_nego", "total")

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.step = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(self.HEADER)

    def append(self, breakdown: LossBreakdown) -> None:
        self.step += 1
        with self.path.open("a", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(
                (
                    self.step,
                    f"{breakdown.l_efn:.8f}",
                    f"{breakdown.l_cls:.8f}",
                    f"{breakdown.l_adv:.8f}",
                    f"{breakdown.l_ctr:.8f}",
                    f"{breakdown.l_nego:.8f}",
                    f"{breakdown.total:.8f}",
                )
            )


def write_ldm_csv(path: str | Path, table: LdmTable) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id", "l_e"))
        for sample_id, l_e in table.rows():
            writer.writerow((sample_id, f"{l_e:.8f}"))


def write_diversity_csv(path: str | Path, scores: DiversityScores, chosen: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chosen_set = set(chosen)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id", "d", "chosen"))
        for sample_id, d in scores.rows():
            writer.writerow((sample_id, f"{d:.8f}", int(sample_id in chosen_set)))


def write_predictions_csv(path: str | Path, rows: list[tuple[str, int, int, float]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id", "true", "pred", "p_fake"))
        for sample_id, true, pred, p_fake in rows:
            writer.writerow((sample_id, true, pred, f"{p_fake:.8f}"))


@dataclass
class RunReport:
    """Everything a run produces, ready for JSON serialization."""

    config: dict
    config_hash: str
    dataset: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)
    rounds: list[dict] = field(default_factory=list)
    final: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    incomplete: bool = False
    error: str | None = None

    def metric_sections(self) -> dict:
        """The deterministic portion of the report (no environment block)."""
        return {
            "schema_version": 1,
            "config": self.config,
            "config_hash": self.config_hash,
            "dataset": self.dataset,
            "budget": self.budget,
            "rounds": self.rounds,
            "final": self.final,
            "counters": self.counters,
            "incomplete": self.incomplete,
            "error": self.error,
        }

    def to_dict(self) -> dict:
        out = self.metric_sections()
        out["environment"] = {
            "created_unix": int(time.time()),
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        return out


def write_report(path: str | Path, report: RunReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def round_table(report: RunReport) -> str:
    """Human-readable per-round summary."""
    lines = [f"{'round':>5}  {'labeled':>7}  {'accuracy':>8}  {'f1_fake':>7}  {'f1_real':>7}  selected"]
    for entry in report.rounds:
        sel = entry.get("selected_ids", [])
        shown = ",".join(sel[:4]) + ("..." if len(sel) > 4 else "")
        lines.append(
            f"{entry['round']:>5}  {entry['n_labeled']:>7}  "
            f"{entry['accuracy']:>8.4f}  {entry['f1_fake']:>7.4f}  {entry['f1_real']:>7.4f}  {shown}"
        )
    return "\n".join(lines)
