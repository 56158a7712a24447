"""Synthetic multi-domain two-view benchmark generator.

Samples live around content-topic clusters shared by both views. Real items
draw text and image from the same topic; fakes realize one of three deception
patterns: an off-cluster anomaly in the text view (a), the same in the visual
view (b), or a topic mismatch between the two views (c). Pattern (c) leaves
both marginals looking real, so only joint (cross-modal) evidence detects it.
Each domain adds its own mean shift to both views; the backbone probability
vector hv is a softmax over distances to the visual cluster centers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DatasetError
from .records import FAKE, REAL, Dims, DomainSet, Oracle, SampleRecord

PATTERNS = ("text_anomaly", "visual_anomaly", "cross_mismatch")

_SPEC_KEYS = {
    "name", "text_dim", "visual_dim", "n_topics", "n_source_domains",
    "samples_per_domain", "fake_fraction", "pattern_mix", "cluster_separation",
    "anomaly_offset", "noise_sigma", "domain_shift", "target_shift",
    "hv_temperature", "orthogonal_shifts", "target_anomaly_rotation",
}


@dataclass
class SynthSpec:
    """Generator parameters; every field has a documented default."""

    name: str = "synth"
    text_dim: int = 24
    visual_dim: int = 24
    n_topics: int = 2
    n_source_domains: int = 3
    samples_per_domain: list[int] = field(default_factory=lambda: [200, 200, 200, 700])
    fake_fraction: list[float] = field(default_factory=lambda: [0.5, 0.5, 0.5, 0.5])
    pattern_mix: list[dict[str, float]] = field(
        default_factory=lambda: [{"text_anomaly": 0.4, "visual_anomaly": 0.4, "cross_mismatch": 0.2}] * 4
    )
    cluster_separation: float = 3.0
    anomaly_offset: float = 3.0
    noise_sigma: float = 1.0
    domain_shift: float = 1.0
    target_shift: float = 2.0
    hv_temperature: float = 1.0
    # keep domain shifts orthogonal to the class-evidence directions, so the
    # shift is a pure nuisance rather than accidentally moving class clusters
    orthogonal_shifts: bool = True
    # 0 reuses the source anomaly directions in the target; 1 rotates them a
    # full quarter turn into fresh directions (a new deception style)
    target_anomaly_rotation: float = 0.0

    def __post_init__(self):
        n = self.n_source_domains + 1
        if isinstance(self.samples_per_domain, int):
            self.samples_per_domain = [self.samples_per_domain] * n
        if isinstance(self.fake_fraction, (int, float)):
            self.fake_fraction = [float(self.fake_fraction)] * n
        if isinstance(self.pattern_mix, dict):
            self.pattern_mix = [dict(self.pattern_mix)] * n
        self.validate()

    def validate(self) -> None:
        n = self.n_source_domains + 1
        if self.n_source_domains < 1:
            raise DatasetError("need at least one source domain")
        if self.n_topics < 2:
            raise DatasetError("need at least two content topics")
        if self.text_dim < 1 or self.visual_dim < 1:
            raise DatasetError("view dimensions must be positive")
        if len(self.samples_per_domain) != n:
            raise DatasetError(f"samples_per_domain must list {n} counts")
        if any(c < 1 for c in self.samples_per_domain):
            raise DatasetError("every domain needs at least one sample")
        if len(self.fake_fraction) != n or not all(0 <= f <= 1 for f in self.fake_fraction):
            raise DatasetError(f"fake_fraction must list {n} values in [0, 1]")
        if self.noise_sigma <= 0:
            raise DatasetError("noise_sigma must be positive")
        if self.hv_temperature <= 0:
            raise DatasetError("hv_temperature must be positive")
        if len(self.pattern_mix) != n:
            raise DatasetError(f"pattern_mix must list {n} entries")
        for mix in self.pattern_mix:
            if set(mix) - set(PATTERNS):
                raise DatasetError(f"unknown pattern keys {sorted(set(mix) - set(PATTERNS))}")
            total = sum(mix.get(p, 0.0) for p in PATTERNS)
            if abs(total - 1.0) > 1e-9 or any(mix.get(p, 0.0) < 0 for p in PATTERNS):
                raise DatasetError("each pattern_mix entry must be nonnegative and sum to 1")
        if not 0.0 <= self.target_anomaly_rotation <= 1.0:
            raise DatasetError("target_anomaly_rotation must lie in [0, 1]")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthSpec":
        unknown = set(obj) - _SPEC_KEYS
        if unknown:
            raise DatasetError(f"synth spec has unknown keys {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "text_dim": self.text_dim,
            "visual_dim": self.visual_dim,
            "n_topics": self.n_topics,
            "n_source_domains": self.n_source_domains,
            "samples_per_domain": list(self.samples_per_domain),
            "fake_fraction": list(self.fake_fraction),
            "pattern_mix": [dict(m) for m in self.pattern_mix],
            "cluster_separation": self.cluster_separation,
            "anomaly_offset": self.anomaly_offset,
            "noise_sigma": self.noise_sigma,
            "domain_shift": self.domain_shift,
            "target_shift": self.target_shift,
            "hv_temperature": self.hv_temperature,
            "orthogonal_shifts": self.orthogonal_shifts,
            "target_anomaly_rotation": self.target_anomaly_rotation,
        }


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _unit_orthogonal_to(rng: np.random.Generator, dim: int, basis: list[np.ndarray]) -> np.ndarray:
    """A random unit vector with the span of ``basis`` projected out."""
    v = rng.normal(size=dim)
    for b in basis:
        nb = np.linalg.norm(b)
        if nb == 0:
            continue
        b = b / nb
        v -= (v @ b) * b
    norm = np.linalg.norm(v)
    if norm < 1e-9:  # basis nearly fills the space; fall back to a raw draw
        return _unit(rng, dim)
    return v / norm


def _rotate_toward(v: np.ndarray, target: np.ndarray, fraction: float) -> np.ndarray:
    """Rotate ``v`` toward an orthogonal unit vector by fraction of 90 degrees."""
    if fraction == 0.0:
        return v.copy()
    angle = fraction * np.pi / 2
    return np.cos(angle) * v + np.sin(angle) * target * np.linalg.norm(v)


def generate(spec: SynthSpec, seed: int) -> DomainSet:
    """Produce a reproducible DomainSet; generative parameters land in meta."""
    spec.validate()
    rng = np.random.default_rng(seed)
    n_domains = spec.n_source_domains + 1

    topic_t = np.stack([spec.cluster_separation * _unit(rng, spec.text_dim) for _ in range(spec.n_topics)])
    topic_v = np.stack([spec.cluster_separation * _unit(rng, spec.visual_dim) for _ in range(spec.n_topics)])
    anomaly_t = spec.anomaly_offset * _unit(rng, spec.text_dim)
    anomaly_v = spec.anomaly_offset * _unit(rng, spec.visual_dim)

    evidence_t = [*topic_t, anomaly_t]
    evidence_v = [*topic_v, anomaly_v]
    shift_t, shift_v = [], []
    for d in range(n_domains):
        scale = spec.target_shift if d == n_domains - 1 else spec.domain_shift
        if spec.orthogonal_shifts:
            shift_t.append(scale * _unit_orthogonal_to(rng, spec.text_dim, evidence_t))
            shift_v.append(scale * _unit_orthogonal_to(rng, spec.visual_dim, evidence_v))
        else:
            shift_t.append(scale * _unit(rng, spec.text_dim))
            shift_v.append(scale * _unit(rng, spec.visual_dim))
    shift_t, shift_v = np.stack(shift_t), np.stack(shift_v)

    # the target's deception style may point in new directions
    rot_t = _unit_orthogonal_to(rng, spec.text_dim, evidence_t + [s for s in shift_t])
    rot_v = _unit_orthogonal_to(rng, spec.visual_dim, evidence_v + [s for s in shift_v])
    target_anomaly_t = _rotate_toward(anomaly_t, rot_t, spec.target_anomaly_rotation)
    target_anomaly_v = _rotate_toward(anomaly_v, rot_v, spec.target_anomaly_rotation)

    # hv reference centers: per-topic real clusters then their anomalous twins
    hv_centers = np.concatenate([topic_v, topic_v + anomaly_v], axis=0)

    sources: list[list[SampleRecord]] = []
    target: list[SampleRecord] = []
    for d in range(n_domains):
        records = []
        mix = spec.pattern_mix[d]
        probs = np.array([mix.get(p, 0.0) for p in PATTERNS])
        for i in range(spec.samples_per_domain[d]):
            label = FAKE if rng.random() < spec.fake_fraction[d] else REAL
            topic = int(rng.integers(spec.n_topics))
            mu_t = topic_t[topic].copy()
            mu_v = topic_v[topic].copy()
            is_target = d == n_domains - 1
            a_t = target_anomaly_t if is_target else anomaly_t
            a_v = target_anomaly_v if is_target else anomaly_v
            if label == FAKE:
                pattern = PATTERNS[int(rng.choice(len(PATTERNS), p=probs))]
                if pattern == "text_anomaly":
                    mu_t += a_t
                elif pattern == "visual_anomaly":
                    mu_v += a_v
                else:
                    other = int((topic + 1 + rng.integers(spec.n_topics - 1)) % spec.n_topics)
                    mu_v = topic_v[other].copy()
            text = mu_t + shift_t[d] + rng.normal(0.0, spec.noise_sigma, size=spec.text_dim)
            visual = mu_v + shift_v[d] + rng.normal(0.0, spec.noise_sigma, size=spec.visual_dim)

            d2 = ((hv_centers - visual) ** 2).sum(axis=1)
            logits = -d2 / (2.0 * spec.hv_temperature * spec.noise_sigma**2)
            logits -= logits.max()
            hv = np.exp(logits)
            hv /= hv.sum()

            prefix = "t" if d == n_domains - 1 else f"s{d}"
            records.append(
                SampleRecord(
                    id=f"{prefix}_{i:05d}",
                    domain_id=d,
                    text_raw=text.astype(np.float32),
                    visual_raw=visual.astype(np.float32),
                    hv=hv.astype(np.float32),
                    label=int(label),
                )
            )
        if d == n_domains - 1:
            target = records
        else:
            sources.append(records)

    oracle = Oracle({r.id: r.label for r in target})
    for rec in target:
        rec.label = None

    meta = {
        "generator": "synth",
        "seed": int(seed),
        "spec": spec.to_dict(),
        "topic_centers_text": topic_t.tolist(),
        "topic_centers_visual": topic_v.tolist(),
        "anomaly_text": anomaly_t.tolist(),
        "anomaly_visual": anomaly_v.tolist(),
        "target_anomaly_text": target_anomaly_t.tolist(),
        "target_anomaly_visual": target_anomaly_v.tolist(),
        "domain_shift_text": shift_t.tolist(),
        "domain_shift_visual": shift_v.tolist(),
    }
    return DomainSet(
        name=spec.name,
        dims=Dims(text=spec.text_dim, visual=spec.visual_dim, hv=2 * spec.n_topics),
        sources=sources,
        target_unlabeled=target,
        oracle=oracle,
        meta=meta,
    )
