"""Manifest and record-file ingestion.

A dataset on disk is a manifest JSON plus one JSON-lines file per domain:

    manifest.json
        {"name": str,
         "dims": {"text": int, "visual": int, "hv": int},
         "domains": [{"id": int, "name": str, "role": "source"|"target",
                      "path": "relative/records.jsonl"}, ...],
         "meta": {...}}                      # optional, round-tripped verbatim

    records.jsonl — one object per line:
        {"id": str, "domain_id": int, "text_raw": [...], "visual_raw": [...],
         "hv": [...] | null, "label": 0 | 1}

Every record file must carry labels: source labels are training data, target
labels seed the simulated oracle and are hidden from the loaded DomainSet.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DatasetError
from .records import Dims, DomainSet, Oracle, SampleRecord

_MANIFEST_KEYS = {"name", "dims", "domains", "meta"}
_RECORD_KEYS = {"id", "domain_id", "text_raw", "visual_raw", "hv", "label"}


def _read_records(path: Path, domain_id: int, dims: Dims) -> list[SampleRecord]:
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({e})") from e
            unknown = set(obj) - _RECORD_KEYS
            if unknown:
                raise DatasetError(f"{path}:{lineno}: unknown record fields {sorted(unknown)}")
            for key in ("id", "domain_id", "text_raw", "visual_raw"):
                if key not in obj:
                    raise DatasetError(f"{path}:{lineno}: record missing field {key!r}")
            if obj.get("label") is None:
                raise DatasetError(
                    f"{path}:{lineno}: record {obj['id']!r} has no label "
                    "(target labels feed the simulated oracle)"
                )
            hv = obj.get("hv")
            rec = SampleRecord(
                id=str(obj["id"]),
                domain_id=int(obj["domain_id"]),
                text_raw=np.asarray(obj["text_raw"], dtype=np.float32),
                visual_raw=np.asarray(obj["visual_raw"], dtype=np.float32),
                hv=None if hv is None else np.asarray(hv, dtype=np.float32),
                label=int(obj["label"]),
            )
            if rec.domain_id != domain_id:
                raise DatasetError(
                    f"{path}:{lineno}: record {rec.id!r} has domain_id {rec.domain_id}, "
                    f"file belongs to domain {domain_id}"
                )
            rec.validate(dims.text, dims.visual, dims.hv if rec.hv is not None else 0)
            if dims.hv and rec.hv is None:
                raise DatasetError(f"{path}:{lineno}: record {rec.id!r} missing hv")
            records.append(rec)
    return records


def load_dataset(manifest_path: str | Path) -> DomainSet:
    """Load and fully validate a dataset; target labels go to the oracle."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"cannot read manifest {manifest_path}: {e}") from e
    unknown = set(manifest) - _MANIFEST_KEYS
    if unknown:
        raise DatasetError(f"manifest has unknown keys {sorted(unknown)}")
    for key in ("name", "dims", "domains"):
        if key not in manifest:
            raise DatasetError(f"manifest missing key {key!r}")
    dims = Dims(
        text=int(manifest["dims"]["text"]),
        visual=int(manifest["dims"]["visual"]),
        hv=int(manifest["dims"].get("hv", 0)),
    )

    domains = sorted(manifest["domains"], key=lambda d: d["id"])
    roles = [d["role"] for d in domains]
    if roles.count("target") != 1:
        raise DatasetError(f"manifest must declare exactly one target domain, found {roles.count('target')}")
    if [d["id"] for d in domains] != list(range(len(domains))):
        raise DatasetError("domain ids must be contiguous from 0")
    if roles[-1] != "target":
        raise DatasetError("the target domain must carry the highest domain id")

    base = manifest_path.parent
    sources: list[list[SampleRecord]] = []
    target: list[SampleRecord] = []
    for dom in domains:
        records = _read_records(base / dom["path"], int(dom["id"]), dims)
        if dom["role"] == "source":
            sources.append(records)
        else:
            target = records

    oracle = Oracle({r.id: r.label for r in target})
    for rec in target:
        rec.label = None
    return DomainSet(
        name=str(manifest["name"]),
        dims=dims,
        sources=sources,
        target_unlabeled=target,
        oracle=oracle,
        meta=manifest.get("meta"),
    )


def save_dataset(ds: DomainSet, out_dir: str | Path, name: str | None = None) -> Path:
    """Write a DomainSet (including hidden target labels) to ``out_dir``.

    Returns the manifest path. Annotated and unlabeled target records are
    merged back into one target file, so save -> load round-trips a freshly
    loaded dataset exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or ds.name
    domains = []
    for di, records in enumerate(ds.sources):
        fname = f"domain_{di}.jsonl"
        _write_records(out_dir / fname, records, None)
        domains.append({"id": di, "name": f"source_{di}", "role": "source", "path": fname})
    ti = ds.target_domain_id
    fname = f"domain_{ti}.jsonl"
    target_records = sorted(ds.target_unlabeled + ds.target_labeled, key=lambda r: r.id)
    _write_records(out_dir / fname, target_records, ds.oracle)
    domains.append({"id": ti, "name": "target", "role": "target", "path": fname})

    manifest = {
        "name": name,
        "dims": {"text": ds.dims.text, "visual": ds.dims.visual, "hv": ds.dims.hv},
        "domains": domains,
    }
    if ds.meta:
        manifest["meta"] = ds.meta
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path


def _write_records(path: Path, records: list[SampleRecord], oracle: Oracle | None) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            label = rec.label
            if label is None and oracle is not None:
                label = oracle._labels[rec.id]  # persisting, not revealing
            obj = {
                "id": rec.id,
                "domain_id": rec.domain_id,
                "text_raw": [float(v) for v in rec.text_raw],
                "visual_raw": [float(v) for v in rec.visual_raw],
                "hv": None if rec.hv is None else [float(v) for v in rec.hv],
                "label": label,
            }
            fh.write(json.dumps(obj) + "\n")
