"""Run directories: config snapshot, CSV tables, JSON summaries and the run manifest.

CSV cells are written with ``format(x, '.17g')`` so a rerun with the same
config and seed reproduces every table byte for byte.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .spectral_core import SpectralField, write_snapshot

__all__ = ["RunRecord", "RunDir", "fmt_cell", "jsonable"]


def fmt_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


@dataclass
class RunRecord:
    experiment: str
    config: dict
    version: str
    seed: int
    started: str = ""
    wall_clock_s: float = 0.0
    outputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    status: str = "completed"

    def to_dict(self) -> dict:
        return jsonable(asdict(self))


class RunDir:
    """One output directory; all writes are serialized through this object."""

    def __init__(self, path: str | Path, experiment: str, config: dict, seed: int, version: str):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.record = RunRecord(experiment, config, version, seed,
                                started=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
        self._t0 = time.perf_counter()

    def _add(self, name: str) -> Path:
        if name not in self.record.outputs:
            self.record.outputs.append(name)
        return self.path / name

    def write_config(self, name: str = "config.yaml") -> Path:
        p = self._add(name)
        snap = dict(self.record.config)
        snap["seed"] = self.record.seed
        p.write_text(yaml.safe_dump(jsonable(snap), sort_keys=True))
        return p

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        p = self._add(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt_cell(c) for c in r])
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self._add(name)
        p.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
        return p

    def write_snapshot(self, name: str, f: SpectralField) -> Path:
        p = self._add(name)
        write_snapshot(f, p)
        return p

    def finish(self, verdicts: dict, status: str = "completed") -> RunRecord:
        self.record.verdicts = verdicts
        self.record.status = status
        self.record.wall_clock_s = time.perf_counter() - self._t0
        (self.path / "manifest.json").write_text(json.dumps(self.record.to_dict(), indent=2, sort_keys=True) + "\n")
        return self.record
