"""Deterministic file formats: trajectory CSV, JSON reports and the run manifest.

Floats in CSV files are written with 17 significant digits and JSON floats use
the shortest repr that round-trips, so every stored value reloads bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .scheme import Trajectory

__all__ = [
    "TRAJECTORY_HEADER",
    "write_trajectory_csv",
    "trajectory_csv_text",
    "read_trajectory_csv",
    "dumps_json",
    "write_json",
    "RunManifest",
]

TRAJECTORY_HEADER = ("t", "field", "mode_index", "coefficient")
TRAJECTORY_FIELDS = ("mu", "phi", "S", "xi")


def _g17(v):
    return format(float(v), ".17g")


def trajectory_csv_text(traj):
    """One row per (step, field, mode); steps ascending, fields in ``mu, phi, S, xi`` order."""
    lines = [",".join(TRAJECTORY_HEADER)]
    for n in range(traj.n_states):
        t = _g17(traj.times[n])
        for name in TRAJECTORY_FIELDS:
            for j, c in enumerate(traj.field(name)[n], start=1):
                lines.append(f"{t},{name},{j},{_g17(c)}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trajectory_csv_text(traj))


def read_trajectory_csv(path, cfg):
    """Rebuild a :class:`Trajectory` for ``cfg`` from a CSV written by :func:`write_trajectory_csv`."""
    sizes = {"mu": cfg.op_A.basis.n_modes, "phi": cfg.op_B.basis.n_modes,
             "S": cfg.op_C.basis.n_modes, "xi": cfg.op_B.basis.n_modes}
    times, data = [], {k: [] for k in TRAJECTORY_FIELDS}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
            raise ConfigError(f"{path}: trajectory header must be {','.join(TRAJECTORY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ConfigError(f"{path}:{lineno}: expected 4 columns")
            t, name, j, c = float(row[0]), row[1], int(row[2]), float(row[3])
            if name not in data:
                raise ConfigError(f"{path}:{lineno}: unknown field {name!r}")
            if not times or times[-1] != t:
                times.append(t)
                for k in data:
                    data[k].append(np.full(sizes[k], np.nan))
            if not 1 <= j <= sizes[name]:
                raise ConfigError(f"{path}:{lineno}: mode index {j} out of range for {name}")
            data[name][-1][j - 1] = c
    arrays = {k: np.array(v).reshape(len(times), sizes[k]) for k, v in data.items()}
    if any(np.isnan(a).any() for a in arrays.values()):
        raise ConfigError(f"{path}: trajectory file is incomplete")
    if len(times) != cfg.n_steps + 1:
        raise ConfigError(f"{path}: {len(times)} time levels do not match the config ({cfg.n_steps + 1})")
    return Trajectory(cfg, np.array(times), arrays["mu"], arrays["phi"], arrays["S"], arrays["xi"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj):
    """Canonical JSON text; non-finite floats become the strings ``'nan'``, ``'inf'``."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))


@dataclass
class RunManifest:
    config_hash: str
    version: str
    command: str
    wall_clock_s: float = 0.0
    files: list = field(default_factory=list)
    assumptions: dict = field(default_factory=dict)

    def add(self, path):
        self.files.append(os.path.basename(path))

    def to_dict(self):
        return {"config_hash": self.config_hash, "version": self.version, "command": self.command,
                "wall_clock_s": self.wall_clock_s, "files": sorted(self.files),
                "assumptions": self.assumptions}
