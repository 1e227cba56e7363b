"""Snapshots, CSV series and equilibrium catalogs.

JSON floats use Python's shortest round-trip representation, so
``write -> read -> write`` reproduces the file byte for byte. CSV values
are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import State, TrajectoryRecord
from .equilibria import Equilibrium
from .spectral import DomainSpec, SpectralField

__all__ = [
    "SCHEMA_VERSION",
    "Snapshot",
    "save_snapshot",
    "load_snapshot",
    "write_csv",
    "read_csv",
    "trajectory_columns",
    "save_catalog",
    "load_catalog",
    "dump_json",
]

SCHEMA_VERSION = 1


def dump_json(obj, path) -> None:
    text = json.dumps(_jsonable(obj), indent=1, sort_keys=False, allow_nan=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class Snapshot:
    """Checkpoint of a run: config echo, state and the running dissipation integral."""

    config: dict
    t: float
    u_coeffs: np.ndarray
    v_coeffs: np.ndarray
    dissipation_integral: float = 0.0
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_state(cls, state: State, config: dict, dissipation_integral: float = 0.0) -> "Snapshot":
        return cls(dict(config), float(state.t), state.u.coeffs.copy(), state.v.coeffs.copy(), float(dissipation_integral))

    def state(self) -> State:
        d = DomainSpec(self.u_coeffs.ndim)
        return State(SpectralField(d, self.u_coeffs), SpectralField(d, self.v_coeffs), self.t)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": _jsonable(self.config),
            "t": self.t,
            "u_coeffs": self.u_coeffs.tolist(),
            "v_coeffs": self.v_coeffs.tolist(),
            "dissipation_integral": self.dissipation_integral,
        }

    def __eq__(self, other):
        return (
            isinstance(other, Snapshot)
            and self.schema_version == other.schema_version
            and self.config == other.config
            and self.t == other.t
            and self.dissipation_integral == other.dissipation_integral
            and self.u_coeffs.tobytes() == other.u_coeffs.tobytes()
            and self.v_coeffs.tobytes() == other.v_coeffs.tobytes()
            and self.u_coeffs.shape == other.u_coeffs.shape
        )

    __hash__ = None


def save_snapshot(snap: Snapshot, path) -> None:
    dump_json(snap.to_dict(), path)


def load_snapshot(path) -> Snapshot:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported snapshot schema version {version!r}")
    missing = {"config", "t", "u_coeffs", "v_coeffs", "dissipation_integral"} - set(data)
    if missing:
        raise ValueError(f"snapshot lacks fields {sorted(missing)}")
    return Snapshot(
        config=data["config"],
        t=float(data["t"]),
        u_coeffs=np.asarray(data["u_coeffs"], dtype=float),
        v_coeffs=np.asarray(data["v_coeffs"], dtype=float),
        dissipation_integral=float(data["dissipation_integral"]),
        schema_version=version,
    )


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------


def _fmt(x) -> str:
    return "%.17g" % float(x)


def trajectory_columns(rec: TrajectoryRecord, order: Sequence[str] | None = None) -> list[str]:
    """Diagnostic columns in declared order (``order`` first, then the rest as recorded)."""
    names = list(order or [])
    for k in rec.diagnostics:
        if k not in names:
            names.append(k)
    return [k for k in names if k in rec.diagnostics]


def write_csv(path, columns: dict, header: Sequence[str] | None = None, append: bool = False) -> None:
    """Write equally long columns; the first header entry should be ``t``."""
    header = list(columns) if header is None else list(header)
    data = [np.asarray(columns[h], dtype=float) for h in header]
    nrow = data[0].size if data else 0
    if any(c.size != nrow for c in data):
        raise ValueError("CSV columns differ in length")
    mode = "a" if append else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append:
            w.writerow(header)
        for i in range(nrow):
            w.writerow([_fmt(c[i]) for c in data])


def read_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [list(map(float, row)) for row in r]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}


# ----------------------------------------------------------------------------
# equilibrium catalogs
# ----------------------------------------------------------------------------


def save_catalog(equilibria: Sequence[Equilibrium], path, config: dict | None = None) -> None:
    data = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(config or {}),
        "equilibria": [e.to_dict() for e in equilibria],
    }
    dump_json(data, path)


def load_catalog(path) -> list[Equilibrium]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported catalog schema version {data.get('schema_version')!r}")
    out = []
    for item in data["equilibria"]:
        c = np.asarray(item["coeffs"], dtype=float)
        out.append(Equilibrium(SpectralField(DomainSpec(c.ndim), c), float(item["residual"]), str(item.get("seed", ""))))
    return out
