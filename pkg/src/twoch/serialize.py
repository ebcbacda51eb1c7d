"""Plain-text state files: one JSON header line, then tab-separated columns.

Floats are written with repr() so a read-back reproduces the arrays bit for
bit; the header carries the grid, any atomic parts of the energy measure,
and free-form metadata.  The format is line-oriented on purpose: it diffs,
greps, and version-controls cleanly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .eulerian import EnergyMeasure, EulerianState
from .grid import Grid
from .lagrangian import LagrangianState

__all__ = ["write_table", "read_table", "save_state", "load_state", "metric_report"]

FORMAT_NAME = "twoch-state"
FORMAT_VERSION = 1

_LAGRANGIAN_COLUMNS = ("xi", "y", "U", "H", "r", "yxi", "Uxi", "hxi")
_EULERIAN_COLUMNS = ("x", "u", "rho", "density")


def _grid_header(grid: Grid) -> dict:
    return {"min": grid.xi_min, "max": grid.xi_max, "n": grid.n}


def _grid_from_header(obj) -> Grid:
    try:
        return Grid(float(obj["min"]), float(obj["max"]), int(obj["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed grid header: {obj!r}") from exc


def write_table(path, kind: str, columns: dict, grid: Grid | None = None,
                atoms=(), meta: dict | None = None) -> Path:
    """Write named columns with a JSON header line describing them."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    n = arrays[0].size
    for name, arr in zip(names, arrays):
        if arr.shape != (n,):
            raise ConfigError(f"column {name!r} has shape {arr.shape}, expected ({n},)")
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "grid": _grid_header(grid) if grid is not None else None,
        "columns": names,
        "atoms": [[float(loc), float(mass)] for loc, mass in atoms],
        "meta": dict(meta or {}),
    }
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        fh.write("\t".join(names) + "\n")
        for i in range(n):
            fh.write("\t".join(repr(float(a[i])) for a in arrays) + "\n")
    return path


def read_table(path) -> tuple[dict, dict]:
    """Inverse of write_table: the header dict and a name -> array mapping."""
    path = Path(path)
    with open(path) as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: first line is not a JSON header") from exc
        if header.get("format") != FORMAT_NAME:
            raise ConfigError(f"{path}: not a {FORMAT_NAME} file")
        names = fh.readline().rstrip("\n").split("\t")
        if names != list(header.get("columns", [])):
            raise ConfigError(f"{path}: column line does not match header")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(names):
        raise ConfigError(f"{path}: ragged or empty data block")
    if header.get("grid") is not None:
        expected = _grid_from_header(header["grid"]).n
        if data.shape[0] != expected:
            raise ConfigError(
                f"{path}: data block has {data.shape[0]} rows, grid header says {expected}"
            )
    return header, {name: np.ascontiguousarray(data[:, j]) for j, name in enumerate(names)}


def save_state(path, state, meta: dict | None = None) -> Path:
    """Write a Lagrangian or Eulerian state to ``path``."""
    if isinstance(state, LagrangianState):
        cols = {
            "xi": state.grid.nodes,
            "y": state.y, "U": state.U, "H": state.H, "r": state.r,
            "yxi": state.yxi, "Uxi": state.Uxi, "hxi": state.hxi,
        }
        return write_table(path, "lagrangian", cols, state.grid, meta=meta)
    if isinstance(state, EulerianState):
        cols = {
            "x": state.grid.nodes,
            "u": state.u, "rho": state.rho, "density": state.mu.density,
        }
        return write_table(path, "eulerian", cols, state.grid,
                           atoms=state.mu.atoms, meta=meta)
    raise ConfigError(f"cannot serialize object of type {type(state).__name__}")


def metric_report(est) -> dict:
    """JSON-ready view of a distance estimate: bounds, witnesses, chain size.

    Witness relabelings are emitted as their knot arrays plus the grid, which
    is enough to reconstruct them; intermediate chain states are summarized
    by count rather than inlined, since each one is a full state.
    """
    def _relabeling(f):
        if f is None:
            return None
        return {"grid": _grid_header(f.grid),
                "knots": [float(v) for v in f.values]}

    return {
        "lower": float(est.lower),
        "upper": float(est.upper),
        "witness_f1": _relabeling(est.witness_f1),
        "witness_f2": _relabeling(est.witness_f2),
        "chain_states": len(est.chain),
    }


def load_state(path):
    """Read back a state written by save_state; the kind is in the header."""
    header, cols = read_table(path)
    grid = _grid_from_header(header["grid"])
    kind = header.get("kind")
    nodes_key = {"lagrangian": "xi", "eulerian": "x"}.get(kind)
    if nodes_key is None:
        raise ConfigError(f"{path}: unknown state kind {kind!r}")
    if not np.array_equal(cols[nodes_key], grid.nodes):
        raise ConfigError(f"{path}: node column disagrees with the grid header")
    if kind == "lagrangian":
        return LagrangianState(grid=grid, y=cols["y"], U=cols["U"], H=cols["H"],
                               r=cols["r"], yxi=cols["yxi"], Uxi=cols["Uxi"],
                               hxi=cols["hxi"])
    atoms = tuple((loc, mass) for loc, mass in header.get("atoms", []))
    mu = EnergyMeasure(grid=grid, density=cols["density"], atoms=atoms)
    return EulerianState(grid=grid, u=cols["u"], rho=cols["rho"], mu=mu)
