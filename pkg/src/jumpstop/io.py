"""CSV and JSON artifacts.  Every writer is deterministic: fixed row order and float formatting."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .grid import SolverGrid
from .surface import ValueSurface

FLOAT_FMT = ".17g"


def fmt(v: float) -> str:
    return format(float(v), FLOAT_FMT)


def _coord_names(d: int) -> list[str]:
    return [f"x{i + 1}" for i in range(d)]


def surface_csv(surface: ValueSurface) -> str:
    """Rows are time-major, nodes in lexicographic order."""
    g = surface.grid
    header = ["t", *_coord_names(g.d), "value", "control_index", "stop"]
    oracle = surface.source == "oracle"
    if oracle:
        header.append("source")
    lines = [",".join(header)]
    coords = [[fmt(v) for v in row] for row in g.nodes]
    for k, t in enumerate(g.times):
        ts = fmt(t)
        vals, arg, stop = surface.values[k], surface.argopt[k], surface.stop[k]
        for i in range(g.n_nodes):
            row = [ts, *coords[i], fmt(vals[i]), str(int(arg[i])), "1" if stop[i] else "0"]
            if oracle:
                row.append("oracle")
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)
    return path


@dataclass
class SurfaceTable:
    """A surface as read back from CSV: one row per (time, node)."""

    t: np.ndarray
    x: np.ndarray
    value: np.ndarray
    control_index: np.ndarray
    stop: np.ndarray
    source: str

    def grid(self) -> SolverGrid:
        ts = np.unique(self.t)
        d = self.x.shape[1]
        axes = [np.unique(self.x[:, a]) for a in range(d)]
        return SolverGrid(float(ts[-1]), len(ts) - 1, tuple(a[0] for a in axes), tuple(a[-1] for a in axes),
                          tuple(len(a) - 1 for a in axes), t0=float(ts[0]))

    def to_surface(self) -> ValueSurface:
        grid = self.grid()
        shape = (grid.nt + 1, grid.n_nodes)
        return ValueSurface(grid, self.value.reshape(shape), self.control_index.reshape(shape),
                            self.stop.reshape(shape), source=self.source)


def read_surface_csv(source: str | Path | Iterable[str]) -> SurfaceTable:
    if isinstance(source, (str, Path)):
        with open(source, newline="") as f:
            rows = list(csv.reader(f))
    else:
        rows = list(csv.reader(source))
    header, body = rows[0], [r for r in rows[1:] if r]
    xcols = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    col = {h: i for i, h in enumerate(header)}
    for need in ("t", "value", "control_index", "stop"):
        if need not in col:
            raise ValueError(f"surface CSV lacks column {need!r}")
    arr = lambda name, typ=float: np.array([typ(r[col[name]]) for r in body])
    x = np.array([[float(r[i]) for i in xcols] for r in body]).reshape(len(body), len(xcols))
    source_tag = body[0][col["source"]] if "source" in col and body else "solver"
    return SurfaceTable(arr("t"), x, arr("value"), arr("control_index", int), arr("stop", int).astype(bool), source_tag)


def profile_csv(grid: SolverGrid, g: np.ndarray, ghat: np.ndarray) -> str:
    lines = [",".join([*_coord_names(grid.d), "g", "ghat"])]
    for x, a, b in zip(grid.nodes, g, ghat):
        lines.append(",".join([*(fmt(v) for v in x), fmt(a), fmt(b)]))
    return "\n".join(lines) + "\n"


def paths_csv(paths, model) -> str:
    """``path_id,t,x1..xd,y,jump_mark``; y and jump_mark are empty when absent."""
    lines = [",".join(["path_id", "t", *_coord_names(model.dimension), "y", "jump_mark"])]
    marks = model.marks.mark
    for pid, p in enumerate(paths):
        for k, t in enumerate(p.times):
            y = "" if p.Y is None else fmt(p.Y[k])
            a = p.jump_atom[k]
            jm = str(int(marks[a])) if a >= 0 else ""
            lines.append(",".join([str(pid), fmt(t), *(fmt(v) for v in p.X[k]), y, jm]))
    return "\n".join(lines) + "\n"


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"
