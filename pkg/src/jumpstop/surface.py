from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SolverGrid


@dataclass(eq=False)
class ValueSurface:
    """Values on every (time level, node) with the optimising control and stop flags.

    ``values``, ``argopt`` and ``stop`` have shape (nt + 1, n_nodes).  The
    last time level holds the terminal profile, ``argopt`` is -1 there and
    ``stop`` is True.
    """

    grid: SolverGrid
    values: np.ndarray
    argopt: np.ndarray
    stop: np.ndarray
    kind: str = ""
    source: str = "solver"

    def at(self, t: float, x) -> float:
        """Interpolated value at a grid time and arbitrary state."""
        k = self.grid.time_index(t)
        return float(self.grid.interpolate(self.values[k], np.atleast_2d(np.asarray(x, dtype=float)).reshape(1, -1))[0])

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]

    def slice_on(self, coarse: SolverGrid) -> np.ndarray:
        """Restrict to the time levels and nodes of a coarser grid nested in this one."""
        g = self.grid
        ft = np.rint((coarse.times - g.t0) / g.dt).astype(int)
        if np.any(np.abs(g.times[ft] - coarse.times) > 1e-9):
            raise ValueError("coarse time levels are not nested")
        nodes = g.nearest_node(coarse.nodes)
        if np.any(np.abs(g.nodes[nodes] - coarse.nodes) > 1e-9):
            raise ValueError("coarse nodes are not nested")
        return self.values[np.ix_(ft, nodes)]


@dataclass(eq=False)
class PolicyField:
    """Feedback map (t, x) -> (control index, stop?) read off a value surface at the nearest node."""

    grid: SolverGrid
    control: np.ndarray  # (nt + 1, n_nodes)
    stop: np.ndarray

    def __call__(self, t: float, x) -> tuple[int, bool]:
        k = self.grid.time_index(t)
        node = int(self.grid.nearest_node(np.atleast_2d(np.asarray(x, dtype=float)))[0])
        return int(self.control[k, node]), bool(self.stop[k, node])

    def lookup(self, k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised lookup at time level k for states x of shape (n, d)."""
        nodes = self.grid.nearest_node(x)
        return self.control[k, nodes], self.stop[k, nodes]


def extract_policy(surface: ValueSurface) -> PolicyField:
    control = surface.argopt.copy()
    # terminal level carries no control; reuse the previous level's choice
    control[-1] = control[-2] if control.shape[0] > 1 else 0
    control[control < 0] = 0
    return PolicyField(surface.grid, control, surface.stop.copy())


def sup_gap(a: ValueSurface, b: ValueSurface) -> float:
    if a.values.shape != b.values.shape:
        raise ValueError("surfaces live on different grids")
    return float(np.max(np.abs(a.values - b.values)))
