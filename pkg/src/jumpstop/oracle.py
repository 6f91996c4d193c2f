"""Controlled Markov chain on the solver grid, solved by exhaustive backward induction.

The chain is built independently of the PIDE stencil: transition matrices
are assembled per control as sparse matrices, drift uses central
differences wherever the diffusion is strong enough to keep probabilities
nonnegative (falling back to upwinding elsewhere), and jumps branch to
the interpolation nodes of the landing point with probability
``weight * dt * interpolation weight``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import CFLError, SolverGrid
from .model import ControlledJumpModel, normalize_kind
from .surface import ValueSurface

PROB_TOL = 1e-12


def _shift_index(grid: SolverGrid, offset) -> np.ndarray:
    idx = np.indices(grid.shape).reshape(grid.d, -1)
    shifted = np.clip(idx + np.asarray(offset)[:, None], 0, np.asarray(grid.nx)[:, None])
    return np.ravel_multi_index(tuple(shifted), grid.shape)


def _transition_matrix(model: ControlledJumpModel, grid: SolverGrid, ci: int, t: float) -> sp.csr_matrix:
    x = grid.nodes
    n, d = x.shape
    h = np.asarray(grid.dx)
    dt = grid.dt
    mu = model.drift(t, x, ci)
    sig = model.vol(t, x, ci)
    a = sig @ np.swapaxes(sig, 1, 2)
    rows, cols, probs = [], [], []
    here = np.arange(n)

    def branch(target, p):
        rows.append(here)
        cols.append(target)
        probs.append(p)

    for i in range(d):
        e = np.zeros(d, dtype=int)
        e[i] = 1
        cross = sum(np.abs(a[:, i, j]) / (h[i] * h[j]) for j in range(d) if j != i)
        diff = dt * (a[:, i, i] / h[i] ** 2 - cross) / 2
        central = diff >= dt * np.abs(mu[:, i]) / (2 * h[i])
        up = np.where(central, diff + dt * mu[:, i] / (2 * h[i]), diff + dt * np.maximum(mu[:, i], 0) / h[i])
        down = np.where(central, diff - dt * mu[:, i] / (2 * h[i]), diff + dt * np.maximum(-mu[:, i], 0) / h[i])
        branch(_shift_index(grid, e), up)
        branch(_shift_index(grid, -e), down)
        for j in range(i + 1, d):
            c = dt * a[:, i, j] / (2 * h[i] * h[j])
            ej = np.zeros(d, dtype=int)
            ej[j] = 1
            for s, p in ((e + ej, np.maximum(c, 0)), (-e - ej, np.maximum(c, 0)),
                         (e - ej, np.maximum(-c, 0)), (-e + ej, np.maximum(-c, 0))):
                branch(_shift_index(grid, s), p)
    if model.marks.n_atoms:
        beta = model.jump_sizes(t, x, ci)
        for k, w in enumerate(model.marks.weight):
            idx, wts = grid.interp_stencil(x + beta[:, k, :])
            for c in range(idx.shape[1]):
                branch(idx[:, c], w * dt * wts[:, c])
    moved = np.sum(probs, axis=0) if probs else np.zeros(n)
    branch(here, 1.0 - moved)
    p = np.concatenate(probs)
    if np.any(p < -PROB_TOL):
        raise CFLError(f"negative transition probability {p.min():.3e} for control {ci}: time step too large")
    P = sp.csr_matrix((np.maximum(p, 0.0), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    P.sum_duplicates()
    P.eliminate_zeros()
    return P


@dataclass(eq=False)
class ChainKernel:
    """Transition matrices ``P[level][control]``; a single level when the model is time-homogeneous."""

    grid: SolverGrid
    matrices: list[list[sp.csr_matrix]]

    def P(self, k: int, ci: int) -> sp.csr_matrix:
        return self.matrices[0 if len(self.matrices) == 1 else k][ci]

    @property
    def n_controls(self) -> int:
        return len(self.matrices[0])

    def row(self, k: int, ci: int, node: int) -> tuple[np.ndarray, np.ndarray]:
        """(successor nodes, probabilities) of one node."""
        P = self.P(k, ci)
        s, e = P.indptr[node], P.indptr[node + 1]
        return P.indices[s:e].copy(), P.data[s:e].copy()


def build_chain(model: ControlledJumpModel, grid: SolverGrid) -> ChainKernel:
    if grid.d != model.dimension:
        raise ValueError("grid dimension does not match the model")
    levels = [grid.t0] if model.time_homogeneous else list(grid.times[:-1])
    mats = [[_transition_matrix(model, grid, ci, t) for ci in range(model.n_controls)] for t in levels]
    return ChainKernel(grid, mats)


@dataclass
class ConsistencyReport:
    max_mean_error: float  # |E[dX] - (mu + sum beta w) dt| over interior nodes
    max_variance_defect: float  # |Cov[dX] - sigma sigma^T dt - jump second moment dt| over interior nodes
    max_row_sum_error: float
    n_interior: int


def check_consistency(model: ControlledJumpModel, kernel: ChainKernel, k: int = 0) -> ConsistencyReport:
    """Compare one-step moments with the model on nodes whose stencil stays inside the box."""
    grid = kernel.grid
    x = grid.nodes
    t = grid.times[k]
    dt = grid.dt
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    h = np.asarray(grid.dx)
    inside = np.all((x - h >= lo - 1e-12) & (x + h <= hi + 1e-12), axis=1)
    mean_err = var_err = row_err = 0.0
    for ci in range(kernel.n_controls):
        P = kernel.P(k, ci)
        row_err = max(row_err, float(np.max(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0))))
        mean_target = model.drift(t, x, ci) * dt
        sig = model.vol(t, x, ci)
        cov_target = sig @ np.swapaxes(sig, 1, 2) * dt
        if model.marks.n_atoms:
            beta = model.jump_sizes(t, x, ci)
            w = model.marks.weight
            mean_target = mean_target + np.einsum("nkd,k->nd", beta, w) * dt
            cov_target = cov_target + np.einsum("nki,nkj,k->nij", beta, beta, w) * dt
            land = x[:, None, :] + beta
            inside &= np.all((land >= lo - 1e-12) & (land <= hi + 1e-12), axis=(1, 2))
        m1 = P @ x - x
        m2 = np.stack([np.stack([P @ (x[:, i] * x[:, j]) for j in range(grid.d)], axis=1)
                       for i in range(grid.d)], axis=1)
        cov = m2 - (x[:, :, None] * x[:, None, :]) - x[:, :, None] * m1[:, None, :] - m1[:, :, None] * x[:, None, :]
        cov = cov - m1[:, :, None] * m1[:, None, :]
        if inside.any():
            mean_err = max(mean_err, float(np.max(np.abs(m1 - mean_target)[inside])))
            var_err = max(var_err, float(np.max(np.abs(cov - cov_target)[inside])))
    return ConsistencyReport(mean_err, var_err, row_err, int(inside.sum()))


def backward_induction(matrices, g: np.ndarray, terminal: np.ndarray, n_steps: int, kind: str = "zero_sum"):
    """V_k = max(g, opt_u P_u V_{k+1}) for explicit matrices.

    ``matrices`` is a list over controls (time-homogeneous) or a callable
    ``k -> list``.  Returns (values, argopt, stop) with the terminal level last.
    """
    kind = normalize_kind(kind)
    pick = np.argmin if kind == "zero_sum" else np.argmax
    get = matrices if callable(matrices) else (lambda k: matrices)
    n = len(g)
    values = np.empty((n_steps + 1, n))
    argopt = np.full((n_steps + 1, n), -1, dtype=np.int32)
    stop = np.ones((n_steps + 1, n), dtype=bool)
    V = np.asarray(terminal, dtype=float).copy()
    values[n_steps] = V
    cols = np.arange(n)
    for k in range(n_steps - 1, -1, -1):
        cont_all = np.stack([P @ V for P in get(k)])
        best = pick(cont_all, axis=0)
        cont = cont_all[best, cols]
        stop[k] = g >= cont
        V = np.maximum(g, cont)
        values[k] = V
        argopt[k] = best
    return values, argopt, stop


def oracle_value(model: ControlledJumpModel, kind: str, grid: SolverGrid, kernel: ChainKernel | None = None,
                 terminal: np.ndarray | None = None) -> ValueSurface:
    kind = normalize_kind(kind)
    kernel = kernel or build_chain(model, grid)
    g = model.payoff(grid.nodes)
    term = g if terminal is None else terminal
    vals, arg, stop = backward_induction(lambda k: [kernel.P(k, c) for c in range(kernel.n_controls)],
                                         g, term, grid.nt, kind)
    return ValueSurface(grid, vals, arg, stop, kind=kind, source="oracle")


def snell_value(model: ControlledJumpModel, grid: SolverGrid, control_index: int,
                kernel: ChainKernel | None = None) -> ValueSurface:
    """Discrete Snell envelope of g under one fixed control."""
    if not 0 <= control_index < model.n_controls:
        raise IndexError(f"control index {control_index} out of range")
    kernel = kernel or build_chain(model, grid)
    g = model.payoff(grid.nodes)
    vals, arg, stop = backward_induction(lambda k: [kernel.P(k, control_index)], g, g, grid.nt)
    arg[arg >= 0] = control_index
    return ValueSurface(grid, vals, arg, stop, kind="snell", source="oracle")


def sample_chain_paths(kernel: ChainKernel, surface: ValueSurface, start_node: int, n_paths: int,
                       seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Run the chain from ``start_node`` under the surface's argopt until its stop flag.

    Returns ``(nodes, alive)`` of shape (nt + 1, n_paths); ``alive[k]`` is
    False once the path has stopped (the node is then frozen).
    """
    rng = np.random.default_rng(seed)
    nt = kernel.grid.nt
    nodes = np.empty((nt + 1, n_paths), dtype=np.int64)
    alive = np.zeros((nt + 1, n_paths), dtype=bool)
    cur = np.full(n_paths, start_node, dtype=np.int64)
    live = np.ones(n_paths, dtype=bool)
    keys = {}
    for k in range(nt + 1):
        live &= ~surface.stop[k, cur]
        nodes[k] = cur
        alive[k] = live
        if k == nt or not live.any():
            nodes[k + 1:] = cur
            break
        ctrl = surface.argopt[k, cur]
        nxt = cur.copy()
        for c in np.unique(ctrl[live]):
            sel = live & (ctrl == c)
            P = kernel.P(k, int(c))
            key = keys.get((id(P), int(c)))
            if key is None:
                counts = np.diff(P.indptr)
                row_of = np.repeat(np.arange(P.shape[0]), counts)
                cs = np.concatenate([[0.0], np.cumsum(P.data)])
                csum = cs[1:] - np.repeat(cs[P.indptr[:-1]], counts)  # cumulative probability within each row
                key = row_of + np.minimum(csum, 1.0)
                keys[(id(P), int(c))] = key
            r = cur[sel]
            u = rng.random(sel.sum())
            pos = np.searchsorted(key, r + u, side="right")
            pos = np.clip(pos, P.indptr[r], P.indptr[r + 1] - 1)
            nxt[sel] = P.indices[pos]
        cur = nxt
    return nodes, alive
