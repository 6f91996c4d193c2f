"""Explicit monotone scheme for the obstacle PIDEs of the two games.

Zero-sum:     min{V - g, -V_t + H V} = 0,  H = sup_u(-L^u),  i.e. V_t + inf_u L^u V = 0 off the obstacle.
Cooperative:  min{V - g, -V_t + F V} = 0,  F = inf_u(-L^u),  i.e. V_t + sup_u L^u V = 0 off the obstacle.

L^u is discretised with upwind first differences, centred second differences
(a Kushner-type stencil for cross terms) and exact atomic quadrature of the
jump term, with landing points interpolated multilinearly.  One time level is

    V_k = max(g, V_{k+1} + dt * opt_u L^u V_{k+1}),

which is a convex combination of neighbouring values whenever the CFL
certificate ``dt * max total rate <= 1`` holds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Any, Mapping

import numpy as np

from .envelopes import EnvelopePair
from .grid import CFLError, SolverGrid
from .model import ControlledJumpModel, normalize_kind
from .surface import ValueSurface

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class FaceliftError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


def neighbour_index(grid: SolverGrid, offset: tuple[int, ...]) -> np.ndarray:
    """Flat index of node + offset, clamped to the box (constant extrapolation)."""
    mesh = np.meshgrid(*[np.arange(s) for s in grid.shape], indexing="ij")
    flat = np.zeros(grid.n_nodes, dtype=np.int64)
    for a, o in enumerate(offset):
        i = np.clip(mesh[a].ravel() + o, 0, grid.nx[a])
        flat = flat * grid.shape[a] + i
    return flat


class _ControlOperator:
    """Discrete L^u on the grid for one control at one time."""

    def __init__(self, model: ControlledJumpModel, grid: SolverGrid, ci: int, t: float, nbr: dict):
        x = grid.nodes
        n, d = x.shape
        h = grid.dx
        mu = model.drift(t, x, ci)
        sig = model.vol(t, x, ci)
        a = np.einsum("nij,nkj->nik", sig, sig)
        self.terms: list[tuple[np.ndarray, np.ndarray]] = []
        total = np.zeros(n)
        for i in range(d):
            cross = sum(np.abs(a[:, i, j]) / (2 * h[i] * h[j]) for j in range(d) if j != i)
            base = a[:, i, i] / (2 * h[i] ** 2) - cross
            if np.any(base < -1e-12):
                raise SolverError("diffusion matrix not diagonally dominant: no monotone stencil on this grid")
            base = np.maximum(base, 0.0)
            for sign, drift in ((1, np.maximum(mu[:, i], 0.0)), (-1, np.maximum(-mu[:, i], 0.0))):
                off = tuple(sign if k == i else 0 for k in range(d))
                coef = base + drift / h[i]
                self.terms.append((nbr[off], coef))
                total += coef
            for j in range(i + 1, d):
                pos = np.maximum(a[:, i, j], 0.0) / (2 * h[i] * h[j])
                neg = np.maximum(-a[:, i, j], 0.0) / (2 * h[i] * h[j])
                for si, sj, coef in ((1, 1, pos), (-1, -1, pos), (1, -1, neg), (-1, 1, neg)):
                    off = tuple(si if k == i else sj if k == j else 0 for k in range(d))
                    self.terms.append((nbr[off], coef))
                    total += coef
        self.jumps = []
        if model.marks.n_atoms:
            beta = model.jump_sizes(t, x, ci)
            for k, w in enumerate(model.marks.weight):
                idx, wts = grid.interp_stencil(x + beta[:, k, :])
                self.jumps.append((idx, wts, float(w)))
                total += w
        self.total_rate = total

    def apply(self, V: np.ndarray) -> np.ndarray:
        out = np.zeros_like(V)
        for idx, coef in self.terms:
            out += coef * (V[idx] - V)
        for idx, wts, w in self.jumps:
            out += w * (np.sum(V[idx] * wts, axis=1) - V)
        return out


def _operators(model, grid, t, nbr):
    return [_ControlOperator(model, grid, ci, t, nbr) for ci in range(model.n_controls)]


def _neighbours(grid: SolverGrid) -> dict:
    return {off: neighbour_index(grid, off) for off in product((-1, 0, 1), repeat=grid.d)}


def cfl_number(model: ControlledJumpModel, grid: SolverGrid) -> float:
    """dt * max over nodes, controls and time levels of the total jump rate of the scheme."""
    nbr = _neighbours(grid)
    times = [grid.t0] if model.time_homogeneous else grid.times[:-1]
    worst = 0.0
    for t in times:
        for op in _operators(model, grid, t, nbr):
            worst = max(worst, float(op.total_rate.max()))
    return grid.dt * worst


# --------------------------------------------------------------------------
# terminal face-lift


@dataclass(frozen=True)
class AuxGSpec:
    """Auxiliary operator G of the terminal problem min{phi - g, G phi} = 0.

    Families:
      ``constant``  G phi = value (bounded controls; value > 0 gives phi = g)
      ``concave``   G phi = -scale * max_i D_ii phi (unbounded volatility)
      ``jump_reach`` G phi(x) = min over controls and charged atoms of phi(x) - phi(x + beta)
    """

    family: str = "constant"
    params: Mapping[str, Any] = None

    def __post_init__(self):
        if self.family not in ("constant", "concave", "jump_reach"):
            raise ValueError(f"unknown auxiliary G family {self.family!r}")
        object.__setattr__(self, "params", dict(self.params or {}))
        if self.family == "constant":
            self.params.setdefault("value", 1.0)
        if self.family == "concave":
            self.params.setdefault("scale", 1.0)
            if float(self.params["scale"]) <= 0:
                raise ValueError("concave G needs a positive scale")

    @classmethod
    def from_model(cls, model: ControlledJumpModel) -> "AuxGSpec":
        if model.aux_g is None:
            return cls()
        return cls(model.aux_g.get("family", "constant"), model.aux_g.get("params", {}))

    def _evaluator(self, model: ControlledJumpModel, grid: SolverGrid):
        if self.family == "constant":
            c = float(self.params["value"])
            return (lambda phi: np.full_like(phi, c)), 1.0
        if self.family == "concave":
            s = float(self.params["scale"])
            nbr = _neighbours(grid)
            pairs = []
            for a in range(grid.d):
                plus = tuple(1 if k == a else 0 for k in range(grid.d))
                minus = tuple(-1 if k == a else 0 for k in range(grid.d))
                pairs.append((nbr[plus], nbr[minus], grid.dx[a] ** 2))

            def G(phi):
                second = np.stack([(phi[p] - 2 * phi + phi[m]) / h2 for p, m, h2 in pairs])
                return -s * second.max(axis=0)

            return G, min(h2 for _, _, h2 in pairs) / (2 * s)
        # jump_reach
        stencils = []
        pos = np.flatnonzero(model.marks.weight > 0)
        for ci in range(model.n_controls):
            beta = model.jump_sizes(model.horizon, grid.nodes, ci)
            for k in pos:
                stencils.append(grid.interp_stencil(grid.nodes + beta[:, k, :]))

        def G(phi):
            if not stencils:
                return np.ones_like(phi)
            land = np.stack([np.sum(phi[idx] * w, axis=1) for idx, w in stencils])
            return (phi - land.max(axis=0))

        return G, 1.0


@dataclass
class FaceliftResult:
    profile: np.ndarray
    residual: float
    iterations: int


def facelift_terminal(model: ControlledJumpModel, grid: SolverGrid, gspec: AuxGSpec | None = None, *,
                      tol: float = 1e-10, max_iter: int = 200_000, damping: float = 0.9) -> FaceliftResult:
    """Solve min{phi - g, G phi} = 0 on the grid nodes by damped fixed-point iteration.

    The iteration ``phi <- max(g, phi - damping * tau * G phi)`` starts from g
    and is monotone, so the result dominates g and is monotone in g.
    """
    gspec = gspec or AuxGSpec.from_model(model)
    G, tau = gspec._evaluator(model, grid)
    g = model.payoff(grid.nodes)
    phi = g.copy()
    step = damping * tau
    residual = np.inf
    for it in range(max_iter + 1):
        Gphi = G(phi)
        residual = float(np.max(np.abs(np.minimum(phi - g, Gphi))))
        if not np.isfinite(residual):
            raise FaceliftError("non-finite residual in face-lift iteration", residual)
        if residual < tol:
            return FaceliftResult(phi, residual, it)
        phi = np.maximum(g, phi - step * Gphi)
    raise FaceliftError(f"face-lift did not converge in {max_iter} iterations (residual {residual:.3e})", residual)


# --------------------------------------------------------------------------
# the game solver


def solve_game(model: ControlledJumpModel, kind: str, grid: SolverGrid, *, facelift: bool | None = None,
               gspec: AuxGSpec | None = None, check_cfl: bool = True) -> ValueSurface:
    """Backward time-marching for the zero-sum or cooperative obstacle PIDE.

    ``facelift=None`` applies the face-lifted terminal datum only for the
    cooperative game of a model flagged ``controls.unbounded``.
    """
    kind = normalize_kind(kind)
    if grid.d != model.dimension:
        raise ValueError("grid dimension does not match the model")
    if facelift is None:
        facelift = kind == "cooperative" and model.controls.unbounded
    nbr = _neighbours(grid)
    x = grid.nodes
    n = grid.n_nodes
    g = model.payoff(x)
    terminal = facelift_terminal(model, grid, gspec).profile if facelift else g.copy()

    ops = _operators(model, grid, grid.t0, nbr) if model.time_homogeneous else None
    if check_cfl:
        cfl = cfl_number(model, grid)
        if cfl > 1.0 + 1e-12:
            raise CFLError(f"CFL certificate fails: dt * max rate = {cfl:.4f} > 1")

    N = grid.nt
    values = np.empty((N + 1, n))
    argopt = np.full((N + 1, n), -1, dtype=np.int32)
    stop = np.ones((N + 1, n), dtype=bool)
    values[N] = terminal
    V = terminal
    cols = np.arange(n)
    pick = np.argmin if kind == "zero_sum" else np.argmax
    dt = grid.dt
    for k in range(N - 1, -1, -1):
        if ops is None:
            step_ops = _operators(model, grid, grid.times[k], nbr)
        else:
            step_ops = ops
        with np.errstate(over="ignore", invalid="ignore"):
            L = np.stack([op.apply(V) for op in step_ops])
        best = pick(L, axis=0)
        with np.errstate(over="ignore", invalid="ignore"):
            cont = V + dt * L[best, cols]
        if not np.all(np.isfinite(cont)):
            bad = int(np.flatnonzero(~np.isfinite(cont))[0])
            raise SolverError(f"non-finite value at time level {k}, node {x[bad].tolist()}")
        stop[k] = g >= cont
        V = np.maximum(g, cont)
        values[k] = V
        argopt[k] = best
    return ValueSurface(grid, values, argopt, stop, kind=kind, source="solver")


# --------------------------------------------------------------------------
# a-priori bounds


@dataclass
class EnvelopeReport:
    ok: bool
    worst_upper_margin: float  # min over nodes of w+ - V
    worst_lower_margin: float  # min over nodes of V - w-
    violations: int

    def to_dict(self) -> dict:
        return {"ok": self.ok, "worst_upper_margin": self.worst_upper_margin,
                "worst_lower_margin": self.worst_lower_margin, "violations": self.violations}


def check_envelope_bounds(surface: ValueSurface, env: EnvelopePair) -> EnvelopeReport:
    t = surface.grid.times[:, None]
    up = env.upper(t) - surface.values
    low = surface.values - env.lower(t)
    violations = int(np.sum(up < 0) + np.sum(low < 0))
    return EnvelopeReport(violations == 0, float(up.min()), float(low.min()), violations)
