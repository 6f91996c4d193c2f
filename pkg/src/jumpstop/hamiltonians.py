"""Pointwise operators of the game and target formulations.

All routines evaluate at a single point ``(t, x)`` (and ``y`` for target
quantities) against a ``TestFunction``.  Optimisation is over the finite
control grid; ties go to the lowest control index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import SolverGrid
from .model import ControlledJumpModel, as_points, normalize_kind

ScalarField = Callable[[float, np.ndarray], np.ndarray]


class TestFunction:
    """A scalar field phi(t, x) with time derivative, gradient and Hessian.

    Derivatives not supplied in closed form are taken by central differences
    with step ``step`` (per axis).  Callables receive ``x`` of shape (n, d)
    and return shape (n,) (gradient: (n, d), Hessian: (n, d, d)).
    """

    __test__ = False  # not a pytest class

    def __init__(self, value: ScalarField, d: int = 1, *, time_derivative: ScalarField | None = None,
                 gradient: Callable | None = None, hessian: Callable | None = None,
                 step: float | tuple[float, ...] = 1e-4, time_step: float = 1e-6):
        self._value = value
        self.d = d
        self._dt = time_derivative
        self._grad = gradient
        self._hess = hessian
        self.step = np.broadcast_to(np.asarray(step, dtype=float), (d,)).copy()
        self.time_step = time_step

    @classmethod
    def tabulated(cls, grid: SolverGrid, values: np.ndarray) -> "TestFunction":
        """Time-independent field from node values (multilinear, constant extrapolation)."""
        vals = np.asarray(values, dtype=float).reshape(grid.n_nodes)

        def value(t, x):
            return grid.interpolate(vals, x)

        phi = cls(value, grid.d, time_derivative=lambda t, x: np.zeros(x.shape[0]), step=grid.dx)
        phi.grid, phi.node_values = grid, vals
        return phi

    def __call__(self, t: float, x) -> np.ndarray:
        return np.asarray(self._value(t, as_points(x, self.d)), dtype=float)

    def time_derivative(self, t: float, x) -> np.ndarray:
        x = as_points(x, self.d)
        if self._dt is not None:
            out = np.asarray(self._dt(t, x), dtype=float)
        else:
            h = self.time_step
            out = (self(t + h, x) - self(t - h, x)) / (2 * h)
        return _finite(out, "time derivative")

    def gradient(self, t: float, x) -> np.ndarray:
        x = as_points(x, self.d)
        if self._grad is not None:
            return _finite(np.asarray(self._grad(t, x), dtype=float).reshape(x.shape), "gradient")
        out = np.empty_like(x)
        for a in range(self.d):
            e = np.zeros(self.d)
            e[a] = self.step[a]
            out[:, a] = (self(t, x + e) - self(t, x - e)) / (2 * self.step[a])
        return _finite(out, "gradient")

    def hessian(self, t: float, x) -> np.ndarray:
        x = as_points(x, self.d)
        if self._hess is not None:
            return _finite(np.asarray(self._hess(t, x), dtype=float).reshape(x.shape[0], self.d, self.d), "Hessian")
        n, d = x.shape
        out = np.empty((n, d, d))
        f0 = self(t, x)
        for a in range(d):
            ea = np.zeros(d)
            ea[a] = self.step[a]
            out[:, a, a] = (self(t, x + ea) - 2 * f0 + self(t, x - ea)) / self.step[a] ** 2
            for b in range(a + 1, d):
                eb = np.zeros(d)
                eb[b] = self.step[b]
                mixed = (self(t, x + ea + eb) - self(t, x + ea - eb) - self(t, x - ea + eb) + self(t, x - ea - eb))
                out[:, a, b] = out[:, b, a] = mixed / (4 * self.step[a] * self.step[b])
        return _finite(out, "Hessian")


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite {what} estimate")
    return arr


@dataclass(frozen=True)
class HamiltonianResult:
    """Optimised value over (a subset of) the control grid.

    ``value`` is -inf (sup over nothing) or +inf (inf over nothing) when no
    control is feasible; ``argopt`` is then None.
    """

    value: float
    argopt: int | None
    feasible_count: int


@dataclass(frozen=True)
class JumpOperators:
    e_values: np.ndarray  # support points of the summed mark measure
    J: np.ndarray  # (n_e, I)
    delta: np.ndarray  # (n_e,) min over marks
    pi: np.ndarray  # (n_e,) max over marks


def _point(model: ControlledJumpModel, x) -> np.ndarray:
    xp = as_points(x, model.dimension)
    if xp.shape[0] != 1:
        raise ValueError("expected a single state")
    return xp


def generator_apply(model: ControlledJumpModel, phi: TestFunction, t: float, x, u) -> float:
    """phi_t + mu_X . D phi + 1/2 Tr[sigma sigma^T D^2 phi] at (t, x) under control u."""
    xp = _point(model, x)
    ci = model.controls.index(u)
    mu = model.drift(t, xp, ci)[0]
    sig = model.vol(t, xp, ci)[0]
    out = phi.time_derivative(t, xp)[0] + mu @ phi.gradient(t, xp)[0]
    out += 0.5 * np.trace(sig @ sig.T @ phi.hessian(t, xp)[0])
    return float(out)


def _nonlocal(model: ControlledJumpModel, phi: TestFunction, t: float, xp: np.ndarray, ci: int) -> float:
    if model.marks.n_atoms == 0:
        return 0.0
    beta = model.jump_sizes(t, xp, ci)[0]  # (n_atoms, d)
    shifted = phi(t, xp + beta)
    if not np.all(np.isfinite(shifted)):
        raise ValueError("test function not evaluable at a jump landing point")
    return float(np.sum(model.marks.weight * (shifted - phi(t, xp)[0])))


def nonlocal_apply(model: ControlledJumpModel, phi: TestFunction, t: float, x, u) -> float:
    """Atomic quadrature of sum_i int (phi(t, x + beta_i) - phi(t, x)) m_i(de)."""
    return _nonlocal(model, phi, t, _point(model, x), model.controls.index(u))


def _local_term(model, t, xp, ci, p, A) -> float:
    mu = model.drift(t, xp, ci)[0]
    sig = model.vol(t, xp, ci)[0]
    return float(mu @ p + 0.5 * np.trace(sig @ sig.T @ A))


def game_hamiltonian(model: ControlledJumpModel, kind: str, t: float, x, p, A, phi: TestFunction) -> HamiltonianResult:
    """sup (zero-sum) or inf (cooperative) over u of -I[phi] - mu.p - 1/2 Tr[sigma sigma^T A]."""
    kind = normalize_kind(kind)
    xp = _point(model, x)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    A = np.asarray(A, dtype=float).reshape(model.dimension, model.dimension)
    vals = np.array([-_nonlocal(model, phi, t, xp, ci) - _local_term(model, t, xp, ci, p, A)
                     for ci in range(model.n_controls)])
    best = int(np.argmax(vals) if kind == "zero_sum" else np.argmin(vals))
    return HamiltonianResult(float(vals[best]), best, len(vals))


# --------------------------------------------------------------------------
# target formulation


def _require_target(model: ControlledJumpModel):
    tgt = model.target
    if tgt is None or tgt.embedding:
        raise ValueError("model lacks target-mode coefficients (mu_Y, sigma_Y, b)")
    return tgt


def _u2_for_e(model: ControlledJumpModel, ci: int, e: float) -> float:
    hits = np.flatnonzero(model.marks.e == e)
    return model.controls.u2_at(ci, int(hits[0])) if hits.size else 0.0


def _jump_ops(model, t, xp, y, ci, phi) -> JumpOperators:
    tgt = _require_target(model)
    es = model.marks.support()
    n_marks = model.marks.n_marks
    J = np.zeros((len(es), n_marks))
    u = model.controls.points[ci]
    phi_x = phi(t, xp)[0]
    for k, e in enumerate(es):
        u2 = _u2_for_e(model, ci, e)
        for i in range(n_marks):
            b = tgt.b[i](t, xp, u, ci, y=y, e=e, u2=u2)[0]
            shift = model.beta[i](t, xp, u, ci, e=e, u2=u2)
            J[k, i] = b - phi(t, xp + shift)[0] + phi_x
    if n_marks == 0:
        return JumpOperators(es, J, np.zeros(0), np.zeros(0))
    return JumpOperators(es, J, J.min(axis=1), J.max(axis=1))


def target_jump_operators(model: ControlledJumpModel, t: float, x, y: float, u, phi: TestFunction) -> JumpOperators:
    """Delta (min over marks), Pi (max over marks) and the full J vector at every support atom."""
    return _jump_ops(model, t, _point(model, x), y, model.controls.index(u), phi)


def _target_local(model, t, xp, y, ci, p, A):
    tgt = _require_target(model)
    u = model.controls.points[ci]
    mu_y = float(tgt.mu_y(t, xp, u, ci, y=y)[0])
    sig_y = tgt.sigma_y(t, xp, u, ci, y=y)[0]
    sig = model.vol(t, xp, ci)[0]
    L = mu_y - _local_term(model, t, xp, ci, p, A)
    N = sig_y - sig.T @ p
    return L, N


def relaxed_operator(model: ControlledJumpModel, kind: str, eps: float, eta: float, t: float, x, y: float,
                     p, A, phi: TestFunction) -> HamiltonianResult:
    """H_{eps,eta} (zero-sum / unco) or F_{eps,eta} (cooperative / co) over the control grid.

    A control is feasible when |N^u| <= eps and, at every positive-weight
    support atom, Delta >= eta (H) or Pi <= eta (F).
    """
    kind = normalize_kind(kind)
    if eps < 0 or not -1.0 <= eta <= 1.0:
        raise ValueError("need eps >= 0 and eta in [-1, 1]")
    xp = _point(model, x)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    A = np.asarray(A, dtype=float).reshape(model.dimension, model.dimension)
    best, arg, count = None, None, 0
    for ci in range(model.n_controls):
        L, N = _target_local(model, t, xp, y, ci, p, A)
        if np.linalg.norm(N) > eps:
            continue
        ops = _jump_ops(model, t, xp, y, ci, phi)
        if kind == "zero_sum" and np.any(ops.delta < eta):
            continue
        if kind == "cooperative" and np.any(ops.pi > eta):
            continue
        count += 1
        if best is None or (L > best if kind == "zero_sum" else L < best):
            best, arg = L, ci
    if best is None:
        return HamiltonianResult(-math.inf if kind == "zero_sum" else math.inf, None, 0)
    return HamiltonianResult(float(best), arg, count)


def _probe_directions(dim: int, n: int) -> np.ndarray:
    if dim == 2:
        ang = 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci lattice on the sphere, plus the coordinate directions
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z ** 2)
    golden = np.pi * (3 - np.sqrt(5))
    pts = np.zeros((n, dim))
    pts[:, 0], pts[:, 1], pts[:, -1] = r * np.cos(golden * i), r * np.sin(golden * i), z
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.vstack([pts, np.eye(dim), -np.eye(dim)])


def facelift_distance(model: ControlledJumpModel, t: float, x, y: float, p, phi: TestFunction, *,
                      n_directions: int = 64, ball_radius: float = 0.0, r_max: float = 10.0,
                      n_march: int = 1000) -> float:
    """Signed distance dist(0, N^c) - dist(0, N) estimated on the control grid.

    Each control contributes the set ``B(N^u, ball_radius) x (-inf, min_e Delta]``.
    In the game embedding the integrands are free and every probe point is a
    member, so the result is +inf.  Samples with non-finite Delta are dropped;
    with nothing left the result is -inf.
    """
    d = model.dimension
    dirs = _probe_directions(d + 1, n_directions)
    if model.target is not None and model.target.embedding:
        def member(z):
            return True
        zero_in = True
        dist_in = 0.0
    else:
        xp = _point(model, x)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        A0 = np.zeros((d, d))
        centers, tops = [], []
        for ci in range(model.n_controls):
            _, N = _target_local(model, t, xp, y, ci, p, A0)
            delta = _jump_ops(model, t, xp, y, ci, phi).delta
            top = float(delta.min()) if delta.size else math.inf
            if np.all(np.isfinite(N)) and not (math.isnan(top) or top == -math.inf):
                centers.append(N)
                tops.append(top)
        if not centers:
            return -math.inf
        centers, tops = np.array(centers), np.array(tops)

        def member(z):
            return bool(np.any((np.linalg.norm(centers - z[:d], axis=1) <= ball_radius) & (z[d] <= tops)))

        horiz = np.maximum(0.0, np.linalg.norm(centers, axis=1) - ball_radius)
        vert = np.maximum(0.0, -tops)
        dist_in = float(np.min(np.hypot(horiz, vert)))
        zero_in = dist_in == 0.0
    if not zero_in:
        return -dist_in
    # 0 in N: smallest exit radius over probe directions
    radii = np.linspace(0.0, r_max, n_march + 1)[1:]
    exit_r = math.inf
    for v in dirs:
        prev = 0.0
        for r in radii:
            if not member(r * v):
                lo, hi = prev, r
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    lo, hi = (mid, hi) if member(mid * v) else (lo, mid)
                exit_r = min(exit_r, lo)
                break
            prev = r
    return exit_r
