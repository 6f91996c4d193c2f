"""Monte-Carlo simulation of the controlled jump-diffusion and of the martingale Y.

Paths advance by Euler-Maruyama steps.  In each step at most one atom
fires: atom j with probability ``w_j * dt`` and none with probability
``1 - m_hat * dt``, which is the jump branch of the Markov chain used by the
oracle.  Y-mode adds ``alpha . dW + gamma_j - dt * sum_j w_j gamma_j``.

Batches are split into fixed-size chunks, each with its own generator
spawned from ``SeedSequence([seed, chunk])``; chunks may run on a thread
pool (``JUMPSTOP_THREADS``) and are reduced in chunk order, so results
do not depend on the thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import SolverGrid
from .model import ControlledJumpModel, as_points, normalize_kind
from .surface import PolicyField, ValueSurface

CHUNK = 4096
DEFAULT_STEPS = 1000


class SimulationError(ValueError):
    pass


class TargetBracketError(RuntimeError):
    pass


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("JUMPSTOP_THREADS", "1")))
    except ValueError:
        return 1


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), chunk]))


def _map_chunks(fn: Callable[[int, int, np.random.Generator], dict], n_paths: int, seed: int) -> dict:
    sizes = [min(CHUNK, n_paths - s) for s in range(0, n_paths, CHUNK)]
    jobs = [(c, n) for c, n in enumerate(sizes)]
    run = lambda job: fn(job[0], job[1], _chunk_rng(seed, job[0]))
    workers = min(thread_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


# --------------------------------------------------------------------------
# controls of X and of Y


def _level(grid: SolverGrid, t: float) -> int:
    return int(np.clip(np.floor((t - grid.t0) / grid.dt + 1e-9), 0, grid.nt))


def _control_fn(model: ControlledJumpModel, control) -> Callable[[float, np.ndarray], np.ndarray]:
    if isinstance(control, PolicyField):
        return lambda t, x: control.lookup(_level(control.grid, t), x)[0].astype(np.int64)
    ci = int(control)
    if not 0 <= ci < model.n_controls:
        raise IndexError(f"control index {ci} out of range")
    return lambda t, x: np.full(x.shape[0], ci, dtype=np.int64)


@dataclass
class MartingaleControl:
    """Integrands of Y = y + int alpha dW + int gamma d(compensated jump measure).

    ``alpha(t, x)`` returns (n, d); ``gamma(t, x)`` returns (n, n_atoms).
    ``K`` is the single global admissibility bound on jumps of Y.
    """

    alpha: Callable[[float, np.ndarray], np.ndarray]
    gamma: Callable[[float, np.ndarray], np.ndarray]
    K: float

    @classmethod
    def zero(cls, model: ControlledJumpModel, K: float = 1.0) -> "MartingaleControl":
        d, m = model.dimension, model.marks.n_atoms
        return cls(lambda t, x: np.zeros((x.shape[0], d)), lambda t, x: np.zeros((x.shape[0], m)), K)

    @classmethod
    def constant(cls, model: ControlledJumpModel, alpha, gamma, K: float) -> "MartingaleControl":
        a = np.broadcast_to(np.asarray(alpha, dtype=float), (model.dimension,))
        g = np.broadcast_to(np.asarray(gamma, dtype=float), (model.marks.n_atoms,))
        return cls(lambda t, x: np.tile(a, (x.shape[0], 1)), lambda t, x: np.tile(g, (x.shape[0], 1)), K)


def hedge_from_surface(model: ControlledJumpModel, surface: ValueSurface, control_index: int = 0,
                       K: float | None = None) -> MartingaleControl:
    """Replicating integrands read off a value surface.

    Over [t_k, t_{k+1}) the hedge uses level k+1: alpha = sigma^T grad V,
    gamma_j = V(x + beta_j) - V(x).
    """
    grid = surface.grid
    grads: dict[int, np.ndarray] = {}

    def level(t):
        return min(_level(grid, t) + 1, grid.nt)

    def grad_at(k, x):
        if k not in grads:
            v = surface.values[k].reshape(grid.shape)
            gs = np.gradient(v, *grid.dx, edge_order=1) if grid.d > 1 else [np.gradient(v, grid.dx[0])]
            grads[k] = np.stack([g.ravel() for g in gs], axis=1)
        idx, w = grid.interp_stencil(x)
        return np.einsum("nc,ncd->nd", w, grads[k][idx])

    def alpha(t, x):
        k = level(t)
        sig = model.vol(t, x, control_index)
        return np.einsum("nji,nj->ni", sig, grad_at(k, x))

    def gamma(t, x):
        k = level(t)
        v = surface.values[k]
        here = grid.interpolate(v, x)
        beta = model.jump_sizes(t, x, control_index)
        out = np.empty((x.shape[0], beta.shape[1]))
        for a in range(beta.shape[1]):
            out[:, a] = grid.interpolate(v, x + beta[:, a, :]) - here
        return out

    if K is None:
        K = 2.0 * model.g_sup + 1.0
    return MartingaleControl(alpha, gamma, K)


# --------------------------------------------------------------------------
# the Euler engine


def _step_times(model: ControlledJumpModel, t0: float, control, n_steps: int | None) -> np.ndarray:
    T = model.horizon
    if not t0 < T:
        raise SimulationError("need t0 < horizon")
    if n_steps is None:
        if isinstance(control, PolicyField):
            k0 = control.grid.time_index(t0)
            return control.grid.times[k0:]
        n_steps = DEFAULT_STEPS
    ts = t0 + (T - t0) * np.arange(n_steps + 1) / n_steps
    ts[-1] = T
    return ts


class _Engine:
    def __init__(self, model: ControlledJumpModel, control, times: np.ndarray, mc: MartingaleControl | None):
        self.model = model
        self.ctrl = _control_fn(model, control)
        self.times = times
        self.mc = mc
        w = model.marks.weight
        self.w = w
        dts = np.diff(times)
        if model.marks.total_mass * dts.max() >= 1.0:
            raise SimulationError(f"m_hat * dt = {model.marks.total_mass * dts.max():.3f} >= 1")

    def run(self, x0: np.ndarray, n: int, rng: np.random.Generator, observe: Callable | None = None):
        """Advance n paths.

        ``observe(k, t, X, M, atom, ids)`` is called at every time level with
        the live paths (``ids`` are their positions in the batch); it may
        return a mask of paths to keep, and dropped paths are not advanced.
        Returns the final (X, M, jump count, ids) of the live paths.
        """
        model, d = self.model, self.model.dimension
        X = np.tile(x0, (n, 1))
        M = np.zeros(n)
        ids = np.arange(n)
        atom = np.full(n, -1, dtype=np.int64)
        jumps = np.zeros(n, dtype=np.int64)
        n_atoms = len(self.w)
        cum_rate = np.cumsum(self.w)
        single = model.n_controls == 1
        for k in range(len(self.times)):
            if observe is not None:
                keep = observe(k, self.times[k], X, M, atom, ids)
                if keep is not None and not keep.all():
                    X, M, ids, jumps = X[keep], M[keep], ids[keep], jumps[keep]
            if k == len(self.times) - 1 or ids.size == 0:
                break
            m = ids.size
            t, dt = self.times[k], self.times[k + 1] - self.times[k]
            dW = rng.standard_normal((m, d)) * np.sqrt(dt)
            u = rng.random(m) if n_atoms else None
            ci = np.zeros(m, dtype=np.int64) if single else self.ctrl(t, X)
            drift = np.empty((m, d))
            dX = np.empty((m, d))
            beta = np.zeros((m, n_atoms, d))
            for c in (np.unique(ci) if not single else (0,)):
                sel = slice(None) if single else ci == c
                xs = X[sel]
                drift[sel] = model.drift(t, xs, int(c))
                dX[sel] = np.einsum("nij,nj->ni", model.vol(t, xs, int(c)), dW[sel])
                if n_atoms:
                    beta[sel] = model.jump_sizes(t, xs, int(c))
            newX = X + drift * dt + dX
            atom = np.full(m, -1, dtype=np.int64)
            if n_atoms:
                atom = np.searchsorted(cum_rate * dt, u, side="right")
                atom[atom >= n_atoms] = -1
                hit = atom >= 0
                newX[hit] += beta[hit, atom[hit], :]
                jumps = jumps + hit
            if self.mc is not None:
                a = self.mc.alpha(t, X)
                M = M + np.sum(a * dW, axis=1)
                if n_atoms:
                    gam = self.mc.gamma(t, X)
                    M = M - dt * (gam @ self.w)
                    hit = atom >= 0
                    M[hit] += gam[hit, atom[hit]]
            X = newX
        return X, M, jumps, ids


# --------------------------------------------------------------------------
# single paths and batches


@dataclass
class SamplePath:
    times: np.ndarray
    X: np.ndarray  # (m + 1, d)
    jump_atom: np.ndarray  # atom that fired on arrival at each time, -1 if none
    Y: np.ndarray | None = None
    jumps: list[tuple[float, int, float]] = field(default_factory=list)  # (time, mark index, e)


def simulate_path(model: ControlledJumpModel, control, t0: float, x0, seed: int, *, n_steps: int | None = None,
                  mc: MartingaleControl | None = None, y0: float = 0.0) -> SamplePath:
    """One path under a PolicyField (its grid fixes the step) or a fixed control index."""
    return simulate_paths(model, control, t0, x0, 1, seed, n_steps=n_steps, mc=mc, y0=y0)[0]


def simulate_paths(model: ControlledJumpModel, control, t0: float, x0, n_paths: int, seed: int, *,
                   n_steps: int | None = None, mc: MartingaleControl | None = None,
                   y0: float = 0.0) -> list[SamplePath]:
    times = _step_times(model, t0, control, n_steps)
    eng = _Engine(model, control, times, mc)
    x0 = as_points(x0, model.dimension)[0]

    def chunk(c, n, rng):
        Xs, Ms, As = [], [], []

        def observe(k, t, X, M, atom, ids):
            Xs.append(X.copy())
            Ms.append(M.copy())
            As.append(atom.copy())

        eng.run(x0, n, rng, observe)
        return {"X": np.stack(Xs, axis=1), "M": np.stack(Ms, axis=1), "A": np.stack(As, axis=1)}

    out = _map_chunks(chunk, n_paths, seed)
    paths = []
    marks, es = model.marks.mark, model.marks.e
    for p in range(n_paths):
        A = out["A"][p]
        jumps = [(float(times[k]), int(marks[a]), float(es[a])) for k, a in enumerate(A) if a >= 0]
        paths.append(SamplePath(times.copy(), out["X"][p], A, y0 + out["M"][p] if mc is not None else None, jumps))
    return paths


@dataclass
class TerminalSample:
    x_T: np.ndarray
    y_T: np.ndarray
    jump_count: np.ndarray


def simulate_terminal(model: ControlledJumpModel, control, t0: float, x0, n_paths: int, seed: int, *,
                      n_steps: int | None = None, mc: MartingaleControl | None = None,
                      y0: float = 0.0) -> TerminalSample:
    times = _step_times(model, t0, control, n_steps)
    eng = _Engine(model, control, times, mc)
    x0 = as_points(x0, model.dimension)[0]

    def chunk(c, n, rng):
        X, M, J, _ = eng.run(x0, n, rng)
        return {"X": X, "M": M, "J": J}

    out = _map_chunks(chunk, n_paths, seed)
    return TerminalSample(out["X"], y0 + out["M"], out["J"])


def mc_game_value(model: ControlledJumpModel, policy: PolicyField, t0: float, x0, n_paths: int,
                  seed: int) -> tuple[float, float]:
    """Mean of g(X(rho)), rho the first grid time in the policy's stop region (else T)."""
    times = _step_times(model, t0, policy, None)
    eng = _Engine(model, policy, times, None)
    x0 = as_points(x0, model.dimension)[0]
    k0 = policy.grid.time_index(t0)

    def chunk(c, n, rng):
        payoff = np.zeros(n)

        def observe(k, t, X, M, atom, ids):
            stop = policy.lookup(k0 + k, X)[1] | (k == len(times) - 1)
            payoff[ids[stop]] = model.payoff(X[stop])
            return ~stop

        eng.run(x0, n, rng, observe)
        return {"payoff": payoff}

    payoff = _map_chunks(chunk, n_paths, seed)["payoff"]
    stderr = float(payoff.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return float(payoff.mean()), stderr


# --------------------------------------------------------------------------
# admissibility of the martingale integrands


@dataclass
class AdmissibilityReport:
    kind: str
    extreme: float  # min (zero-sum) / max (cooperative) single-event jump of Y on the probes
    K: float
    holds: bool
    margin: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "extreme": self.extreme, "K": self.K, "holds": self.holds, "margin": self.margin}


def check_admissibility(mc: MartingaleControl, kind: str, model: ControlledJumpModel,
                        probes: tuple[Sequence[float], np.ndarray] | None = None) -> AdmissibilityReport:
    """Compare the extreme single-jump increment of Y over probe points with the bound K."""
    kind = normalize_kind(kind)
    if probes is None:
        ts = np.linspace(0.0, model.horizon, 3)
        xs = np.stack(np.meshgrid(*[np.linspace(-5, 5, 11)] * model.dimension, indexing="ij"), -1).reshape(-1, model.dimension)
    else:
        ts, xs = probes
        xs = as_points(xs, model.dimension)
    charged = model.marks.weight > 0
    vals = [np.asarray(mc.gamma(t, xs))[:, charged] for t in ts]
    vals = np.concatenate([v.ravel() for v in vals]) if vals else np.zeros(0)
    if vals.size == 0:
        vals = np.zeros(1)
    if kind == "zero_sum":
        ext = float(vals.min())
        margin = ext + mc.K
    else:
        ext = float(vals.max())
        margin = mc.K - ext
    return AdmissibilityReport(kind, ext, float(mc.K), margin >= 0, float(margin))


# --------------------------------------------------------------------------
# stopping-rule battery and the target bound


class StopRule:
    def hits(self, model: ControlledJumpModel, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class HittingRule(StopRule):
    """Stop at the first time g(X) >= level."""

    level: float

    def hits(self, model, t, X):
        return model.payoff(X) >= self.level


@dataclass(frozen=True)
class FixedTimeRule(StopRule):
    time: float

    def hits(self, model, t, X):
        return np.full(X.shape[0], t >= self.time - 1e-12)


@dataclass(frozen=True, eq=False)
class PolicyRule(StopRule):
    """Stop in the stop region of a policy field (nearest node, current level)."""

    policy: PolicyField

    def hits(self, model, t, X):
        return self.policy.lookup(_level(self.policy.grid, t), X)[1]


def default_rules(model: ControlledJumpModel, t0: float, n_levels: int = 11, n_times: int = 5,
                  policy: PolicyField | None = None) -> list[StopRule]:
    """Hitting rules of the sets {g >= c} on a level grid, deterministic times, and the policy's stop region."""
    rules: list[StopRule] = [HittingRule(float(c)) for c in np.linspace(-model.g_sup, model.g_sup, n_levels)]
    rules += [FixedTimeRule(float(t)) for t in np.linspace(t0, model.horizon, n_times)]
    if policy is not None:
        rules.append(PolicyRule(policy))
    return rules


@dataclass
class TargetEstimate:
    kind: str
    estimate: float
    stderr: float
    n_paths: int
    seed: int
    lo: float
    hi: float
    iterations: int
    K: float
    critical_rule: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "estimate": self.estimate, "stderr": self.stderr, "n_paths": self.n_paths,
                "seed": self.seed, "bracket": [self.lo, self.hi], "iterations": self.iterations, "K": self.K,
                "critical_rule": self.critical_rule}


def _stopped_margins(model, control, t0, x0, mc, rules, n_paths, seed, n_steps):
    """z[r, p] = g(X(rho_r)) - M(rho_r) for every rule and path (Y = y + M)."""
    times = _step_times(model, t0, control, n_steps)
    eng = _Engine(model, control, times, mc)
    x0 = as_points(x0, model.dimension)[0]
    last = len(times) - 1

    def chunk(c, n, rng):
        z = np.zeros((len(rules), n))
        done = np.zeros((len(rules), n), dtype=bool)

        def observe(k, t, X, M, atom, ids):
            gx = None
            for r, rule in enumerate(rules):
                hit = np.ones(len(ids), dtype=bool) if k == last else rule.hits(model, t, X)
                new = hit & ~done[r, ids]
                if new.any():
                    if gx is None:
                        gx = model.payoff(X)
                    z[r, ids[new]] = gx[new] - M[new]
                    done[r, ids[new]] = True
            return ~done[:, ids].all(axis=0)

        eng.run(x0, n, rng, observe)
        return {"z": z.T}

    return _map_chunks(chunk, n_paths, seed)["z"].T


def estimate_target_bound(model: ControlledJumpModel, kind: str, t0: float, x0, mc: MartingaleControl,
                          rules: Sequence[StopRule] | None = None, *, control=0, n_paths: int = 2000,
                          seed: int = 0, n_steps: int | None = None, iterations: int = 40,
                          bracket: float | None = None) -> TargetEstimate:
    """Bisection for the smallest (zero-sum) / largest (cooperative) admissible start y of Y.

    Zero-sum success: Y(rho) >= g(X(rho)) on every path for every rule.
    Cooperative success: some rule has Y(rho) <= g(X(rho)) on every path.
    """
    kind = normalize_kind(kind)
    if model.target is not None and not model.target.embedding:
        raise SimulationError("target simulation supports the martingale embedding only")
    rules = list(rules) if rules is not None else default_rules(model, t0)
    if not rules:
        raise ValueError("empty stopping-rule battery")
    z = _stopped_margins(model, control, t0, x0, mc, rules, n_paths, seed, n_steps)

    if kind == "zero_sum":
        crit = z.max(axis=0)  # per path: smallest y that works for all rules
        need = float(crit.max())
        success = lambda y: y - need >= 0
        best_rule = int(np.argmax(z.max(axis=1)))
    else:
        per_rule = z.min(axis=1)  # per rule: largest y that works on all paths
        best_rule = int(np.argmax(per_rule))
        crit = z[best_rule]
        allow = float(per_rule[best_rule])
        success = lambda y: y <= allow

    B = float(bracket) if bracket is not None else model.g_sup + 1.0
    lo, hi = -B, B
    good_hi = kind == "zero_sum"  # side of the bracket on which success holds

    def bracketed(lo, hi):
        return success(hi) != success(lo) and success(hi if good_hi else lo)

    if not bracketed(lo, hi):
        from .envelopes import build_envelopes

        W = max(B, build_envelopes(model).upper_sup)
        lo, hi = -W, W
        if not bracketed(lo, hi):
            raise TargetBracketError(f"no sign change of the success test on [{lo:.4g}, {hi:.4g}]")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if success(mid) == good_hi:
            hi = mid
        else:
            lo = mid
    stderr = float(crit.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return TargetEstimate(kind, 0.5 * (lo + hi), stderr, n_paths, int(seed), lo, hi, iterations, float(mc.K), best_rule)
