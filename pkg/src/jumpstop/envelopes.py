"""Explicit a-priori bounds for the game and target values.

The upper bound is ``w+(t) = gamma+ - exp(k+ t)`` and the lower bound
``w-(t) = exp(k- t) - gamma-``; both are constant in x.  Constants are the
smallest the construction allows: ``k+ = 2L``, ``w+(T) = g_sup`` and
``k- = 2C``, ``w-(T)`` one ulp below ``-g_sup``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import ControlledJumpModel, default_probes

EPS_L = 1e-6


@dataclass(frozen=True)
class EnvelopePair:
    k_plus: float
    gamma_plus: float
    k_minus: float
    gamma_minus: float
    L: float
    C: float
    g_sup: float
    horizon: float

    def upper(self, t, x=None) -> np.ndarray:
        return self.gamma_plus - np.exp(self.k_plus * np.asarray(t, dtype=float))

    def lower(self, t, x=None) -> np.ndarray:
        return np.exp(self.k_minus * np.asarray(t, dtype=float)) - self.gamma_minus

    @property
    def upper_sup(self) -> float:
        """sup over [0, T] of |w+| (attained at t = 0 since w+ decreases)."""
        return float(max(abs(self.upper(0.0)), abs(self.upper(self.horizon))))

    def to_dict(self) -> dict:
        return asdict(self)


def neutral_control_index(model: ControlledJumpModel, probes=None) -> int | None:
    """First control zeroing sigma_Y and b at every positive-weight atom on the probes."""
    tgt = model.target
    if tgt is None or tgt.embedding:
        # the free integrands include alpha = gamma = 0
        return 0
    ts, xs, _ = default_probes(model, n_x=7, radius=5.0) if probes is None else probes
    ys = np.linspace(-5.0, 5.0, 5)
    pos = np.flatnonzero(model.marks.weight > 0)
    for ci in range(model.n_controls):
        u = model.controls.points[ci]
        ok = True
        for t in ts:
            for y in ys:
                if np.any(tgt.sigma_y(t, xs, u, ci, y=y) != 0):
                    ok = False
                    break
                for a in pos:
                    i, e = model.marks.mark[a], model.marks.e[a]
                    if np.any(tgt.b[i](t, xs, u, ci, y=y, e=e, u2=model.controls.u2_at(ci, a)) != 0):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return ci
    return None


def verify_neutral_control(model: ControlledJumpModel) -> bool:
    return neutral_control_index(model) is not None


def _measured_constants(model: ControlledJumpModel, u0: int) -> tuple[float, float]:
    tgt = model.target
    if tgt is None or tgt.embedding:
        return 0.0, 0.0  # Y is a martingale: no drift, compensated jumps
    ts, xs, cis = default_probes(model, n_x=7, radius=5.0)
    ys = np.linspace(-5.0, 5.0, 11)
    L = C = 0.0
    w = model.marks.weight
    for t in ts:
        for y in ys:
            mu0 = tgt.mu_y(t, xs, model.controls.points[u0], u0, y=y)
            L = max(L, float(np.max(np.abs(mu0)) / (1 + abs(y))))
            for ci in cis:
                u = model.controls.points[ci]
                drift = tgt.mu_y(t, xs, u, ci, y=y)
                for a in range(model.marks.n_atoms):
                    i, e = model.marks.mark[a], model.marks.e[a]
                    drift = drift + w[a] * tgt.b[i](t, xs, u, ci, y=y, e=e, u2=model.controls.u2_at(ci, a))
                C = max(C, float(np.max(np.abs(drift)) / (1 + abs(y))))
    return L, C


def build_envelopes(model: ControlledJumpModel, L: float | None = None, C: float | None = None,
                    eps_L: float = EPS_L) -> EnvelopePair:
    """Minimal-slack super/sub-solution constants.

    ``L`` bounds the growth of mu_Y at the neutral control and ``C`` bounds
    ``mu_Y + int b dm``.  When omitted they are measured on probes and floored
    at ``eps_L`` (they vanish for the game embedding).  Explicit values must
    be positive.
    """
    u0 = neutral_control_index(model)
    if u0 is None:
        raise ValueError("no neutral control u0 (sigma_Y = 0, b = 0) on the control grid")
    if (L is not None and L <= 0) or (C is not None and C <= 0):
        raise ValueError("L and C must be positive")
    if L is None or C is None:
        mL, mC = _measured_constants(model, u0)
        L = max(mL, eps_L) if L is None else L
        C = max(mC, eps_L) if C is None else C
    T, g_sup = model.horizon, model.g_sup
    k_plus = 2.0 * L
    gamma_plus = g_sup + math.exp(k_plus * T)
    k_minus = 2.0 * C
    gamma_minus = g_sup + math.exp(k_minus * T)
    gamma_minus = math.nextafter(gamma_minus, math.inf)
    # rounding in gamma+ - exp(kT) must not undercut g_sup
    while gamma_plus - math.exp(k_plus * T) < g_sup:
        gamma_plus = math.nextafter(gamma_plus, math.inf)
    while not math.exp(k_minus * T) - gamma_minus < -g_sup:
        gamma_minus = math.nextafter(gamma_minus, math.inf)
    return EnvelopePair(k_plus, gamma_plus, k_minus, gamma_minus, float(L), float(C), g_sup, T)
