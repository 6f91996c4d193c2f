"""Space-time grids and the off-grid evaluation rule shared by every discretisation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np


class CFLError(ValueError):
    """Time step too large for the explicit monotone scheme / chain."""


@dataclass(frozen=True)
class SolverGrid:
    """Uniform grid on [t0, T] x prod_i [lo_i, hi_i].

    ``nt`` and ``nx`` count intervals, so there are ``nt + 1`` time levels and
    ``nx_i + 1`` nodes per axis.  Nodes are ordered lexicographically (first
    axis slowest).  Values beyond the box are extrapolated as constants.
    """

    T: float
    nt: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    nx: tuple[int, ...]
    t0: float = 0.0
    boundary: str = "constant"

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        object.__setattr__(self, "nx", tuple(int(v) for v in np.atleast_1d(self.nx)))
        if not (len(self.lo) == len(self.hi) == len(self.nx)):
            raise ValueError("lo, hi and nx must have one entry per axis")
        if self.nt < 1 or any(n < 1 for n in self.nx):
            raise ValueError("nt and nx must be >= 1")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("each axis needs lo < hi")
        if not self.T > self.t0:
            raise ValueError("need T > t0")
        if self.boundary != "constant":
            raise ValueError(f"unsupported boundary rule {self.boundary!r}")

    @classmethod
    def uniform(cls, T: float, nt: int, lo: float, hi: float, nx: int, d: int = 1, t0: float = 0.0) -> "SolverGrid":
        return cls(T=T, nt=nt, lo=(lo,) * d, hi=(hi,) * d, nx=(nx,) * d, t0=t0)

    @property
    def d(self) -> int:
        return len(self.nx)

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.nt

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple((h - l) / n for l, h, n in zip(self.lo, self.hi, self.nx))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.nx)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def times(self) -> np.ndarray:
        ts = self.t0 + self.dt * np.arange(self.nt + 1)
        ts[-1] = self.T
        return ts

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(l, h, n + 1) for l, h, n in zip(self.lo, self.hi, self.nx))

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refine(self, time_factor: int = 2) -> "SolverGrid":
        """Same box, half the space step and ``1/time_factor`` of the time step."""
        return SolverGrid(self.T, time_factor * self.nt, self.lo, self.hi, tuple(2 * n for n in self.nx), self.t0, self.boundary)

    def time_index(self, t: float) -> int:
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k > self.nt or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a grid time")
        return k

    def nearest_node(self, x: np.ndarray) -> np.ndarray:
        """Flat index of the nearest node for each row of x (clamped to the box)."""
        x = np.atleast_2d(x)
        flat = np.zeros(x.shape[0], dtype=np.int64)
        for a in range(self.d):
            i = np.rint((x[:, a] - self.lo[a]) / self.dx[a]).astype(np.int64)
            i = np.clip(i, 0, self.nx[a])
            flat = flat * self.shape[a] + i
        return flat

    def interp_stencil(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Multilinear interpolation stencil with constant extrapolation.

        Returns ``(idx, w)`` of shape (n, 2**d): flat node indices and
        nonnegative weights summing to one.  At a node the weight is exactly
        one on that node.
        """
        x = np.atleast_2d(x)
        n = x.shape[0]
        lows, fracs = [], []
        for a in range(self.d):
            pos = np.clip((x[:, a] - self.lo[a]) / self.dx[a], 0.0, float(self.nx[a]))
            snapped = np.rint(pos)
            pos = np.where(np.abs(pos - snapped) < 1e-9, snapped, pos)  # nodes hit exactly
            i0 = np.minimum(np.floor(pos).astype(np.int64), self.nx[a] - 1)
            lows.append(i0)
            fracs.append(pos - i0)
        corners = list(product((0, 1), repeat=self.d))
        idx = np.zeros((n, len(corners)), dtype=np.int64)
        w = np.ones((n, len(corners)))
        for c, bits in enumerate(corners):
            flat = np.zeros(n, dtype=np.int64)
            for a, b in enumerate(bits):
                flat = flat * self.shape[a] + lows[a] + b
                w[:, c] *= fracs[a] if b else 1.0 - fracs[a]
            idx[:, c] = flat
        return idx, w

    def interpolate(self, values: np.ndarray, x: np.ndarray) -> np.ndarray:
        idx, w = self.interp_stencil(x)
        return np.sum(values.ravel()[idx] * w, axis=1)

    def to_spec(self) -> str:
        parts = [f"nx={self.nx[0]}", f"nt={self.nt}", f"xlo={self.lo[0]!r}", f"xhi={self.hi[0]!r}"]
        if self.t0:
            parts.append(f"t0={self.t0!r}")
        return ",".join(parts)


def parse_grid_spec(spec: str, horizon: float, d: int = 1) -> SolverGrid:
    """Parse ``nx=..,nt=..,xlo=..,xhi=..[,t0=..]`` into a grid over [t0, horizon]."""
    kv = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad grid token {part!r}")
        k, v = part.split("=", 1)
        kv[k.strip()] = v.strip()
    missing = {"nx", "nt", "xlo", "xhi"} - set(kv)
    if missing:
        raise ValueError(f"grid spec missing {sorted(missing)}")
    return SolverGrid.uniform(T=horizon, nt=int(kv["nt"]), lo=float(kv["xlo"]), hi=float(kv["xhi"]),
                              nx=int(kv["nx"]), d=d, t0=float(kv.get("t0", 0.0)))
