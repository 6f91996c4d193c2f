"""Problem instances: coefficient fields, atomic mark measures, control grids, payoffs.

A model is loaded from a JSON document (see ``load_model``) and is immutable
afterwards.  Every coefficient is evaluated in vectorised form on an array of
points of shape ``(n, d)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Mapping, Sequence

import numpy as np

COEFFICIENT_FAMILIES = ("constant", "affine_in_x", "tabulated")
PAYOFF_FAMILIES = ("constant", "clipped_abs", "tent", "clipped_linear", "tabulated")

# variables an affine coefficient may depend on
_AFFINE_TERMS = ("const", "t", "x", "y", "u", "e", "u2")


class ModelError(ValueError):
    """Malformed model document or violated model invariant."""


def _real(v: Any) -> Any:
    """Recursively convert decimal strings to floats."""
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError as exc:
            raise ModelError(f"not a real number: {v!r}") from exc
    if isinstance(v, (list, tuple)):
        return [_real(a) for a in v]
    return v


def _array(v: Any, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(_real(v), dtype=float)
    try:
        arr = np.broadcast_to(arr, shape).copy()
    except ValueError as exc:
        raise ModelError(f"{what}: cannot broadcast shape {arr.shape} to {shape}") from exc
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{what}: non-finite entries")
    return arr


def as_points(x: Any, d: int) -> np.ndarray:
    """Coerce a point or a batch of points to shape (n, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, d)
    if arr.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}, got shape {arr.shape}")
    return arr


# --------------------------------------------------------------------------
# marks


@dataclass(frozen=True, eq=False)
class MarkMeasure:
    """I mark types, each a finite atomic measure on E.

    Atoms are also kept in flat form (``mark``, ``e``, ``weight``) which is
    what the solver, the chain and the simulator iterate over.
    """

    atoms: tuple[np.ndarray, ...]  # per mark: array (n_i, 2) of (e, weight)

    def __post_init__(self):
        for i, a in enumerate(self.atoms):
            if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] == 0:
                raise ModelError(f"mark {i}: atoms must be a nonempty list of [e, weight] pairs")
            if np.any(a[:, 1] < 0):
                raise ModelError(f"mark {i}: negative atom weight (mark measures must be nonnegative)")
            if not np.any(a[:, 1] > 0):
                raise ModelError(f"mark {i}: no atom with positive weight (support condition)")
        if not math.isfinite(self.total_mass):
            raise ModelError("total mark mass is not finite")

    @property
    def n_marks(self) -> int:
        return len(self.atoms)

    @property
    def mark(self) -> np.ndarray:
        return np.concatenate([np.full(len(a), i, dtype=int) for i, a in enumerate(self.atoms)]) if self.atoms else np.zeros(0, dtype=int)

    @property
    def e(self) -> np.ndarray:
        return np.concatenate([a[:, 0] for a in self.atoms]) if self.atoms else np.zeros(0)

    @property
    def weight(self) -> np.ndarray:
        return np.concatenate([a[:, 1] for a in self.atoms]) if self.atoms else np.zeros(0)

    @property
    def n_atoms(self) -> int:
        return int(sum(len(a) for a in self.atoms))

    @property
    def total_mass(self) -> float:
        return math.fsum(float(w) for a in self.atoms for w in a[:, 1])  # correctly rounded

    def support(self) -> np.ndarray:
        """Distinct mark values carrying positive total weight under the summed measure."""
        pos = self.weight > 0
        return np.unique(self.e[pos])


# --------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """A coefficient evaluated on (t, x, y, u, e).

    ``affine_in_x`` is affine jointly in every variable: ``const + t*T + X@x +
    y*Y + U@u + e*E + u2*U2``; missing terms are zero.  ``tabulated`` is a
    piecewise-linear table in a scalar state (d = 1 only), optionally one
    table per control point, with constant extrapolation.
    """

    family: str
    params: Mapping[str, np.ndarray]
    shape: tuple[int, ...]

    @classmethod
    def parse(cls, doc: Mapping[str, Any], shape: tuple[int, ...], d: int, q: int, n_controls: int, what: str) -> "CoefficientField":
        if not isinstance(doc, Mapping) or "family" not in doc:
            raise ModelError(f"{what}: expected an object with a 'family' key")
        family = doc["family"]
        raw = doc.get("params", {})
        if family not in COEFFICIENT_FAMILIES:
            raise ModelError(f"{what}: unknown family {family!r}")
        params: dict[str, np.ndarray] = {}
        if family == "constant":
            params["value"] = _array(raw.get("value", 0.0), shape, f"{what}.value")
        elif family == "affine_in_x":
            unknown = set(raw) - set(_AFFINE_TERMS)
            if unknown:
                raise ModelError(f"{what}: unknown affine terms {sorted(unknown)}")
            extra = {"x": (d,), "u": (q,)}
            for term in _AFFINE_TERMS:
                params[term] = _array(raw.get(term, 0.0), shape + extra.get(term, ()), f"{what}.{term}")
        else:
            if d != 1:
                raise ModelError(f"{what}: tabulated coefficients require dimension 1")
            nodes = np.asarray(_real(raw.get("x", [])), dtype=float)
            if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
                raise ModelError(f"{what}: tabulated 'x' must be strictly increasing with >= 2 nodes")
            vals = np.asarray(_real(raw.get("values", [])), dtype=float)
            if int(np.prod(shape)) == 1 and vals.shape in ((nodes.size,), (n_controls, nodes.size)):
                vals = vals.reshape(vals.shape + shape)
            if vals.shape[:1] == (n_controls,) and vals.ndim >= 2 and vals.shape[1] == nodes.size:
                vals = _array(vals, (n_controls, nodes.size) + shape, f"{what}.values")
            else:
                vals = _array(vals, (nodes.size,) + shape, f"{what}.values")
                vals = np.broadcast_to(vals, (n_controls,) + vals.shape).copy()
            params["x"] = nodes
            params["values"] = vals
        return cls(family, params, shape)

    def to_doc(self) -> dict[str, Any]:
        return {"family": self.family, "params": {k: v.tolist() for k, v in self.params.items()}}

    @property
    def depends_on_t(self) -> bool:
        return self.family == "affine_in_x" and bool(np.any(self.params["t"] != 0))

    def __call__(self, t: float, x: np.ndarray, u: np.ndarray, control_index: int,
                 y: Any = 0.0, e: float = 0.0, u2: float = 0.0) -> np.ndarray:
        n = x.shape[0]
        if self.family == "constant":
            return np.broadcast_to(self.params["value"], (n,) + self.shape).copy()
        if self.family == "affine_in_x":
            p = self.params
            base = p["const"] + t * p["t"] + e * p["e"] + u2 * p["u2"]
            if p["u"].size:
                base = base + np.tensordot(p["u"], u, axes=([p["u"].ndim - 1], [0]))
            out = np.broadcast_to(base, (n,) + self.shape) + np.tensordot(x, p["x"], axes=([1], [p["x"].ndim - 1]))
            yy = np.broadcast_to(np.asarray(y, dtype=float), (n,)).reshape((n,) + (1,) * len(self.shape))
            return out + yy * p["y"]
        table = self.params["values"][control_index]  # (m, *shape)
        flat = table.reshape(table.shape[0], -1)
        cols = [np.interp(x[:, 0], self.params["x"], flat[:, j]) for j in range(flat.shape[1])]
        return np.stack(cols, axis=-1).reshape((n,) + self.shape)


def _parse_fields(doc: Any, n_marks: int, shape, d, q, k, what: str) -> tuple[CoefficientField, ...]:
    if n_marks == 0:
        return ()
    if doc is None:
        doc = {"family": "constant", "params": {"value": 0.0}}
    docs = doc if isinstance(doc, list) else [doc] * n_marks
    if len(docs) != n_marks:
        raise ModelError(f"{what}: expected {n_marks} entries (one per mark), got {len(docs)}")
    return tuple(CoefficientField.parse(dd, shape, d, q, k, f"{what}[{i}]") for i, dd in enumerate(docs))


# --------------------------------------------------------------------------
# controls, payoff, target coefficients


@dataclass(frozen=True, eq=False)
class ControlGrid:
    points: np.ndarray  # (k, q)
    u2: np.ndarray | None = None  # (k, n_atoms) per-mark control components on the flat atom list
    unbounded: bool = False

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ModelError("control grid must be a nonempty list of control vectors")
        if len({tuple(p) for p in self.points.tolist()}) != self.points.shape[0]:
            raise ModelError("control grid contains duplicate points")

    def __len__(self) -> int:
        return self.points.shape[0]

    def u2_at(self, ci: int, atom: int) -> float:
        return 0.0 if self.u2 is None else float(self.u2[ci, atom])

    def norm(self, ci: int, weights: np.ndarray) -> float:
        """|u1| + ||u2||_{L2(m-hat)} for control ``ci``."""
        n1 = float(np.linalg.norm(self.points[ci]))
        n2 = 0.0 if self.u2 is None else float(np.sqrt(np.sum(weights * self.u2[ci] ** 2)))
        return n1 + n2

    def index(self, u: Any) -> int:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        hits = np.flatnonzero(np.all(np.abs(self.points - u) <= 1e-12, axis=1))
        if hits.size == 0:
            raise ValueError(f"control {u.tolist()} is not on the control grid")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class Payoff:
    """Bounded continuous payoff g: R^d -> R."""

    family: str
    params: Mapping[str, np.ndarray]
    sup_bound: float

    @classmethod
    def parse(cls, doc: Mapping[str, Any], d: int) -> "Payoff":
        family = doc.get("family")
        raw = doc.get("params", {})
        if family not in PAYOFF_FAMILIES:
            raise ModelError(f"payoff: unknown family {family!r}")
        if "sup_bound" not in doc:
            raise ModelError("payoff: 'sup_bound' is required (g must be bounded)")
        sup = float(_real(doc["sup_bound"]))
        if not math.isfinite(sup) or sup < 0:
            raise ModelError("payoff: sup_bound must be finite and nonnegative")
        defaults: dict[str, tuple[Any, tuple[int, ...]]] = {
            "constant": {"value": (0.0, ())},
            "clipped_abs": {"center": (0.0, (d,)), "scale": (1.0, ()), "cap": (1.0, ())},
            "tent": {"center": (0.0, (d,)), "width": (1.0, ()), "height": (1.0, ())},
            "clipped_linear": {"slope": (1.0, (d,)), "offset": (0.0, ()), "lo": (0.0, ()), "hi": (1.0, ())},
        }.get(family, {})
        params: dict[str, np.ndarray] = {}
        if family == "tabulated":
            if d != 1:
                raise ModelError("payoff: tabulated family requires dimension 1")
            nodes = np.asarray(_real(raw.get("x", [])), dtype=float)
            if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
                raise ModelError("payoff: tabulated 'x' must be strictly increasing with >= 2 nodes")
            params["x"] = nodes
            params["values"] = _array(raw.get("values"), nodes.shape, "payoff.values")
        else:
            unknown = set(raw) - set(defaults)
            if unknown:
                raise ModelError(f"payoff: unknown parameters {sorted(unknown)}")
            for name, (default, shape) in defaults.items():
                params[name] = _array(raw.get(name, default), shape, f"payoff.{name}")
            if family == "tent" and params["width"] <= 0:
                raise ModelError("payoff: tent width must be positive")
        return cls(family, params, sup)

    def to_doc(self) -> dict[str, Any]:
        return {"family": self.family, "params": {k: v.tolist() for k, v in self.params.items()},
                "sup_bound": self.sup_bound}

    def __call__(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        n = x.shape[0]
        if self.family == "constant":
            return np.full(n, float(p["value"]))
        if self.family == "clipped_abs":
            r = np.linalg.norm(x - p["center"], axis=1)
            return np.minimum(p["cap"], p["scale"] * r)
        if self.family == "tent":
            r = np.linalg.norm(x - p["center"], axis=1)
            return p["height"] * (1.0 - np.minimum(1.0, r / p["width"]))
        if self.family == "clipped_linear":
            return np.clip(x @ p["slope"] + p["offset"], p["lo"], p["hi"])
        return np.interp(x[:, 0], p["x"], p["values"])


@dataclass(frozen=True, eq=False)
class TargetCoefficients:
    """Coefficients of the controlled process Y used by the target formulation.

    ``embedding=True`` marks the game embedding, where Y is a pure martingale
    with free integrands (alpha, gamma); no coefficient fields are stored then.
    """

    embedding: bool = False
    mu_y: CoefficientField | None = None
    sigma_y: CoefficientField | None = None
    b: tuple[CoefficientField, ...] = ()

    def to_doc(self) -> dict[str, Any]:
        if self.embedding:
            return {"embedding": True}
        return {"mu_y": self.mu_y.to_doc(), "sigma_y": self.sigma_y.to_doc(), "b": [f.to_doc() for f in self.b]}


# --------------------------------------------------------------------------
# the model


@dataclass(frozen=True, eq=False)
class ControlledJumpModel:
    dimension: int
    horizon: float
    mu_x: CoefficientField
    sigma_x: CoefficientField
    beta: tuple[CoefficientField, ...]
    marks: MarkMeasure
    controls: ControlGrid
    payoff: Payoff
    target: TargetCoefficients | None = None
    aux_g: Mapping[str, Any] | None = None
    growth_constant: float | None = None
    lipschitz_constant: float | None = None
    max_simultaneous_jumps: int = 1
    name: str = ""

    @property
    def g_sup(self) -> float:
        return self.payoff.sup_bound

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def time_homogeneous(self) -> bool:
        return not (self.mu_x.depends_on_t or self.sigma_x.depends_on_t or any(b.depends_on_t for b in self.beta))

    def g(self, x: Any) -> np.ndarray:
        return self.payoff(as_points(x, self.dimension))

    def drift(self, t: float, x: np.ndarray, ci: int) -> np.ndarray:
        return self.mu_x(t, x, self.controls.points[ci], ci)

    def vol(self, t: float, x: np.ndarray, ci: int) -> np.ndarray:
        return self.sigma_x(t, x, self.controls.points[ci], ci)

    def jump_sizes(self, t: float, x: np.ndarray, ci: int) -> np.ndarray:
        """Displacements beta_i(t, x, u(e), e) for every flat atom: shape (n, n_atoms, d)."""
        marks, es = self.marks.mark, self.marks.e
        out = np.zeros((x.shape[0], len(es), self.dimension))
        for a, (i, e) in enumerate(zip(marks, es)):
            out[:, a, :] = self.beta[i](t, x, self.controls.points[ci], ci, e=e, u2=self.controls.u2_at(ci, a))
        return out

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "dimension": self.dimension,
            "horizon": self.horizon,
            "coefficients": {
                "mu_x": self.mu_x.to_doc(),
                "sigma_x": self.sigma_x.to_doc(),
                "beta": [b.to_doc() for b in self.beta],
            },
            "marks": [{"atoms": a.tolist()} for a in self.marks.atoms],
            "controls": {"points": self.controls.points.tolist(), "unbounded": self.controls.unbounded},
            "payoff": self.payoff.to_doc(),
            "max_simultaneous_jumps": self.max_simultaneous_jumps,
        }
        if self.controls.u2 is not None:
            doc["controls"]["u2"] = self.controls.u2.tolist()
        if self.target is not None:
            doc["target"] = self.target.to_doc()
        if self.aux_g is not None:
            doc["aux_g"] = dict(self.aux_g)
        if self.growth_constant is not None:
            doc["growth_constant"] = self.growth_constant
        if self.lipschitz_constant is not None:
            doc["lipschitz_constant"] = self.lipschitz_constant
        if self.name:
            doc["name"] = self.name
        return doc


def model_from_doc(doc: Mapping[str, Any]) -> ControlledJumpModel:
    if not isinstance(doc, Mapping):
        raise ModelError("model document must be a JSON object")
    for key in ("dimension", "horizon", "coefficients", "controls", "payoff"):
        if key not in doc:
            raise ModelError(f"missing required field {key!r}")
    d = int(doc["dimension"])
    if d < 1:
        raise ModelError("dimension must be >= 1")
    horizon = float(_real(doc["horizon"]))
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ModelError("horizon must be positive and finite")

    marks_doc = doc.get("marks", [])
    atoms = []
    for i, m in enumerate(marks_doc):
        a = np.asarray(_real(m.get("atoms", [])), dtype=float)
        if a.ndim != 2 or a.shape[-1] != 2:
            raise ModelError(f"mark {i}: atoms must be [[e, weight], ...]")
        atoms.append(a)
    marks = MarkMeasure(tuple(atoms))

    cdoc = doc["controls"]
    points = np.asarray(_real(cdoc.get("points", [])), dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    u2 = None
    if cdoc.get("u2") is not None:
        raw = _real(cdoc["u2"])
        # either flat [point][atom] or nested [point][mark][atom]
        rows = []
        for r in raw:
            flat = [v for part in r for v in (part if isinstance(part, list) else [part])]
            rows.append(flat)
        u2 = _array(rows, (points.shape[0], marks.n_atoms), "controls.u2")
    controls = ControlGrid(points, u2, bool(cdoc.get("unbounded", False)))
    q, k = points.shape[1], points.shape[0]

    coeffs = doc["coefficients"]
    if "mu_x" not in coeffs or "sigma_x" not in coeffs:
        raise ModelError("coefficients must define mu_x and sigma_x")
    mu_x = CoefficientField.parse(coeffs["mu_x"], (d,), d, q, k, "mu_x")
    sigma_x = CoefficientField.parse(coeffs["sigma_x"], (d, d), d, q, k, "sigma_x")
    beta = _parse_fields(coeffs.get("beta"), marks.n_marks, (d,), d, q, k, "beta")

    target = None
    tdoc = doc.get("target")
    if tdoc is not None:
        if tdoc.get("embedding"):
            target = TargetCoefficients(embedding=True)
        else:
            target = TargetCoefficients(
                mu_y=CoefficientField.parse(tdoc.get("mu_y", {"family": "constant"}), (), d, q, k, "target.mu_y"),
                sigma_y=CoefficientField.parse(tdoc.get("sigma_y", {"family": "constant"}), (d,), d, q, k, "target.sigma_y"),
                b=_parse_fields(tdoc.get("b"), marks.n_marks, (), d, q, k, "target.b"),
            )

    payoff = Payoff.parse(doc["payoff"], d)
    aux_g = doc.get("aux_g")
    if aux_g is not None and not isinstance(aux_g, Mapping):
        raise ModelError("aux_g must be an object")

    def opt_float(key):
        v = doc.get(key)
        return None if v is None else float(_real(v))

    model = ControlledJumpModel(
        dimension=d, horizon=horizon, mu_x=mu_x, sigma_x=sigma_x, beta=beta, marks=marks,
        controls=controls, payoff=payoff, target=target,
        aux_g=None if aux_g is None else _real_tree(aux_g),
        growth_constant=opt_float("growth_constant"), lipschitz_constant=opt_float("lipschitz_constant"),
        max_simultaneous_jumps=int(doc.get("max_simultaneous_jumps", 1)), name=str(doc.get("name", "")),
    )
    _check_payoff_bound(model)
    return model


def _real_tree(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {k: _real_tree(v) if k not in ("family",) else v for k, v in obj.items()}
    return _real(obj)


def _check_payoff_bound(model: ControlledJumpModel) -> None:
    # cheap probe at load; validate_assumptions does the full sweep
    pts = np.linspace(-10.0, 10.0, 201)
    probe = np.stack([pts] * model.dimension, axis=1)
    gv = model.payoff(probe)
    if np.any(np.abs(gv) > model.g_sup + 1e-12):
        raise ModelError("payoff exceeds its declared sup_bound (g must be bounded by sup_bound)")


def load_model(document: str | Mapping[str, Any]) -> ControlledJumpModel:
    """Parse and validate a model document (JSON text or an already-decoded dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
    return model_from_doc(document)


def emit_model(model: ControlledJumpModel) -> str:
    return json.dumps(model.to_doc(), sort_keys=True, indent=2)


def eval_coefficients(model: ControlledJumpModel, t: float, x: Any, u: Any):
    """Return (mu_X, sigma_X, beta) at a single point; beta has one row per atom."""
    ci = model.controls.index(u)
    xp = as_points(x, model.dimension)
    if xp.shape[0] != 1:
        raise ValueError("eval_coefficients takes a single state")
    mu = model.drift(t, xp, ci)[0]
    sig = model.vol(t, xp, ci)[0]
    beta = model.jump_sizes(t, xp, ci)[0]
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sig)) and np.all(np.isfinite(beta))):
        raise ValueError("non-finite coefficient value")
    return mu, sig, beta


# --------------------------------------------------------------------------
# assumption probing


@dataclass
class CheckResult:
    passed: bool
    measured: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed,
                "checks": {k: {"passed": c.passed, "measured": c.measured, "detail": c.detail}
                           for k, c in sorted(self.checks.items())}}


def default_probes(model: ControlledJumpModel, n_t: int = 3, n_x: int = 21, radius: float = 10.0):
    ts = np.linspace(0.0, model.horizon, n_t)
    axis = np.linspace(-radius, radius, n_x)
    mesh = np.meshgrid(*([axis] * model.dimension), indexing="ij")
    xs = np.stack([m.ravel() for m in mesh], axis=1)
    return ts, xs, list(range(model.n_controls))


def _lipschitz(values: np.ndarray, xs: np.ndarray, max_pairs: int = 20000) -> float:
    n = xs.shape[0]
    best = 0.0
    flat = values.reshape(n, -1)
    pairs = combinations(range(n), 2)
    for count, (i, j) in enumerate(pairs):
        if count >= max_pairs:
            break
        dx = np.linalg.norm(xs[i] - xs[j])
        if dx > 0:
            best = max(best, float(np.linalg.norm(flat[i] - flat[j]) / dx))
    return best


def validate_assumptions(model: ControlledJumpModel, probes=None) -> ValidationReport:
    """Probe the standing assumptions on a finite grid of (t, x, u).

    ``probes`` is ``(ts, xs, control_indices)``; the report is monotone in the
    probe set (more probes can only reveal more failures).
    """
    ts, xs, cis = default_probes(model) if probes is None else probes
    xs = as_points(xs, model.dimension)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if xs.shape[0] == 0 or ts.size == 0 or len(cis) == 0:
        raise ValueError("probes must be nonempty")
    rep = ValidationReport()

    w = model.marks.weight
    rep.checks["finite_mass"] = CheckResult(
        bool(np.all(w >= 0) and math.isfinite(model.marks.total_mass)), model.marks.total_mass,
        "finite intensity, nonnegative atoms")

    gv = model.payoff(xs)
    worst = float(np.max(np.abs(gv)))
    rep.checks["payoff_bound"] = CheckResult(worst <= model.g_sup + 1e-12, worst,
                                             f"|g| <= sup_bound={model.g_sup}")

    ratio, finite, lip = 0.0, True, 0.0
    xnorm = np.linalg.norm(xs, axis=1)
    for t in ts:
        for ci in cis:
            mu = model.drift(t, xs, ci)
            sig = model.vol(t, xs, ci)
            beta = model.jump_sizes(t, xs, ci)
            finite &= bool(np.all(np.isfinite(mu)) and np.all(np.isfinite(sig)) and np.all(np.isfinite(beta)))
            size = np.linalg.norm(mu, axis=1) + np.linalg.norm(sig.reshape(len(xs), -1), axis=1)
            unorm = model.controls.norm(ci, w)
            ratio = max(ratio, float(np.max(size / (1.0 + xnorm + unorm))))
            for arr in (mu, sig, beta):
                lip = max(lip, _lipschitz(arr, xs))
    rep.checks["finite_coefficients"] = CheckResult(finite, float(finite), "coefficients finite on probes")
    if model.growth_constant is None:
        rep.checks["linear_growth"] = CheckResult(True, ratio, "no growth constant declared; measured ratio reported")
    else:
        rep.checks["linear_growth"] = CheckResult(ratio <= model.growth_constant + 1e-12, ratio,
                                                  f"|mu|+|sigma| <= L(1+|x|+|u|), L={model.growth_constant}")
    if model.lipschitz_constant is None:
        rep.checks["lipschitz"] = CheckResult(True, lip, "no Lipschitz constant declared; measured constant reported")
    else:
        rep.checks["lipschitz"] = CheckResult(lip <= model.lipschitz_constant + 1e-12, lip,
                                              f"Lipschitz in x, declared {model.lipschitz_constant}")
    return rep


_KIND_ALIASES = {
    "zero_sum": "zero_sum", "unco": "zero_sum", "H": "zero_sum",
    "cooperative": "cooperative", "co": "cooperative", "F": "cooperative",
}


def normalize_kind(kind: str) -> str:
    """Map zero_sum/unco/H and cooperative/co/F to 'zero_sum' or 'cooperative'."""
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown game kind {kind!r}") from None
