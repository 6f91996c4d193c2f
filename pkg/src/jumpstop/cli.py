"""Command-line front door: one subcommand per pipeline stage.

Exit status: 0 success, 1 validation failure or unusable input, 2 tolerance
breach in ``compare``.  Artifacts go to ``--out`` (default ``.``).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .canned import canned_document
from .envelopes import build_envelopes
from .grid import CFLError, SolverGrid, parse_grid_spec
from .io import dumps_json, fmt, paths_csv, profile_csv, read_surface_csv, surface_csv, write_text
from .model import ControlledJumpModel, ModelError, load_model, normalize_kind, validate_assumptions
from .oracle import oracle_value
from .simulate import default_rules, estimate_target_bound, hedge_from_surface, mc_game_value, simulate_paths
from .solver import AuxGSpec, FaceliftError, SolverError, check_envelope_bounds, facelift_terminal, solve_game
from .surface import extract_policy

log = logging.getLogger("jumpstop")

VERSION = f"v{__version__}"


class InputError(Exception):
    pass


def _read_model(ref: str) -> ControlledJumpModel:
    try:
        if ref.startswith("canned:"):
            return load_model(canned_document(ref.split(":", 1)[1]))
        return load_model(Path(ref).read_text())
    except (OSError, KeyError) as exc:
        raise InputError(f"cannot read model {ref!r}: {exc}") from exc


def _grid(args, model: ControlledJumpModel) -> SolverGrid:
    if not args.grid:
        raise InputError("--grid is required for this command")
    try:
        return parse_grid_spec(args.grid, model.horizon, model.dimension)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _point(text: str | None, d: int) -> np.ndarray | None:
    if text is None:
        return None
    vals = [float(v) for v in text.split(",")]
    if len(vals) != d:
        raise InputError(f"--x0 needs {d} comma-separated values")
    return np.asarray(vals)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _summary(args, **payload) -> dict:
    return {"version": VERSION, "config": _config(args), **payload}


def _out(args) -> Path:
    return Path(args.out)


def _emit(args, name: str, text: str) -> None:
    path = write_text(_out(args) / name, text)
    log.info("wrote %s", path)


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    try:
        model = _read_model(args.model)
    except ModelError as exc:
        _emit(args, "validate.json", dumps_json(_summary(args, passed=False, error=str(exc))))
        print(f"invalid model: {exc}", file=sys.stderr)
        return 1
    rep = validate_assumptions(model)
    _emit(args, "validate.json", dumps_json(_summary(args, **rep.to_dict())))
    for name, check in sorted(rep.checks.items()):
        print(f"{'ok  ' if check.passed else 'FAIL'} {name}: {check.detail} (measured {check.measured:.6g})")
    return 0 if rep.passed else 1


def _facelift_flag(args):
    return {"auto": None, "on": True, "off": False}[args.facelift]


def _envelope_report(model, surface) -> dict:
    try:
        env = build_envelopes(model)
    except ValueError as exc:
        return {"error": str(exc)}
    return {"constants": env.to_dict(), "bounds": check_envelope_bounds(surface, env).to_dict()}


def cmd_solve(args) -> int:
    model = _read_model(args.model)
    grid = _grid(args, model)
    surface = solve_game(model, args.kind, grid, facelift=_facelift_flag(args))
    _emit(args, "surface.csv", surface_csv(surface))
    payload = {"kind": surface.kind, "envelopes": _envelope_report(model, surface)}
    x0 = _point(args.x0, model.dimension)
    if x0 is not None:
        payload["value_at_x0"] = surface.at(args.t0, x0)
    _emit(args, "solve.json", dumps_json(_summary(args, **payload)))
    return 0


def cmd_facelift(args) -> int:
    model = _read_model(args.model)
    grid = _grid(args, model)
    spec = AuxGSpec.from_model(model)
    res = facelift_terminal(model, grid, spec)
    _emit(args, "terminal.csv", profile_csv(grid, model.payoff(grid.nodes), res.profile))
    _emit(args, "facelift.json", dumps_json(_summary(args, gspec={"family": spec.family, "params": dict(spec.params)},
                                                      residual=res.residual, iterations=res.iterations)))
    return 0


def cmd_oracle(args) -> int:
    model = _read_model(args.model)
    grid = _grid(args, model)
    surface = oracle_value(model, args.kind, grid)
    _emit(args, "oracle.csv", surface_csv(surface))
    return 0


def cmd_simulate(args) -> int:
    model = _read_model(args.model)
    grid = _grid(args, model)
    x0 = _point(args.x0, model.dimension)
    if x0 is None:
        raise InputError("simulate needs --x0")
    surface = solve_game(model, args.kind, grid, facelift=_facelift_flag(args))
    policy = extract_policy(surface)
    est, err = mc_game_value(model, policy, args.t0, x0, args.paths, args.seed)
    _emit(args, "simulate.json", dumps_json(_summary(args, estimate=est, stderr=err, n_paths=args.paths,
                                                      seed=args.seed, solver_value=surface.at(args.t0, x0))))
    if args.dump_paths:
        paths = simulate_paths(model, policy, args.t0, x0, args.dump_paths, args.seed)
        _emit(args, "paths.csv", paths_csv(paths, model))
    return 0


def cmd_target(args) -> int:
    model = _read_model(args.model)
    grid = _grid(args, model)
    x0 = _point(args.x0, model.dimension)
    if x0 is None:
        raise InputError("target needs --x0")
    surface = solve_game(model, args.kind, grid, facelift=_facelift_flag(args))
    mc = hedge_from_surface(model, surface)
    rules = default_rules(model, args.t0, policy=extract_policy(surface))
    res = estimate_target_bound(model, args.kind, args.t0, x0, mc, rules, n_paths=args.paths, seed=args.seed,
                                n_steps=args.steps)
    _emit(args, "target.json", dumps_json(_summary(args, **res.to_dict(), solver_value=surface.at(args.t0, x0))))
    return 0


def cmd_compare(args) -> int:
    a = read_surface_csv(args.a)
    b = read_surface_csv(args.b)
    if a.x.shape != b.x.shape or np.any(np.abs(a.t - b.t) > 1e-12) or np.any(np.abs(a.x - b.x) > 1e-12):
        raise InputError("surfaces are not on the same grid")
    diff = np.abs(a.value - b.value)
    sup = float(diff.max()) if diff.size else 0.0
    d = a.x.shape[1]
    lines = [",".join(["t", *(f"x{i + 1}" for i in range(d)), "a", "b", "abs_diff"])]
    for k in range(len(diff)):
        lines.append(",".join([fmt(a.t[k]), *(fmt(v) for v in a.x[k]), fmt(a.value[k]), fmt(b.value[k]), fmt(diff[k])]))
    _emit(args, "diff.csv", "\n".join(lines) + "\n")
    payload = {"sup_norm": sup, "tol": args.tol, "within_tol": sup <= args.tol}
    if args.model:
        model = _read_model(args.model)
        payload["envelopes"] = {"a": _envelope_report(model, a.to_surface()), "b": _envelope_report(model, b.to_surface())}
    _emit(args, "compare.json", dumps_json(_summary(args, **payload)))
    print(f"sup-norm {sup:.6e} (tol {args.tol:g})")
    return 0 if sup <= args.tol else 2


# --------------------------------------------------------------------------


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumpstop", description="Controller-stopper games with controlled jumps.")
    p.add_argument("--version", action="version", version=VERSION)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True, kind=True):
        sp.add_argument("--model", required=True, help="model JSON path or canned:<name>")
        if grid:
            sp.add_argument("--grid", help="nx=..,nt=..,xlo=..,xhi=..")
        if kind:
            sp.add_argument("--kind", default="zero_sum", type=normalize_kind, help="zero_sum | cooperative")
            sp.add_argument("--facelift", choices=("auto", "on", "off"), default="auto")
        sp.add_argument("--out", default=".")

    sp = sub.add_parser("validate", help="probe the model assumptions")
    common(sp, grid=False, kind=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="PIDE value surface as CSV")
    common(sp)
    sp.add_argument("--x0")
    sp.add_argument("--t0", type=float, default=0.0)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("facelift", help="face-lifted terminal profile as CSV")
    common(sp, kind=False)
    sp.set_defaults(func=cmd_facelift)

    sp = sub.add_parser("oracle", help="Markov-chain oracle surface as CSV")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    for name, func, help_ in (("simulate", cmd_simulate, "Monte-Carlo game value under the solver policy"),
                              ("target", cmd_target, "bisection estimate of the target bound")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--x0")
        sp.add_argument("--t0", type=float, default=0.0)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--paths", type=int, default=10_000)
        if name == "simulate":
            sp.add_argument("--dump-paths", type=int, default=0)
        else:
            sp.add_argument("--steps", type=int, default=None)
        sp.set_defaults(func=func)

    sp = sub.add_parser("compare", help="sup-norm and node-wise differences of two surface CSVs")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--tol", type=_positive, default=1e-12)
    sp.add_argument("--model", help="optional model for the envelope report")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModelError, CFLError, SolverError, FaceliftError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
