"""Acceptance suite: one test per criterion, each recording a pass/fail line.

The lines are printed as each test runs and again, collected, in the pytest
terminal summary under "acceptance criteria".
"""
from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import verdict
from jumpstop import (AuxGSpec, SolverGrid, TestFunction, build_envelopes, canned_model, canned_names,
                      check_envelope_bounds, estimate_target_bound, extract_policy, facelift_terminal,
                      game_hamiltonian, hedge_from_surface, mc_game_value, nonlocal_apply, oracle_value,
                      relaxed_operator, snell_value, solve_game)
from jumpstop.cli import main
from jumpstop.simulate import default_rules

GRID = SolverGrid.uniform(1.0, 2000, -2.0, 2.0, 200)
KINDS = ("zero_sum", "cooperative")
POISSON_GRID = SolverGrid.uniform(1.0, 1000, -1.0, 2.0, 30)  # jumps of +1 land on nodes


@pytest.fixture(scope="module")
def solved():
    """Every canned model, both games, on the 200 x 2000 grid, with wall-clock time per solve."""
    out = {}
    for name in canned_names():
        model = canned_model(name)
        for kind in KINDS:
            start = time.perf_counter()
            surf = solve_game(model, kind, GRID)
            out[name, kind] = (model, surf, time.perf_counter() - start)
    return out


@pytest.fixture(scope="module")
def refinement():
    model = canned_model("diffusion_drift")
    coarse = SolverGrid.uniform(1.0, 5200, -2.0, 2.0, 400)  # dx = 0.01
    start = time.perf_counter()
    rows = []
    for grid in (coarse, coarse.refine(2)):
        s = solve_game(model, "zero_sum", grid)
        o = oracle_value(model, "zero_sum", grid)
        sc = solve_game(model, "cooperative", grid)
        oc = oracle_value(model, "cooperative", grid)
        gap = max(np.max(np.abs(s.values - o.values)), np.max(np.abs(sc.values - oc.values)))
        rows.append((grid, float(gap), [s, o, sc, oc]))
    return model, rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def poisson():
    model = canned_model("poisson_jump")
    surf = solve_game(model, "zero_sum", POISSON_GRID)
    return model, surf


@pytest.fixture(scope="module")
def degenerate():
    model = canned_model("singleton_diffusion")
    return model, {kind: solve_game(model, kind, GRID) for kind in KINDS}, snell_value(model, GRID, 0)


def test_criterion_01_obstacle(solved):
    worst = max(float(np.max(np.maximum(m.payoff(s.grid.nodes) - s.values, 0.0))) for m, s, _ in solved.values())
    slowest = max(dt for _, _, dt in solved.values())
    ok = worst <= 1e-12 and slowest <= 10.0
    assert verdict(1, "V >= g on every node", ok,
                   f"{len(solved)} surfaces, worst violation {worst:.2e}, slowest solve {slowest:.2f}s")


def test_criterion_02_ordering(solved):
    worst = max(float(np.max(solved[n, "zero_sum"][1].values - solved[n, "cooperative"][1].values))
                for n in canned_names())
    assert verdict(2, "zero-sum <= cooperative", max(worst, 0.0) <= 1e-12, f"max(zs - co) = {worst:.2e}")


def test_criterion_03_oracle_equivalence(refinement):
    _, rows, elapsed = refinement
    (g0, gap0, _), (g1, gap1, _) = rows
    ok = gap0 <= 5e-2 and gap1 < gap0 and elapsed <= 60.0
    assert verdict(3, "solver vs chain oracle", ok,
                   f"gap {gap0:.2e} at dx={g0.dx[0]:g}, {gap1:.2e} at dx={g1.dx[0]:g}, {elapsed:.1f}s")


def test_criterion_04_poisson_benchmark(poisson):
    model, surf = poisson
    exact = 1 - math.exp(-1)
    v = surf.at(0.0, [0.0])
    est, se = mc_game_value(model, extract_policy(surf), 0.0, [0.0], 100_000, seed=2024)
    ok = abs(v - exact) <= 2e-2 and abs(est - exact) <= 3 * se
    assert verdict(4, "Poisson value 1 - 1/e", ok,
                   f"solver {v:.6f}, MC {est:.6f} +/- {se:.2e}, exact {exact:.6f}")


def test_criterion_05_degenerate_equality(degenerate):
    _, surfs, snell = degenerate
    d1 = float(np.max(np.abs(surfs["zero_sum"].values - surfs["cooperative"].values)))
    d2 = float(np.max(np.abs(surfs["zero_sum"].values - snell.values)))
    assert verdict(5, "single control: zs = co = Snell", max(d1, d2) <= 1e-12, f"|zs-co| {d1:.1e}, |zs-snell| {d2:.1e}")


def test_criterion_06_terminal_conditions(solved):
    exact = all(np.array_equal(s.values[-1], m.payoff(s.grid.nodes)) for (_, k), (m, s, _) in solved.items()
                if k == "zero_sum")
    unit = AuxGSpec("constant", {"value": 1.0})
    lifts = []
    for name in canned_names():
        model = canned_model(name)
        res = facelift_terminal(model, GRID, unit)
        co = solve_game(model, "cooperative", SolverGrid.uniform(1.0, 2000, -2.0, 2.0, 200), facelift=True, gspec=unit)
        g = model.payoff(GRID.nodes)
        lifts.append(np.array_equal(res.profile, g) and res.residual == 0.0 and np.array_equal(co.values[-1], g))
    ok = exact and all(lifts)
    assert verdict(6, "terminal slice and unit face-lift", ok,
                   f"zero-sum V(T)=g exact: {exact}; G=1 gives ghat=g, residual 0: {all(lifts)}")


def test_criterion_07_envelopes(solved, refinement, poisson, degenerate):
    surfaces = [(m, s) for m, s, _ in solved.values()]
    model3, rows, _ = refinement
    surfaces += [(model3, s) for _, _, group in rows for s in group]
    surfaces.append(poisson)
    dm, dsurfs, snell = degenerate
    surfaces += [(dm, s) for s in dsurfs.values()] + [(dm, snell)]
    envs = {}
    violations, worst = 0, math.inf
    for model, surf in surfaces:
        env = envs.setdefault(id(model), build_envelopes(model))
        rep = check_envelope_bounds(surf, env)
        violations += rep.violations
        worst = min(worst, rep.worst_upper_margin, rep.worst_lower_margin)
    assert verdict(7, "surfaces inside [w-, w+]", violations == 0,
                   f"{len(surfaces)} surfaces, {violations} violations, smallest margin {worst:.3f}")


def test_criterion_08_embedding(degenerate):
    model, surfs, _ = degenerate
    surf = surfs["zero_sum"]
    v = surf.at(0.0, [0.5])
    mc = hedge_from_surface(model, surf)
    rules = default_rules(model, 0.0, policy=extract_policy(surf))
    lines, ok = [], True
    for kind in KINDS:
        est = estimate_target_bound(model, kind, 0.0, [0.5], mc, rules, n_paths=2000, seed=8, n_steps=1000)
        good = abs(est.estimate - v) <= 3 * est.stderr + 5e-2
        ok &= good
        lines.append(f"{kind} {est.estimate:.4f} (se {est.stderr:.1e})")
    assert verdict(8, "target bound reproduces the game value", ok, f"V={v:.4f}; " + ", ".join(lines))


def test_criterion_09_hamiltonians():
    rng = np.random.default_rng(9)
    model = canned_model("jump_diffusion")
    grid = SolverGrid.uniform(1.0, 1, -4.0, 4.0, 40)
    below = True
    linear = 0.0
    for _ in range(200):
        f, g = rng.normal(size=grid.n_nodes), rng.normal(size=grid.n_nodes)
        a, b = rng.uniform(-3, 3, 2)
        phi = TestFunction.tabulated(grid, f)
        x, p, A = [rng.uniform(-3, 3)], [rng.uniform(-3, 3)], [[rng.uniform(-5, 5)]]
        below &= (game_hamiltonian(model, "cooperative", 0.0, x, p, A, phi).value
                  <= game_hamiltonian(model, "zero_sum", 0.0, x, p, A, phi).value)
        for ci in range(model.n_controls):
            u = model.controls.points[ci]
            mix = nonlocal_apply(model, TestFunction.tabulated(grid, a * f + b * g), 0.0, x, u)
            sep = a * nonlocal_apply(model, phi, 0.0, x, u) + b * nonlocal_apply(model, TestFunction.tabulated(grid, g), 0.0, x, u)
            linear = max(linear, abs(mix - sep) / max(1.0, abs(mix)))

    from helpers import affine, const, make_model

    target = make_model(sigma_x=const([[1.0]]), marks=[{"atoms": [[1.0, 1.0]]}], beta=[const([0.0])],
                        controls={"points": [[-1.0], [-0.5], [0.0], [0.5], [1.0]]},
                        target={"mu_y": affine(u=[2.0]), "sigma_y": affine(u=[[1.0]]), "b": [affine(u=[1.0])]})
    square = TestFunction(lambda t, x: x[:, 0] ** 2, 1)
    monotone = True
    for kind, sign in (("zero_sum", -1), ("cooperative", 1)):
        counts = np.array([[relaxed_operator(target, kind, e, h, 0.0, [0.0], 0.0, [0.3], [[0.0]], square).feasible_count
                            for h in np.linspace(-1.0, 1.0, 10)] for e in np.linspace(0.0, 2.0, 10)])
        monotone &= bool(np.all(np.diff(counts, axis=0) >= 0) and np.all(sign * np.diff(counts, axis=1) >= 0))
        monotone &= counts.min() < counts.max()
    ok = below and linear <= 1e-12 and monotone
    assert verdict(9, "Hamiltonian properties", ok,
                   f"F <= H: {below}; linearity defect {linear:.1e}; relaxed counts monotone: {monotone}")


def _artifacts(out: Path) -> dict[str, bytes]:
    common = ["--out", str(out)]
    grid = ["--grid", "nx=40,nt=200,xlo=-2,xhi=2"]
    runs = [
        ["validate", "--model", "canned:jump_diffusion"],
        ["solve", "--model", "canned:jump_diffusion", *grid, "--x0", "0.2"],
        ["oracle", "--model", "canned:jump_diffusion", *grid],
        ["facelift", "--model", "canned:unbounded_jump", *grid],
        ["simulate", "--model", "canned:jump_diffusion", *grid, "--x0", "0.2", "--paths", "5000", "--seed", "3",
         "--dump-paths", "4"],
        ["target", "--model", "canned:singleton_diffusion", *grid, "--x0", "0.5", "--paths", "500", "--seed", "3"],
    ]
    for argv in runs:
        assert main([*argv, *common]) == 0
    assert main(["compare", str(out / "surface.csv"), str(out / "oracle.csv"), "--tol", "1", *common]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_criterion_10_determinism(tmp_path, monkeypatch):
    first = _artifacts(tmp_path)
    monkeypatch.setenv("JUMPSTOP_THREADS", "3")
    second = _artifacts(tmp_path)
    same = first.keys() == second.keys() and all(first[k] == second[k] for k in first)
    assert verdict(10, "byte-identical reruns", same and len(first) >= 10,
                   f"{len(first)} artifacts compared, identical: {same}")
