from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import RAMP, TENT, THREE, affine, const, make_model
from jumpstop import (AuxGSpec, CFLError, SolverGrid, build_envelopes, canned_model, check_envelope_bounds,
                      extract_policy, facelift_terminal, oracle_value, solve_game)
from jumpstop.envelopes import EnvelopePair
from jumpstop.solver import FaceliftError, SolverError, cfl_number


def tabulated_payoff(values, lo=-2.0, hi=2.0):
    xs = np.linspace(lo, hi, len(values))
    return {"family": "tabulated", "params": {"x": xs.tolist(), "values": list(map(float, values))},
            "sup_bound": float(np.max(np.abs(values)))}


def test_frozen_dynamics_keep_the_payoff(small_grid):
    m = make_model(payoff=TENT)
    for kind in ("zero_sum", "cooperative"):
        s = solve_game(m, kind, small_grid)
        assert np.array_equal(s.values, np.tile(m.payoff(small_grid.nodes), (small_grid.nt + 1, 1)))
        assert s.stop.all()
        assert extract_policy(s).stop.all()


def test_drift_tent_values():
    m = canned_model("drift_tent")
    grid = SolverGrid.uniform(1.0, 400, -2.0, 2.0, 200)
    dx = grid.dx[0]
    co = solve_game(m, "cooperative", grid)
    zs = solve_game(m, "zero_sum", grid)
    assert abs(co.at(0.0, [0.5]) - 1.0) <= 2 * dx
    assert abs(zs.at(0.0, [0.5]) - 0.5) <= 2 * dx
    assert zs.stop[0, grid.nearest_node(np.array([[0.5]]))[0]]


def test_drift_tent_policy_steers_to_the_peak():
    m = canned_model("drift_tent")
    grid = SolverGrid.uniform(1.0, 400, -2.0, 2.0, 200)
    pol = extract_policy(solve_game(m, "cooperative", grid))
    x = grid.nodes[:, 0]
    sel = (np.abs(x) > 2 * grid.dx[0]) & (np.abs(x) < 1.0) & ~pol.stop[0]
    assert sel.sum() > 50
    u = m.controls.points[pol.control[0, sel], 0]
    assert np.array_equal(u, -np.sign(x[sel]))


def test_poisson_value_matches_discrete_and_analytic_probability():
    m = canned_model("poisson_jump")
    grid = SolverGrid.uniform(1.0, 1000, -1.0, 2.0, 30)
    v = solve_game(m, "zero_sum", grid).at(0.0, [0.0])
    assert abs(v - (1 - math.exp(-1))) <= 2e-2
    assert v == pytest.approx(1 - (1 - 1e-3) ** 1000, abs=1e-12)


def test_singleton_policy_is_constant(small_grid):
    m = canned_model("singleton_diffusion")
    pol = extract_policy(solve_game(m, "zero_sum", small_grid))
    assert np.all(pol.control == 0)


def test_cfl_breach_is_reported():
    m = make_model(sigma_x=const([[1.0]]))
    grid = SolverGrid.uniform(1.0, 10, -1.0, 1.0, 40)
    assert cfl_number(m, grid) > 1
    with pytest.raises(CFLError):
        solve_game(m, "zero_sum", grid)


def test_non_finite_values_are_reported():
    m = make_model(sigma_x=const([[1.0]]), payoff=TENT)
    grid = SolverGrid.uniform(1.0, 300, -1.0, 1.0, 200)
    with pytest.raises(SolverError, match="non-finite"):
        solve_game(m, "zero_sum", grid, check_cfl=False)


def test_non_dominant_diffusion_rejected():
    m = make_model(dimension=2, mu_x=const([0.0, 0.0]), sigma_x=const([[1.0, 0.0], [2.0, 0.0]]),
                   payoff={"family": "tent", "params": {"center": [0.0, 0.0]}, "sup_bound": 1.0})
    grid = SolverGrid.uniform(1.0, 400, -1.0, 1.0, 10, d=2)
    with pytest.raises(SolverError, match="diagonally dominant"):
        solve_game(m, "zero_sum", grid)


def test_two_dimensional_solver_tracks_the_oracle():
    m = make_model(dimension=2, mu_x=affine(u=[[0.5], [0.0]]), sigma_x=const([[0.4, 0.0], [0.1, 0.3]]),
                   controls=THREE, payoff={"family": "tent", "params": {"center": [0.0, 0.0]}, "sup_bound": 1.0})
    grid = SolverGrid.uniform(0.5, 100, -1.5, 1.5, 20, d=2)
    for kind in ("zero_sum", "cooperative"):
        s, o = solve_game(m, kind, grid), oracle_value(m, kind, grid)
        assert np.max(np.abs(s.values - o.values)) < 0.05
        assert np.all(s.values >= m.payoff(grid.nodes) - 1e-12)


def test_time_dependent_drift():
    m = make_model(mu_x=affine(t=[1.0], u=[[0.5]]), sigma_x=const([[0.5]]), controls=THREE, payoff=TENT)
    assert not m.time_homogeneous
    grid = SolverGrid.uniform(1.0, 400, -2.0, 2.0, 40)
    s, o = solve_game(m, "cooperative", grid), oracle_value(m, "cooperative", grid)
    assert np.max(np.abs(s.values - o.values)) < 0.05


# ---------------------------------------------------------------- invariants


models = st.sampled_from(["drift_tent", "diffusion_drift", "jump_diffusion", "poisson_jump", "singleton_diffusion"])


@given(models)
def test_obstacle_terminal_and_ordering(name):
    m = canned_model(name)
    grid = SolverGrid.uniform(1.0, 200, -2.0, 2.0, 40)
    zs, co = solve_game(m, "zero_sum", grid), solve_game(m, "cooperative", grid)
    g = m.payoff(grid.nodes)
    for s in (zs, co):
        assert np.min(s.values - g) >= -1e-12
        assert np.array_equal(s.values[-1], g)
        assert np.all(s.argopt[-1] == -1) and s.stop[-1].all()
    assert np.max(zs.values - co.values) <= 1e-12


@given(st.lists(st.floats(0, 1), min_size=9, max_size=9), st.lists(st.floats(0, 0.5), min_size=9, max_size=9),
       st.sampled_from(["zero_sum", "cooperative"]))
def test_monotone_in_payoff(base, bump, kind):
    g1 = np.array(base)
    g2 = g1 + np.array(bump)
    grid = SolverGrid.uniform(1.0, 200, -2.0, 2.0, 40)
    over = dict(mu_x=affine(u=[[0.5]]), sigma_x=const([[0.4]]), controls=THREE,
                marks=[{"atoms": [[1.0, 0.5]]}], beta=[affine(e=[0.3])])
    v1 = solve_game(make_model(payoff=tabulated_payoff(g1), **over), kind, grid).values
    v2 = solve_game(make_model(payoff=tabulated_payoff(g2), **over), kind, grid).values
    assert np.all(v2 >= v1 - 1e-12)


# ---------------------------------------------------------------- face-lift


def test_facelift_with_unit_G_is_the_payoff(small_grid):
    m = canned_model("diffusion_drift")
    res = facelift_terminal(m, small_grid, AuxGSpec())
    assert np.array_equal(res.profile, m.payoff(small_grid.nodes))
    assert res.residual == 0.0


@pytest.mark.parametrize("spec", [AuxGSpec("constant", {"value": 2.0}), AuxGSpec("concave", {"scale": 0.5}),
                                  AuxGSpec("jump_reach")])
def test_facelift_constant_payoff_is_fixed(spec, small_grid):
    m = make_model(payoff={"family": "constant", "params": {"value": 0.3}, "sup_bound": 0.3},
                   marks=[{"atoms": [[1.0, 1.0]]}], beta=[const([0.5])])
    res = facelift_terminal(m, small_grid, spec)
    assert np.array_equal(res.profile, np.full(small_grid.n_nodes, 0.3))


def test_facelift_jump_reach_takes_the_best_landing():
    m = canned_model("unbounded_jump")
    grid = SolverGrid.uniform(1.0, 200, -2.0, 2.0, 40)
    res = facelift_terminal(m, grid)
    x = grid.nodes[:, 0]
    expect = np.max([m.payoff(np.minimum(x + 0.5 * k, 2.0)[:, None]) for k in range(10)], axis=0)
    assert np.allclose(res.profile, expect, atol=1e-9)
    co = solve_game(m, "cooperative", grid)  # face-lift applies by default for unbounded controls
    assert np.array_equal(co.values[-1], res.profile)
    assert np.array_equal(solve_game(m, "zero_sum", grid).values[-1], m.payoff(grid.nodes))


@given(st.lists(st.floats(0, 1), min_size=9, max_size=9), st.lists(st.floats(0, 0.5), min_size=9, max_size=9))
def test_facelift_monotone_in_payoff(base, bump):
    grid = SolverGrid.uniform(1.0, 10, -2.0, 2.0, 16)
    g1 = np.array(base)
    g2 = g1 + np.array(bump)
    spec = AuxGSpec("concave", {"scale": 1.0})
    r1 = facelift_terminal(make_model(payoff=tabulated_payoff(g1)), grid, spec, tol=1e-9)
    r2 = facelift_terminal(make_model(payoff=tabulated_payoff(g2)), grid, spec, tol=1e-9)
    assert np.all(r1.profile >= make_model(payoff=tabulated_payoff(g1)).payoff(grid.nodes))
    assert np.all(r2.profile >= r1.profile - 1e-8)


def test_facelift_reports_non_convergence(small_grid):
    with pytest.raises(FaceliftError) as err:
        facelift_terminal(make_model(payoff=TENT), small_grid, AuxGSpec("concave"), max_iter=5)
    assert err.value.residual > 0


def test_unknown_G_family():
    with pytest.raises(ValueError):
        AuxGSpec("quadratic")


# ---------------------------------------------------------------- envelopes


def test_envelope_examples(small_grid):
    m = canned_model("diffusion_drift")
    env = build_envelopes(m, L=1.0, C=1.0)
    assert (env.k_plus, env.k_minus) == (2.0, 2.0)
    assert env.gamma_plus == pytest.approx(1 + math.e ** 2, rel=1e-15)
    for kind in ("zero_sum", "cooperative"):
        rep = check_envelope_bounds(solve_game(m, kind, small_grid), env)
        assert rep.ok and rep.violations == 0
        assert rep.worst_upper_margin >= 0 and rep.worst_lower_margin >= 0
    c = make_model(payoff={"family": "constant", "params": {"value": 0.4}, "sup_bound": 0.4})
    rep = check_envelope_bounds(solve_game(c, "zero_sum", small_grid), build_envelopes(c))
    assert rep.ok


def test_envelope_violation_is_counted(small_grid):
    m = canned_model("diffusion_drift")
    s = solve_game(m, "zero_sum", small_grid)
    tight = EnvelopePair(0.0, 1.0 + 0.5, 0.0, 2.0, 0.0, 0.0, 0.5, 1.0)  # w+ = 0.5 < max V
    rep = check_envelope_bounds(s, tight)
    assert not rep.ok and rep.violations > 0 and rep.worst_upper_margin < 0
