# Game value as the smallest / largest start of a martingale that dominates /
# is dominated by the payoff at every stopping rule in a battery.

from jumpstop import (SolverGrid, canned_model, estimate_target_bound, extract_policy, hedge_from_surface,
                      solve_game)
from jumpstop.simulate import default_rules

model = canned_model("singleton_diffusion")
grid = SolverGrid.uniform(1.0, 2000, -2.0, 2.0, 200)
surface = solve_game(model, "zero_sum", grid)
v = surface.at(0.0, [0.5])
print(f"PIDE value V(0, 0.5) = {v:.4f}")

mc = hedge_from_surface(model, surface)  # alpha = sigma * dV/dx, gamma = jump in V
rules = default_rules(model, 0.0, policy=extract_policy(surface))
for kind in ("zero_sum", "cooperative"):
    est = estimate_target_bound(model, kind, 0.0, [0.5], mc, rules, n_paths=2000, seed=8, n_steps=1000)
    print(f"{kind:12s} target estimate {est.estimate:.4f} (stderr {est.stderr:.1e}, rule #{est.critical_rule})")
