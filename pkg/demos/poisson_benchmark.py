# Pure-jump benchmark: one unit jump at rate 1, payoff clip(x, 0, 1).
# Starting at 0 the stopper wins 1 iff a jump arrives before T = 1,
# so the game value is the Poisson probability 1 - exp(-1).

import math

from jumpstop import SolverGrid, canned_model, extract_policy, mc_game_value, solve_game

model = canned_model("poisson_jump")
grid = SolverGrid.uniform(1.0, 1000, -1.0, 2.0, 30)  # dx = 0.1, jumps land on nodes

surface = solve_game(model, "zero_sum", grid)
v = surface.at(0.0, [0.0])
print(f"solver value       {v:.6f}")
print(f"exact 1 - 1/e      {1 - math.exp(-1):.6f}")
print(f"(1 - dt)^N version {1 - (1 - grid.dt) ** grid.nt:.6f}  <- what the explicit step reproduces")

# Monte-Carlo under the policy read off the surface: stop as soon as x >= 1.
est, se = mc_game_value(model, extract_policy(surface), 0.0, [0.0], 100_000, seed=1)
print(f"Monte-Carlo        {est:.6f} +/- {se:.4f}")
