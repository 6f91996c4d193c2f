# Zero-sum vs cooperative games on two canned models, and the Markov-chain
# oracle as an independent check of the PIDE solver.

import numpy as np

from jumpstop import SolverGrid, canned_model, oracle_value, solve_game

# 1. Deterministic drift x' = u, u in {-1, 0, 1}, tent payoff peaked at 0.
#    Starting at 0.5 the controller can run away from the peak (zero-sum)
#    or steer into it (cooperative).
model = canned_model("drift_tent")
grid = SolverGrid.uniform(1.0, 400, -2.0, 2.0, 200)
for kind in ("zero_sum", "cooperative"):
    v = solve_game(model, kind, grid).at(0.0, [0.5])
    print(f"drift_tent  {kind:12s} V(0, 0.5) = {v:.4f}")

# 2. Diffusion with controlled drift: compare with the chain oracle and refine.
model = canned_model("diffusion_drift")
grid = SolverGrid.uniform(1.0, 5200, -2.0, 2.0, 400)
for level in range(2):
    s = solve_game(model, "cooperative", grid)
    o = oracle_value(model, "cooperative", grid)
    gap = np.max(np.abs(s.values - o.values))
    print(f"diffusion_drift dx={grid.dx[0]:.4f} dt={grid.dt:.2e}  V(0,0.5)={s.at(0.0, [0.5]):.5f}  sup gap {gap:.2e}")
    grid = grid.refine(2)

# 3. Stop region of the cooperative game at a few times: where g >= continuation.
#    Far from the peak g = V = 0 and the tie counts as stopping; only g > 0 is shown.
s = solve_game(model, "cooperative", SolverGrid.uniform(1.0, 2000, -2.0, 2.0, 200))
for t in (0.0, 0.5, 0.9, 0.99):
    k = s.grid.time_index(t)
    xs = s.grid.nodes[s.stop[k] & (model.payoff(s.grid.nodes) > 0), 0]
    print(f"t={t:.2f}: stop where g > 0 on {xs.size} nodes, x in [{xs.min():+.2f}, {xs.max():+.2f}]")
