# With unbounded jump controls the cooperative value jumps at T: the terminal
# datum is the face-lift of g, the smallest function above g that no reachable
# jump can improve on.

import numpy as np

from jumpstop import AuxGSpec, SolverGrid, canned_model, facelift_terminal, solve_game

model = canned_model("unbounded_jump")
grid = SolverGrid.uniform(1.0, 400, -2.0, 2.0, 80)
res = facelift_terminal(model, grid, AuxGSpec.from_model(model))
g = model.payoff(grid.nodes)
print(f"face-lift converged in {res.iterations} iterations, residual {res.residual:.1e}")
for x in (-1.5, -1.0, -0.5, 0.0, 0.5):
    i = int(grid.nearest_node(np.array([[x]]))[0])
    print(f"x={x:+.1f}  g={g[i]:.3f}  ghat={res.profile[i]:.3f}")

co = solve_game(model, "cooperative", grid)  # face-lift applied automatically
print(f"cooperative V(0, -1) = {co.at(0.0, [-1.0]):.4f}, zero-sum V(0, -1) = "
      f"{solve_game(model, 'zero_sum', grid).at(0.0, [-1.0]):.4f}")
