# # Linear models, stability and reachability
#
# A small tour of the state-space tools: simulate a model under box
# constraints, look at its eigenvalues, and check what the inputs can reach.

import numpy as np

from hybridcloud.statespace import (BoxConstraint, LinearModel, affine_rank, classify_stability,
                                    controllability_matrix, eigenvalues, is_controllable,
                                    is_observable, reachable_set_bruteforce, simulate,
                                    spectral_radius, step_response)

# A lightly damped pair: characteristic polynomial z^2 - 0.9 z + 0.5.

A = np.array([[0.0, 1.0], [-0.5, 0.9]])
B = np.array([[0.0], [1.0]])
model = LinearModel(A, B)

print("eigenvalues:", eigenvalues(A))
print("spectral radius:", round(spectral_radius(A), 5), "->", classify_stability(A).value)

# Step response from rest.  The complex pair makes it ring before settling.

traj, cls = step_response(model, channel=0, horizon=60)
print("step response:", cls.value, "final x1 =", round(traj.states[-1, 0], 4))

# Constraints clip the state after each update and every clip is logged.

boxed = LinearModel(A, B, state_box=BoxConstraint([-1.0, -1.0], [1.0, 1.0]))
traj = simulate(boxed, [0.0, 0.0], np.full((20, 1), 2.0))
print("violations logged:", len(traj.violations), "first:", traj.violations[0])

# Controllability: the Kalman matrix [B, AB] against a brute-force check of
# which states three input steps from {-1, 0, 1} can reach.

print("controllability matrix:\n", controllability_matrix(model))
pts = reachable_set_bruteforce(model, [0.0, 0.0], 3, [[-1.0], [0.0], [1.0]])
print("reachable points:", len(pts), "affine rank:", affine_rank(pts),
      "controllable:", is_controllable(model))

# Watching only the first state is enough to reconstruct both.

print("observable from x1:", is_observable(model, [[1.0, 0.0]]))
