# # Positive and negative feedback
#
# Cloud autoscaling loops tend to reinforce themselves.  Here the same gain is
# closed both ways around an unstable scalar plant, followed by a watermark
# policy of the kind a router uses.

import numpy as np

from hybridcloud.controller import (FeedbackSign, GainMatrix, ThresholdPolicy, close_loop,
                                    detect_oscillation, stabilizing_gain_search, threshold_step)
from hybridcloud.statespace import LinearModel, classify_stability, simulate, step_response

plant = LinearModel([[1.2]], [[1.0]])

for sign in (FeedbackSign.NEGATIVE, FeedbackSign.POSITIVE):
    loop = close_loop(plant, GainMatrix([[0.5]], sign))
    traj, cls = step_response(loop, 0, 200)
    print(f"{sign.value:8s} A_cl = {loop.A[0, 0]:.2f}  {classify_stability(loop.A).value:9s}"
          f"  step: {cls.value:18s}  oscillation: {detect_oscillation(traj).value}")

# Grid search picks the gain that pulls the closed-loop pole closest to zero.

gain = stabilizing_gain_search(plant, [0.0, 0.25, 0.5, 0.75])
print("best grid gain:", gain.K[0, 0])

# An unstable mode that the input cannot touch stays unstable for any gain.

stuck = LinearModel(np.diag([1.5, 0.5]), [[0.0], [1.0]])
print("gain for uncontrollable mode:", stabilizing_gain_search(stuck, np.linspace(-2, 2, 9)))

# Ringing that dies out: eigenvalues at radius 0.9.

pair = LinearModel([[0.0, 1.0], [-0.81, 0.0]], [[0.0], [1.0]])
print("complex pair:", detect_oscillation(simulate(pair, [1.0, 0.0], np.zeros((200, 1)))).value)

# Watermark band: step the control up above 0.7, down below 0.3.

policy = ThresholdPolicy(low_watermark=0.3, high_watermark=0.7, increment=1.0, u_min=0.0, u_max=10.0)
u = 4.0
for load in (0.9, 0.95, 0.5, 0.1, 0.2):
    u = threshold_step(policy, u, load)
    print(f"load {load:.2f} -> workers {u:.0f}")
