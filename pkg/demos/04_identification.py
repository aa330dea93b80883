# # Identifying a linear model of the service
#
# Drive the simulated service with a random two-level admission rate, record
# (cpu load, channel load, active workers) once per minute, and fit
# x(t+1) = A x(t) + B u(t) by least squares.

import numpy as np

from hybridcloud.controller import detect_oscillation
from hybridcloud.profiles import load_profile
from hybridcloud.statespace import classify_stability, is_controllable, spectral_radius, step_response
from hybridcloud.sysid import center, fit_linear, simulator_trace, split_trace_check

profile = load_profile("test2")
trace = simulator_trace(profile.topology, profile.corpus(), seed=0, periods=400)
print("trace:", trace.states.shape, "states,", trace.controls.shape, "controls")

# The model has no intercept, so states are centred first.

fit = fit_linear(center(trace))
np.set_printoptions(precision=4, suppress=True)
print("A =\n", fit.model.A)
print("B =\n", fit.model.B)
print("residual rms:", fit.residual_rms, "condition:", round(fit.condition_indicator, 1))

print("spectral radius", round(spectral_radius(fit.model.A), 4), classify_stability(fit.model.A).value)
print("controllable:", is_controllable(fit.model))
print("fitted step response:", step_response(fit.model, 0)[1].value)
print("cpu load oscillation in the trace:", detect_oscillation(trace, 0).value)

# Hold-out check: fit on the first half, predict one step ahead on the rest.

_, rmse, scale = split_trace_check(trace)
print(f"one-step RMSE {rmse:.4f} vs state RMS {scale:.4f} ({rmse / scale:.1%})")
