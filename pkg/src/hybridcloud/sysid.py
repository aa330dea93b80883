"""Least-squares identification of ``x(t+1) = A x(t) + B u(t)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientExcitationError
from .statespace import LinearModel, Trajectory, simulate, step

EXCITATION_TOL = 1e-8


@dataclass(frozen=True)
class FitResult:
    model: LinearModel
    residual_rms: float
    condition_indicator: float  # ratio of extreme singular values of the regressors


def _regressors(traj: Trajectory):
    X = traj.states
    Z = np.hstack([X[:-1], traj.controls])
    return Z, X[1:]


def fit_linear(traj: Trajectory, tol: float = EXCITATION_TOL) -> FitResult:
    """Ordinary least squares over all transition pairs of ``traj``.

    There is no intercept: callers with data around a non-zero operating
    point should subtract the mean first (see :func:`center`).
    """
    n, m = traj.n, traj.m
    Z, Y = _regressors(traj)
    if Z.shape[0] < n + m + 1:
        raise InsufficientExcitationError(
            f"need at least {n + m + 1} transitions, got {Z.shape[0]}", np.eye(n + m))

    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise InsufficientExcitationError("insufficient excitation: regressors are identically zero", np.eye(n + m))
    weak = s <= tol * s[0]
    if np.any(weak):
        directions = Vt[weak]
        labels = [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
        described = "; ".join(
            " + ".join(f"{c:.3g}*{lab}" for c, lab in zip(d, labels) if abs(c) > 1e-6)
            for d in directions)
        raise InsufficientExcitationError(
            f"insufficient excitation: regressors rank {int((~weak).sum())} < {n + m}; "
            f"unexcited directions: {described}", directions)

    # Z theta = Y  with theta = [A^T; B^T]
    theta = Vt.T @ ((U.T @ Y) / s[:, None])
    A = theta[:n].T
    B = theta[n:].T
    model = LinearModel(A, B)
    resid = Y - Z @ theta
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return FitResult(model, rms, float(s[0] / s[-1]))


def center(traj: Trajectory) -> Trajectory:
    """Subtract the per-component mean from states and controls."""
    return Trajectory(traj.states - traj.states.mean(axis=0),
                      traj.controls - traj.controls.mean(axis=0) if traj.horizon else traj.controls)


def predict(model: LinearModel, x0, controls) -> Trajectory:
    """Multi-step (free-run) prediction; same as :func:`simulate`."""
    return simulate(model, x0, controls)


def prediction_rmse(model: LinearModel, traj: Trajectory) -> float:
    """One-step-ahead RMSE of ``model`` on the measured transitions."""
    if traj.n != model.n:
        raise DimensionError("trajectory states", model.n, traj.n)
    if traj.m != model.m:
        raise DimensionError("trajectory controls", model.m, traj.m)
    if traj.horizon == 0:
        return 0.0
    pred = np.array([step(model, x, u) for x, u in zip(traj.states[:-1], traj.controls)])
    return float(np.sqrt(np.mean((traj.states[1:] - pred) ** 2)))


def split(traj: Trajectory, fraction: float = 0.5):
    """Cut a trajectory into two contiguous pieces sharing the cut state."""
    k = int(traj.horizon * fraction)
    first = Trajectory(traj.states[: k + 1], traj.controls[:k])
    second = Trajectory(traj.states[k:], traj.controls[k:])
    return first, second


def prbs_admissions(seed: int, periods: int, low: int, high: int) -> np.ndarray:
    """Two-level random admission sequence (seeded)."""
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([low, high]), periods)


def simulator_trace(topology, corpus, seed: int = 0, periods: int = 400,
                    period_ms: float = 60_000.0, route_window_ms: float = 20_000.0,
                    policy=None, levels=(0.1, 0.9), max_capacity: float = 200.0) -> Trajectory:
    """Excite the simulated service under controlled routing.

    Admissions switch at random between ``levels`` (fractions of the local
    route's nominal articles-per-period capacity).  The router watches CPU
    load over ``route_window_ms`` with watermarks 0.3/0.6 unless ``policy``
    is given.  States are ``(cpu_load, channel_load, active_workers)``.

    For fast topologies whose capacity exceeds ``max_capacity`` articles per
    period, the period and router window shrink by the same factor so the
    trace stays a few tens of thousands of requests long.
    """
    from .controller import ThresholdPolicy
    from .hybridsim import Controlled, run_stream

    if policy is None:
        policy = Controlled(ThresholdPolicy(0.3, 0.6, 1.0, 0.0, 1.0), "cpu_load")
    per_article = (topology.service_overhead_ms + topology.local_cpu_per_article_ms
                   + topology.local_io_per_mb_ms * float(np.mean(corpus.sizes)))
    capacity = period_ms / per_article if per_article > 0 else max_capacity
    if capacity > max_capacity:
        shrink = max_capacity / capacity
        period_ms *= shrink
        route_window_ms *= shrink
        capacity = max_capacity
    low, high = (int(f * capacity) for f in levels)
    admissions = prbs_admissions(seed, periods, low, high)
    return run_stream(topology, corpus, policy, admissions, period_ms=period_ms,
                      route_window_ms=route_window_ms)


def split_trace_check(traj: Trajectory, fraction: float = 0.5):
    """Mean-centre, fit on the first part, score on the rest.

    Returns ``(fit, one_step_rmse, state_rms)`` where ``state_rms`` is the
    RMS of the centred held-out states.
    """
    centred = center(traj)
    train, test = split(centred, fraction)
    fit = fit_linear(train)
    rmse = prediction_rmse(fit.model, test)
    return fit, rmse, float(np.sqrt(np.mean(test.states ** 2)))
