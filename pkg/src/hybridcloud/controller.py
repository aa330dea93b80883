"""Feedback loops, watermark resource control and oscillation detection."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, HorizonError, PolicyError
from .statespace import (DIVERGENCE_FACTOR, STABILITY_EPS, LinearModel, Trajectory,
                         as_matrix, spectral_radius)


class FeedbackSign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class GainMatrix:
    K: np.ndarray  # (m, n)
    sign: FeedbackSign = FeedbackSign.NEGATIVE

    def __post_init__(self):
        object.__setattr__(self, "K", as_matrix(self.K, "K"))
        object.__setattr__(self, "sign", FeedbackSign(self.sign))


def close_loop(model: LinearModel, gain: GainMatrix) -> LinearModel:
    """Closed loop ``A + BK`` (positive) or ``A - BK`` (negative)."""
    K = gain.K
    if K.shape != (model.m, model.n):
        raise DimensionError("K", (model.m, model.n), K.shape)
    BK = model.B @ K
    A_cl = model.A + BK if gain.sign is FeedbackSign.POSITIVE else model.A - BK
    return model.with_A(A_cl)


def stabilizing_gain_search(model: LinearModel, grid, eps: float = STABILITY_EPS):
    """Exhaustive search for a negative-feedback gain on a finite grid.

    ``grid`` is either one sequence of candidate values shared by every
    entry of ``K`` or a sequence of ``m*n`` per-entry sequences (row-major).
    Returns the gain with the smallest closed-loop spectral radius (first one
    in enumeration order on ties), or ``None`` when no grid point pushes the
    radius below ``1 - eps``.
    """
    n_entries = model.m * model.n
    if n_entries > 4:
        raise ValueError(f"grid search limited to n*m <= 4, got {n_entries}")
    grid = list(grid)
    if not grid:
        raise ValueError("empty gain grid")
    if np.ndim(grid[0]) == 0:
        axes = [[float(g) for g in grid]] * n_entries
    else:
        if len(grid) != n_entries:
            raise DimensionError("grid", n_entries, len(grid))
        axes = [[float(g) for g in axis] for axis in grid]
        if any(not axis for axis in axes):
            raise ValueError("empty gain grid axis")

    best, best_rho = None, np.inf
    for entries in itertools.product(*axes):
        gain = GainMatrix(np.reshape(entries, (model.m, model.n)), FeedbackSign.NEGATIVE)
        rho = spectral_radius(close_loop(model, gain).A)
        if rho < best_rho:
            best, best_rho = gain, rho
    if best_rho < 1.0 - eps:
        return best
    return None


@dataclass(frozen=True)
class ThresholdPolicy:
    """Watermark band: step the control up above ``high_watermark`` and
    down below ``low_watermark``, keeping it inside ``[u_min, u_max]``."""

    low_watermark: float
    high_watermark: float
    increment: float
    u_min: float
    u_max: float

    def __post_init__(self):
        if not self.low_watermark < self.high_watermark:
            raise PolicyError("low_watermark must be below high_watermark")
        if not self.u_min <= self.u_max:
            raise PolicyError("u_min must not exceed u_max")
        if not self.increment > 0:
            raise PolicyError("increment must be positive")


def threshold_step(policy: ThresholdPolicy, u_prev: float, measurement: float) -> float:
    if not policy.u_min <= u_prev <= policy.u_max:
        raise PolicyError(f"u_prev {u_prev} outside [{policy.u_min}, {policy.u_max}]")
    if measurement > policy.high_watermark:
        u = u_prev + policy.increment
    elif measurement < policy.low_watermark:
        u = u_prev - policy.increment
    else:
        u = u_prev
    return min(max(u, policy.u_min), policy.u_max)


class Oscillation(enum.Enum):
    NONE = "None"
    DECAYING = "Decaying"
    SUSTAINED = "Sustained"
    DIVERGENT = "Divergent"

    def __str__(self):
        return self.value


def detect_oscillation(traj, component: int = 0, decay_ratio: float = 0.5) -> Oscillation:
    """Classify the oscillatory behaviour of one state component.

    ``traj`` may be a :class:`Trajectory` or a plain 1-d sample sequence.

    * Divergent: peak magnitude beyond ``1e6`` times the level of the first
      10% of samples (or the first non-zero sample when that window is zero).
    * Otherwise, after dropping the first quarter, two or more sign changes
      of the increments mean oscillation; it is Decaying when the envelope
      of the last third falls below ``decay_ratio`` times that of the first
      third, Sustained otherwise.
    """
    if isinstance(traj, Trajectory):
        if not 0 <= component < traj.n:
            raise DimensionError("component", f"index in [0, {traj.n})", component)
        y = traj.states[:, component]
    else:
        y = np.asarray(traj, dtype=float)
    if len(y) < 8:
        raise HorizonError(f"oscillation detection needs >= 8 samples, got {len(y)}")

    mag = np.abs(y)
    if not np.all(np.isfinite(mag)):
        return Oscillation.DIVERGENT
    if not np.any(mag):
        return Oscillation.NONE
    level = mag[: max(2, len(y) // 10)].max()
    if level == 0.0:
        level = mag[np.flatnonzero(mag)[0]]
    if mag.max() > DIVERGENCE_FACTOR * level:
        return Oscillation.DIVERGENT

    body = y[len(y) // 4:]
    increments = np.diff(body)
    tol = 1e-9 * mag.max()
    signs = [np.sign(d) for d in increments if abs(d) > tol]
    changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if changes < 2:
        return Oscillation.NONE

    third = len(body) // 3
    centre = body[-third:].mean()
    first = np.abs(body[:third] - centre).max()
    last = np.abs(body[-third:] - centre).max()
    return Oscillation.DECAYING if last < decay_ratio * first else Oscillation.SUSTAINED
