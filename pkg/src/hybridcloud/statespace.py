"""Discrete-time linear state-space models.

The model class is ``x(t+1) = A x(t) + B u(t)`` with optional axis-aligned
box limits on the state and on the control.  Everything here is a pure
function of immutable inputs: model arrays are copied and made read-only on
construction.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapExceededError, ConvergenceError, DimensionError, HorizonError

EIG_CAP = 16
STABILITY_EPS = 1e-9
RANK_TOL = 1e-10
REACH_CAP = 10**6
DIVERGENCE_FACTOR = 1e6
SETTLE_FRACTION = 0.01


def _frozen(values, name, ndim):
    arr = np.array(values, dtype=float)
    if ndim == 2 and arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != ndim:
        raise DimensionError(name, f"{ndim}-d array", f"{arr.ndim}-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def as_vector(values, name="vector"):
    return _frozen(np.atleast_1d(np.asarray(values, dtype=float)), name, 1)


def as_matrix(values, name="matrix"):
    return _frozen(values, name, 2)


@dataclass(frozen=True)
class BoxConstraint:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, "lower")
        hi = as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionError("box upper", lo.shape[0], hi.shape[0])
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def clip(self, v):
        """Project ``v`` onto the box.

        Returns the projected vector and a list of ``(component, bound)``
        pairs for every component that moved, ``bound`` being ``"lower"`` or
        ``"upper"``.
        """
        out = np.minimum(np.maximum(v, self.lower), self.upper)
        hits = []
        for i in np.flatnonzero(out != v):
            hits.append((int(i), "lower" if v[i] < self.lower[i] else "upper"))
        return out, hits


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    state_box: BoxConstraint | None = None
    control_box: BoxConstraint | None = None

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise DimensionError("A columns", A.shape[0], A.shape[1])
        if B.shape[0] != A.shape[0]:
            raise DimensionError("B rows", A.shape[0], B.shape[0])
        if self.state_box is not None and self.state_box.dim != A.shape[0]:
            raise DimensionError("state_box", A.shape[0], self.state_box.dim)
        if self.control_box is not None and self.control_box.dim != B.shape[1]:
            raise DimensionError("control_box", B.shape[1], self.control_box.dim)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def with_A(self, A):
        return LinearModel(A, self.B, self.state_box, self.control_box)


class Violation(NamedTuple):
    t: int
    signal: str  # "x" or "u"
    component: int
    bound: str  # "lower" or "upper"


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (T+1, n)
    controls: np.ndarray  # (T, m)
    violations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        controls = np.array(self.controls, dtype=float)
        if states.ndim != 2:
            raise DimensionError("states", "2-d array", f"{states.ndim}-d array")
        if controls.ndim == 1 and controls.size == 0:
            controls = controls.reshape(0, 0)
        if controls.ndim != 2:
            raise DimensionError("controls", "2-d array", f"{controls.ndim}-d array")
        if states.shape[0] != controls.shape[0] + 1:
            raise DimensionError("states count", controls.shape[0] + 1, states.shape[0])
        states.setflags(write=False)
        controls.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def horizon(self):
        return self.controls.shape[0]

    @property
    def n(self):
        return self.states.shape[1]

    @property
    def m(self):
        return self.controls.shape[1]


class ResponseClass(enum.Enum):
    MONOTONE_CONVERGENT = "MonotoneConvergent"
    OSCILLATORY_CONVERGENT = "OscillatoryConvergent"
    OSCILLATORY_SUSTAINED = "OscillatorySustained"
    DIVERGENT = "Divergent"

    def __str__(self):
        return self.value


class Stability(enum.Enum):
    STABLE = "Stable"
    MARGINAL = "Marginal"
    UNSTABLE = "Unstable"

    def __str__(self):
        return self.value


def _check_vec(v, dim, name):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionError(name, dim, v.shape[0] if v.ndim == 1 else v.shape)
    return v


def step(model: LinearModel, x, u) -> np.ndarray:
    """One unconstrained update ``A x + B u``."""
    x = _check_vec(x, model.n, "x")
    u = _check_vec(u, model.m, "u")
    return model.A @ x + model.B @ u


def simulate(model: LinearModel, x0, controls) -> Trajectory:
    """Iterate the model from ``x0`` over the given control sequence.

    Controls are projected onto ``control_box`` before use.  The updated
    state is projected onto ``state_box`` and the projected value is what
    gets stored and propagated; every projection that changes a component
    is logged as a :class:`Violation`.  An out-of-box ``x0`` is stored as
    given but clipped before its first propagation.  The stored controls are
    the applied (clipped) ones.
    """
    x0 = _check_vec(x0, model.n, "x0")
    controls = np.asarray(controls, dtype=float)
    if controls.size == 0:
        controls = controls.reshape(0, model.m)
    if controls.ndim != 2 or controls.shape[1] != model.m:
        raise DimensionError("controls", f"(T, {model.m})", controls.shape)

    states = [x0]
    applied = []
    violations = []
    x = x0
    if model.state_box is not None:
        x, hits = model.state_box.clip(x)
        violations += [Violation(0, "x", i, b) for i, b in hits]
    for t, u in enumerate(controls):
        if model.control_box is not None:
            u, hits = model.control_box.clip(u)
            violations += [Violation(t, "u", i, b) for i, b in hits]
        applied.append(u)
        x = step(model, x, u)
        if model.state_box is not None:
            x, hits = model.state_box.clip(x)
            violations += [Violation(t + 1, "x", i, b) for i, b in hits]
        states.append(x)
    applied = np.array(applied, dtype=float).reshape(len(controls), model.m)
    return Trajectory(np.array(states), applied, violations)


def eigenvalues(A, cap: int = EIG_CAP) -> np.ndarray:
    """All eigenvalues of ``A`` with multiplicity (complex array)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("A", "square matrix", A.shape)
    if A.shape[0] > cap:
        raise CapExceededError(f"matrix order {A.shape[0]} exceeds eigenvalue cap {cap}")
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise ConvergenceError("eigenvalue iteration produced non-finite values")
    return lam.astype(complex)


def spectral_radius(A) -> float:
    lam = eigenvalues(A)
    return float(np.max(np.abs(lam))) if lam.size else 0.0


def classify_stability(A, eps: float = STABILITY_EPS) -> Stability:
    rho = spectral_radius(A)
    if rho < 1.0 - eps:
        return Stability.STABLE
    if rho > 1.0 + eps:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def numerical_rank(M, tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with complete pivoting.

    A pivot counts when its magnitude exceeds ``tol * max|M|``.
    """
    M = np.array(M, dtype=float)
    if M.size == 0:
        return 0
    scale = np.max(np.abs(M))
    if scale == 0.0:
        return 0
    threshold = tol * scale
    rows, cols = M.shape
    rank = 0
    for r in range(min(rows, cols)):
        sub = np.abs(M[r:, r:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= threshold:
            break
        i += r
        j += r
        M[[r, i], :] = M[[i, r], :]
        M[:, [r, j]] = M[:, [j, r]]
        M[r + 1:, r:] -= np.outer(M[r + 1:, r] / M[r, r], M[r, r:])
        rank += 1
    return rank


def controllability_matrix(model: LinearModel) -> np.ndarray:
    """``[B, AB, ..., A^(n-1) B]`` of shape ``(n, n*m)``."""
    blocks = [model.B]
    for _ in range(model.n - 1):
        blocks.append(model.A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(model: LinearModel) -> bool:
    return numerical_rank(controllability_matrix(model)) == model.n


def _output_matrix(model, C):
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != model.n:
        raise DimensionError("C columns", model.n, C.shape[1])
    return C


def observability_matrix(model: LinearModel, C) -> np.ndarray:
    """``[C; CA; ...; C A^(n-1)]`` of shape ``(n*p, n)``."""
    blocks = [_output_matrix(model, C)]
    for _ in range(model.n - 1):
        blocks.append(blocks[-1] @ model.A)
    return np.vstack(blocks)


def is_observable(model: LinearModel, C) -> bool:
    return numerical_rank(observability_matrix(model, C)) == model.n


def quantize(x, resolution: float = 1e-9) -> tuple:
    q = np.round(np.asarray(x, dtype=float) / resolution) * resolution
    return tuple(float(v) + 0.0 for v in q)


def reachable_set_bruteforce(model: LinearModel, x0, horizon: int,
                             control_grid: Sequence, resolution: float = 1e-9,
                             cap: int = REACH_CAP) -> set:
    """States reachable at exactly ``horizon`` steps using grid controls.

    Every control sequence in ``control_grid ** horizon`` is enumerated (no
    pruning) and the final states are quantized to ``resolution`` so they can
    be collected in a set.  Constraint boxes are honored through
    :func:`simulate`.
    """
    if horizon < 0:
        raise HorizonError("horizon must be non-negative")
    grid = [_check_vec(np.atleast_1d(g), model.m, "control grid point") for g in control_grid]
    if not grid and horizon > 0:
        raise ValueError("empty control grid")
    n_paths = len(grid) ** horizon
    if n_paths > cap:
        raise CapExceededError(f"{len(grid)}^{horizon} = {n_paths} paths exceeds cap {cap}")
    x0 = _check_vec(x0, model.n, "x0")
    reached = set()
    for path in itertools.product(grid, repeat=horizon):
        traj = simulate(model, x0, np.array(path).reshape(horizon, model.m))
        reached.add(quantize(traj.states[-1], resolution))
    return reached


def affine_rank(points, tol: float = 1e-9) -> int:
    """Dimension of the affine hull of a finite point set (SVD based)."""
    P = np.array(sorted(points), dtype=float)
    if len(P) <= 1:
        return 0
    return int(np.linalg.matrix_rank(P[1:] - P[0], tol=tol))


def _sign_changes(values, tol):
    signs = [np.sign(v) for v in values if abs(v) > tol]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def step_response(model: LinearModel, channel: int = 0, horizon: int = 200):
    """Unit step on control ``channel`` from rest, plus its classification.

    Divergent when the state norm exceeds ``1e6`` times the input gain
    ``|B e_channel|``.  Otherwise the dominant state component (largest
    excursion) is inspected after discarding the first 10% of samples: two or
    more sign changes of its increments mark the response oscillatory.  It is
    convergent when the peak-to-peak amplitude over the last 10% of the
    horizon is below 1% of the overall peak-to-peak.  A monotone response
    that has not settled and whose ``A`` is not stable is reported Divergent.
    """
    if horizon < 8:
        raise HorizonError(f"step response needs horizon >= 8, got {horizon}")
    if not 0 <= channel < model.m:
        raise DimensionError("channel", f"index in [0, {model.m})", channel)
    controls = np.zeros((horizon, model.m))
    controls[:, channel] = 1.0
    traj = simulate(model, np.zeros(model.n), controls)
    return traj, _classify_response(model, traj, channel)


def _classify_response(model, traj, channel):
    X = traj.states
    gain = float(np.linalg.norm(model.B[:, channel]))
    if gain == 0.0 or not np.any(X):
        return ResponseClass.MONOTONE_CONVERGENT
    norms = np.linalg.norm(X, axis=1)
    if not np.all(np.isfinite(norms)) or norms.max() > DIVERGENCE_FACTOR * gain:
        return ResponseClass.DIVERGENT

    comp = int(np.argmax(np.max(np.abs(X), axis=0)))
    y = X[:, comp]
    peak = float(np.ptp(y))
    tail = max(2, len(y) // 10)
    settled = float(np.ptp(y[-tail:])) < SETTLE_FRACTION * peak

    skip = len(y) // 10
    increments = np.diff(y[skip:])
    oscillating = _sign_changes(increments, 1e-9 * peak) >= 2

    if oscillating:
        return (ResponseClass.OSCILLATORY_CONVERGENT if settled
                else ResponseClass.OSCILLATORY_SUSTAINED)
    if not settled and classify_stability(model.A) is not Stability.STABLE:
        return ResponseClass.DIVERGENT
    return ResponseClass.MONOTONE_CONVERGENT
