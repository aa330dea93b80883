"""Independent reference computations used by the tests.

Nothing here calls into the package's analysis code: these are the
brute-force or closed-form answers the library is checked against.
"""
import itertools

import numpy as np


def random_stability_models(seed, count, n=3):
    """Random n x n matrices rescaled to a spectral radius away from 1.

    Radii are drawn from [0.2, 0.9] or [1.1, 1.5] so that a 200-step
    simulation separates the two cases clearly.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        A = rng.normal(size=(n, n))
        rho = np.max(np.abs(np.linalg.eigvals(A)))
        target = rng.uniform(0.2, 0.9) if i % 2 == 0 else rng.uniform(1.1, 1.5)
        out.append((A * (target / rho), rng))
    return out


def zero_input_norm_ratio(A, rng, horizon=200):
    """||x(horizon)|| / ||x(0)|| for x(t+1) = A x(t), by plain iteration."""
    x0 = rng.normal(size=A.shape[0])
    x = x0.copy()
    for _ in range(horizon):
        x = A @ x
    return float(np.linalg.norm(x) / np.linalg.norm(x0))


def reachable_points(A, B, horizon, levels=(-1.0, 0.0, 1.0)):
    """Every state reachable from the origin with scalar inputs from ``levels``."""
    A, B = np.asarray(A, float), np.asarray(B, float).reshape(-1)
    pts = set()
    for seq in itertools.product(levels, repeat=horizon):
        x = np.zeros(A.shape[0])
        for u in seq:
            x = A @ x + B * u
        pts.add(tuple(np.round(x, 9)))
    return pts


def point_affine_rank(points):
    """Dimension of the affine hull via SVD of the differences."""
    P = np.array(sorted(points), dtype=float)
    if len(P) <= 1:
        return 0
    D = P[1:] - P[0]
    return int(np.linalg.matrix_rank(D, tol=1e-9))


def all_ternary_pairs(n=2, m=1):
    """All (A, B) with entries in {-1, 0, 1}, deduplicated."""
    seen = set()
    for entries in itertools.product((-1, 0, 1), repeat=n * n + n * m):
        if entries in seen:
            continue
        seen.add(entries)
        A = np.array(entries[: n * n], float).reshape(n, n)
        B = np.array(entries[n * n:], float).reshape(n, m)
        yield A, B


def dc_gain_scalar(a, b):
    return b / (1.0 - a)
