"""Independent reference computations used as test oracles.

Nothing here imports the package's numerical code: recursions are re-derived
with plain Python floats or exact fractions, roots come from the companion
matrix via numpy.linalg.eigvals, moments from explicit 2x2 products.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def eta_exact(alpha, beta, h, eta1, n: int) -> Fraction:
    """eta_n by exact rational arithmetic (noiseless, eta_0 = 0)."""
    a, b, h, e1 = (Fraction(x) for x in (alpha, beta, h, eta1))
    prev, cur = Fraction(0), e1
    if n == 0:
        return prev
    for _ in range(1, n):
        prev, cur = cur, (1 - a * h) * cur + (1 - b * h) * (cur - prev)
    return cur


def eta_float(alpha, beta, h, eta1, n: int) -> list[float]:
    """[eta_0, ..., eta_n] with Python floats."""
    out = [0.0, float(eta1)]
    for _ in range(1, n):
        e, p = out[-1], out[-2]
        out.append((1 - alpha * h) * e + (1 - beta * h) * (e - p))
    return out[: n + 1]


def companion(alpha, beta, h) -> np.ndarray:
    return np.array([[2 - (alpha + beta) * h, beta * h - 1], [1.0, 0.0]])


def companion_roots(alpha, beta, h) -> np.ndarray:
    return np.linalg.eigvals(companion(alpha, beta, h))


def noise_moment_bruteforce(alpha, beta, h, c, eta1, n: int) -> np.ndarray:
    """E[Theta_n Theta_n^T] by explicit 2x2 matrix products."""
    F = companion(alpha, beta, h)
    M = np.array([[eta1 * eta1, 0.0], [0.0, 0.0]])
    for k in range(1, n):
        Q = np.array([[(k * alpha + beta) ** 2 * c, 0.0], [0.0, 0.0]])
        M = F @ M @ F.T + Q
    return M


def theta_run_plain(grad, theta0, alpha, beta, N: int) -> list[np.ndarray]:
    """Gradient-form iterates theta_0..theta_N written from the update rule."""
    th = [np.array(theta0, dtype=float), np.array(theta0, dtype=float)]
    for n in range(1, N):
        cur, prev = th[-1], th[-2]
        w = n * alpha + beta
        nxt = (2 * n * cur - (n - 1) * prev) / (n + 1)
        if w != 0:
            x = (n * (alpha + beta) * cur - (n - 1) * beta * prev) / w
            nxt = nxt - w / (n + 1) * grad(x, n)
        th.append(nxt)
    return th[: N + 1]
