"""Per-eigenvalue analysis of the two-step recursion.

Projected on an eigenvector with eigenvalue ``h``, the reduced iterate obeys
``eta_{n+1} = 2r eta_n - (1 - beta h) eta_{n-1}`` with ``r = 1 - (alpha+beta)h/2``.
Its characteristic polynomial ``X^2 - 2rX + (1 - beta h)`` has roots
``r +- sqrt(Delta)`` with ``Delta = h(((alpha+beta)/2)^2 h - alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ._io import write_csv
from .quadratic import QuadraticProblem
from .recursion import StepPair

__all__ = [
    "RealDistinct",
    "ComplexPair",
    "Coalescing",
    "Stability",
    "EigenMode",
    "StabilityMap",
    "discriminant",
    "coalescing_tolerance",
    "classify",
    "stability_region",
    "closed_form_eta",
    "closed_form_excess",
    "stability_map",
    "max_root_modulus",
]

MARGINAL_TOL = 1e-12


@dataclass(frozen=True)
class RealDistinct:
    r_plus: float
    r_minus: float


@dataclass(frozen=True)
class ComplexPair:
    rho: float
    omega: float


@dataclass(frozen=True)
class Coalescing:
    r_double: float


class Stability(str, Enum):
    STRICT = "StrictlyStable"
    MARGINAL = "MarginallyStable"
    UNSTABLE = "Unstable"


def discriminant(pair: StepPair, h: float) -> float:
    """Reduced discriminant ``h(((alpha+beta)/2)^2 h - alpha)``."""
    return h * (((pair.alpha + pair.beta) / 2) ** 2 * h - pair.alpha)


def coalescing_tolerance(pair: StepPair, h: float) -> float:
    return 1e-12 * max(1.0, ((pair.alpha + pair.beta) * h / 2) ** 2)


@dataclass(frozen=True)
class EigenMode:
    h: float
    pair: StepPair
    r: float
    discriminant: float
    classification: RealDistinct | ComplexPair | Coalescing

    @property
    def product(self) -> float:
        """Product of the two roots, ``1 - beta h``."""
        return 1 - self.pair.beta * self.h

    def roots(self) -> tuple[complex, complex]:
        c = self.classification
        if isinstance(c, RealDistinct):
            return complex(c.r_plus), complex(c.r_minus)
        if isinstance(c, ComplexPair):
            z = c.rho * complex(math.cos(c.omega), math.sin(c.omega))
            return z, z.conjugate()
        return complex(c.r_double), complex(c.r_double)

    @property
    def max_root_modulus(self) -> float:
        c = self.classification
        if isinstance(c, RealDistinct):
            return max(abs(c.r_plus), abs(c.r_minus))
        if isinstance(c, ComplexPair):
            return c.rho
        return abs(c.r_double)

    @property
    def stability(self) -> Stability:
        return _stability_of(self.max_root_modulus)


def _stability_of(m: float) -> Stability:
    if abs(m - 1) <= MARGINAL_TOL:
        return Stability.MARGINAL
    return Stability.STRICT if m < 1 else Stability.UNSTABLE


def classify(pair: StepPair, h: float, tol: float | None = None) -> EigenMode:
    """Classify the roots for eigenvalue ``h``.

    ``tol`` defaults to :func:`coalescing_tolerance`; ``|Delta| <= tol`` is
    treated as a double root.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    tol = coalescing_tolerance(pair, h) if tol is None else tol
    r = 1 - (pair.alpha + pair.beta) * h / 2
    delta = discriminant(pair, h)
    if delta > tol:
        s = math.sqrt(delta)
        # larger-magnitude root directly, the other from the product (no cancellation)
        big = r + math.copysign(s, r)
        small = (1 - pair.beta * h) / big
        cls = RealDistinct(big, small) if r >= 0 else RealDistinct(small, big)
    elif delta < -tol:
        # 1 - beta h = r^2 - Delta > 0 here, so rho is real
        rho = math.sqrt(1 - pair.beta * h)
        cls = ComplexPair(rho, math.atan2(math.sqrt(-delta), r))
    else:
        cls = Coalescing(r)
    return EigenMode(h, pair, r, delta, cls)


def stability_region(pair: StepPair, h: float) -> Stability:
    """Stability from the largest root modulus (exact, no iteration)."""
    return classify(pair, h).stability


def _log_sinh(x):
    # log(sinh x) for x > 0 without overflow
    return x + np.log1p(-np.exp(-2 * x)) - math.log(2)


def closed_form_eta(mode: EigenMode, eta1: float, n):
    """``eta_n`` from ``eta_0 = 0`` and ``eta_1 = eta1``; ``n`` may be an array.

    Nearby real roots of equal sign use ``rho^(n-1) sinh(n tau)/sinh(tau)``
    evaluated in log space, complex roots use ``rho^(n-1) sin(n omega)/sin(omega)``;
    both stay accurate as ``Delta`` approaches zero. Well separated real roots
    use the difference of powers directly.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("n must be >= 0")
    nf = n_arr.astype(float)
    c = mode.classification
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if isinstance(c, Coalescing):
            u = np.where(n_arr == 0, 0.0, nf * np.power(c.r_double, nf - 1))
        elif isinstance(c, ComplexPair):
            u = np.power(c.rho, nf - 1) * np.sin(c.omega * nf) / math.sin(c.omega)
        elif mode.product > 0 and math.sqrt(mode.discriminant) < 0.5 * abs(mode.r):
            rho = math.sqrt(mode.product)
            tau = math.atanh(math.sqrt(mode.discriminant) / abs(mode.r))
            pos = n_arr > 0
            safe = np.where(pos, nf, 1.0)
            mag = np.exp((safe - 1) * math.log(rho) + _log_sinh(safe * tau) - _log_sinh(tau))
            sign = 1.0 if mode.r > 0 else np.where(n_arr % 2 == 1, 1.0, -1.0)
            u = np.where(pos, sign * mag, 0.0)
        else:
            u = (np.power(c.r_plus, nf) - np.power(c.r_minus, nf)) / (c.r_plus - c.r_minus)
    out = eta1 * u
    return float(out) if np.ndim(out) == 0 else out


def closed_form_excess(problem: QuadraticProblem, theta0, pair: StepPair, n):
    """Noiseless ``f(theta_n) - f_*`` from the per-mode closed forms.

    ``n = 0`` and ``n = 1`` both return the excess at ``theta0``.
    """
    n_arr = np.atleast_1d(np.asarray(n))
    eta1 = problem.to_eigenbasis(np.asarray(theta0, dtype=float) - problem.optimum).coords
    total = np.zeros(n_arr.shape)
    nn = np.maximum(n_arr, 1)
    for h, e1 in zip(problem.eigenvalues, eta1):
        eta = closed_form_eta(classify(pair, float(h)), float(e1), nn)
        total = total + 0.5 * h * (eta / nn) ** 2
    return float(total[0]) if np.ndim(n) == 0 else total


def max_root_modulus(alpha, beta, h):
    """Vectorized largest root modulus over broadcast ``(alpha, beta, h)``."""
    alpha, beta, h = (np.asarray(x, dtype=float) for x in (alpha, beta, h))
    r = 1 - (alpha + beta) * h / 2
    delta = h * (((alpha + beta) / 2) ** 2 * h - alpha)
    tol = 1e-12 * np.maximum(1.0, ((alpha + beta) * h / 2) ** 2)
    real = np.abs(r) + np.sqrt(np.maximum(delta, 0.0))
    cplx = np.sqrt(np.abs(1 - beta * h))
    return np.where(delta > tol, real, np.where(delta < -tol, cplx, np.abs(r))), delta, tol


@dataclass(frozen=True)
class StabilityMap:
    """Classification over the grid ``alpha x beta``; arrays have shape (len(alpha), len(beta))."""

    alpha: np.ndarray
    beta: np.ndarray
    h: float
    classes: np.ndarray
    stability: np.ndarray
    max_root_modulus: np.ndarray

    def to_csv(self, path: str | Path) -> Path:
        A, B = np.meshgrid(self.alpha, self.beta, indexing="ij")
        rows = zip(A.ravel(), B.ravel(), self.classes.ravel(), self.stability.ravel(), self.max_root_modulus.ravel())
        return write_csv(path, ["alpha", "beta", "class", "stability", "max_root_modulus"], rows)


def stability_map(alpha_grid, beta_grid, h: float) -> StabilityMap:
    a = np.asarray(alpha_grid, dtype=float)
    b = np.asarray(beta_grid, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ValueError("grids must be non-empty 1-D arrays")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("grids must be finite")
    if not h > 0:
        raise ValueError("h must be positive")
    A, B = np.meshgrid(a, b, indexing="ij")
    mod, delta, tol = max_root_modulus(A, B, h)
    classes = np.where(delta > tol, "RealDistinct", np.where(delta < -tol, "ComplexPair", "Coalescing"))
    stab = np.where(
        np.abs(mod - 1) <= MARGINAL_TOL,
        Stability.MARGINAL.value,
        np.where(mod < 1, Stability.STRICT.value, Stability.UNSTABLE.value),
    )
    return StabilityMap(a, b, float(h), classes, stab, mod)
