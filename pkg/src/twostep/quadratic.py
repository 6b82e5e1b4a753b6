"""Quadratic objectives stored in eigen-decomposed form.

The objective is ``f(theta) = 0.5 <theta, H theta> - <q, theta>`` with
``H = P diag(h) P^T``. Every product with ``H`` goes through the
decomposition so that per-eigenmode quantities are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "QuadraticProblem",
    "EigenCoords",
    "make_problem",
    "random_orthogonal",
    "spectrum_power_law",
]

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class EigenCoords:
    """Coordinates of a vector in the eigenbasis of ``H`` (``coords[i] = p_i^T v``)."""

    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """Positive-definite quadratic with known spectrum and optimum.

    Attributes:
        eigenvalues: ascending, strictly positive, shape (d,).
        basis: orthogonal matrix whose columns are the eigenvectors, shape (d, d).
        optimum: the minimizer ``theta_*``.
        linear_term: ``q = H theta_*``.
        seed: seed the problem was generated from, if any (kept for replay).
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    optimum: np.ndarray
    linear_term: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        h = np.asarray(self.eigenvalues, dtype=float)
        if h.ndim != 1 or h.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-D array")
        if np.any(~np.isfinite(h)) or np.any(h <= 0):
            raise ValueError("all eigenvalues must be finite and strictly positive")
        if np.any(np.diff(h) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        d = h.size
        P = np.asarray(self.basis, dtype=float)
        if P.shape != (d, d):
            raise ValueError(f"basis must have shape ({d}, {d}), got {P.shape}")
        if np.max(np.abs(P.T @ P - np.eye(d))) > _ORTHO_TOL:
            raise ValueError("basis is not orthogonal to within 1e-12")
        for name in ("optimum", "linear_term"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (d,):
                raise ValueError(f"{name} must have shape ({d},), got {v.shape}")
        object.__setattr__(self, "eigenvalues", h)
        object.__setattr__(self, "basis", P)
        object.__setattr__(self, "optimum", np.asarray(self.optimum, dtype=float))
        object.__setattr__(self, "linear_term", np.asarray(self.linear_term, dtype=float))
        for arr in (self.eigenvalues, self.basis, self.optimum, self.linear_term):
            arr.flags.writeable = False

    @classmethod
    def from_spectrum(
        cls, eigenvalues, basis, optimum, seed: int | None = None
    ) -> QuadraticProblem:
        """Build a problem and derive ``q = H theta_*`` through the decomposition."""
        h = np.asarray(eigenvalues, dtype=float)
        P = np.asarray(basis, dtype=float)
        opt = np.asarray(optimum, dtype=float)
        # same operation order as hessian_apply so gradient(theta_*) is exactly 0
        q = ((opt @ P) * h) @ P.T
        return cls(h, P, opt, q, seed)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def largest(self) -> float:
        """``L``, the largest eigenvalue."""
        return float(self.eigenvalues[-1])

    def smallest(self) -> float:
        """``mu``, the smallest eigenvalue."""
        return float(self.eigenvalues[0])

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.dim,):
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {v.shape}")
        return v

    def hessian_apply(self, v) -> np.ndarray:
        v = self._check(v)
        return (v @ self.basis) * self.eigenvalues @ self.basis.T

    def hessian(self) -> np.ndarray:
        """Dense ``H``; only for checks and small problems."""
        return (self.basis * self.eigenvalues) @ self.basis.T

    def value(self, theta) -> float:
        theta = self._check(theta)
        return float(0.5 * theta @ self.hessian_apply(theta) - self.linear_term @ theta)

    def gradient(self, theta) -> np.ndarray:
        """``H theta - q``; exactly zero at the optimum."""
        return self.hessian_apply(theta) - self.linear_term

    def excess(self, theta) -> float:
        """``f(theta) - f(theta_*)`` evaluated per eigenmode."""
        c = self.to_eigenbasis(self._check(theta) - self.optimum).coords
        return float(0.5 * np.sum(self.eigenvalues * c * c))

    def to_eigenbasis(self, v) -> EigenCoords:
        return EigenCoords(self._check(v) @ self.basis)

    def from_eigenbasis(self, coords: EigenCoords | np.ndarray) -> np.ndarray:
        c = coords.coords if isinstance(coords, EigenCoords) else np.asarray(coords, dtype=float)
        return self.basis @ self._check(c)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "eigenvalues": self.eigenvalues.tolist(),
            "basis": self.basis.ravel().tolist(),
            "optimum": self.optimum.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> QuadraticProblem:
        d = int(data["dim"])
        basis = np.asarray(data["basis"], dtype=float).reshape(d, d)
        return cls.from_spectrum(data["eigenvalues"], basis, data["optimum"], data.get("seed"))

    def save(self, path: str | Path) -> None:
        # repr-exact floats: json writes the shortest round-tripping form
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> QuadraticProblem:
        return cls.from_dict(json.loads(Path(path).read_text()))


def spectrum_power_law(d: int, m: float) -> list[float]:
    """Eigenvalues ``1/k**m`` for ``k = 1..d`` (largest first)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return [1.0 / k**m for k in range(1, d + 1)]


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def make_problem(
    eigenvalues, optimum_distance: float, seed: int
) -> tuple[QuadraticProblem, np.ndarray]:
    """Random-basis problem plus a starting point at distance ``optimum_distance``.

    The optimum is a Gaussian vector scaled to unit norm and the start is
    ``theta_* + r u`` for a random unit vector ``u``. Eigenvalues may be given
    in any order; they are stored ascending.
    """
    h = np.sort(np.asarray(eigenvalues, dtype=float))
    if h.size == 0 or np.any(h <= 0):
        raise ValueError("eigenvalues must be strictly positive (H must be invertible)")
    if not optimum_distance > 0:
        raise ValueError("optimum_distance must be positive")
    rng = np.random.default_rng(seed)
    d = h.size
    P = random_orthogonal(d, rng)
    opt = rng.standard_normal(d)
    opt /= np.linalg.norm(opt)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    problem = QuadraticProblem.from_spectrum(h, P, opt, seed)
    return problem, opt + optimum_distance * u
