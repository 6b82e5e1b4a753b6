"""Gradient oracles for quadratic problems.

Every random draw is tied to the step index ``n``: row ``n`` of a lazily
extended table drawn from one seeded generator. Querying the same oracle from
two algorithms at the same step therefore uses the same noise, whatever the
query order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._io import read_csv, write_csv
from .moments import NoiseSpec
from .quadratic import QuadraticProblem

__all__ = [
    "StepNoise",
    "ExactOracle",
    "AdditiveNoiseOracle",
    "RegressionStream",
    "ReplayedStream",
    "SemiStochasticOracle",
    "SGDOracle",
    "exact_oracle",
    "additive_noise_oracle",
    "ls_semi_stochastic_oracle",
    "ls_sgd_oracle",
]


class StepNoise:
    """Standard Gaussian rows of fixed width, row ``n`` reserved for step ``n``."""

    def __init__(self, seed, width: int, chunk: int = 1024) -> None:
        self.seed = seed
        self.width = width
        self._rng = np.random.default_rng(seed)
        self._chunk = chunk
        self._chunks: list[np.ndarray] = []

    def row(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("step index must be >= 0")
        i, j = divmod(n, self._chunk)
        while i >= len(self._chunks):
            self._chunks.append(self._rng.standard_normal((self._chunk, self.width)))
        return self._chunks[i][j]


class ExactOracle:
    def __init__(self, problem: QuadraticProblem) -> None:
        self.problem = problem
        self.noise_spec = NoiseSpec.none()

    def query(self, point, n: int) -> np.ndarray:
        return self.problem.gradient(point)


class AdditiveNoiseOracle:
    """``gradient(theta) - eps_n`` with ``eps_n = sum_i sqrt(c_i) g_i p_i``.

    ``c`` is indexed like the problem's (ascending) eigenvalues.
    """

    def __init__(self, problem: QuadraticProblem, c, seed) -> None:
        c = np.asarray(c, dtype=float)
        if c.shape != (problem.dim,) or np.any(c < 0):
            raise ValueError("c must hold one non-negative variance per eigenmode")
        self.problem = problem
        self.c = c
        self._scale = np.sqrt(c)
        self._noise = StepNoise(seed, problem.dim)
        self.noise_spec = NoiseSpec.unstructured(c)

    def noise(self, n: int) -> np.ndarray:
        return self.problem.basis @ (self._scale * self._noise.row(n))

    def query(self, point, n: int) -> np.ndarray:
        return self.problem.gradient(point) - self.noise(n)


class RegressionStream:
    """Pairs ``(x_n, y_n)`` with ``x_n ~ N(0, H)`` and ``y_n = <theta_*, x_n> + r_n``.

    Residuals are Gaussian with standard deviation ``sigma`` and independent of
    ``x_n``, so ``E[r_n x_n] = 0`` and ``E[r_n^2 x_n x_n^T] = sigma^2 H``.
    """

    def __init__(self, problem: QuadraticProblem, sigma: float, seed) -> None:
        if not sigma >= 0:
            raise ValueError("sigma must be >= 0")
        self.problem = problem
        self.sigma = float(sigma)
        self._noise = StepNoise(seed, problem.dim + 1)
        self._root_h = np.sqrt(problem.eigenvalues)

    def sample(self, n: int) -> tuple[np.ndarray, float, float]:
        """``(x_n, y_n, r_n)`` for step ``n``."""
        row = self._noise.row(n)
        x = self.problem.basis @ (self._root_h * row[:-1])
        r = self.sigma * float(row[-1])
        return x, float(self.problem.optimum @ x) + r, r

    def to_csv(self, path: str | Path, N: int) -> Path:
        """Persist steps ``1..N`` as ``n, x_1..x_d, y``."""
        header = ["n"] + [f"x_{i + 1}" for i in range(self.problem.dim)] + ["y"]

        def rows():
            for n in range(1, N + 1):
                x, y, _ = self.sample(n)
                yield [n, *x, y]

        return write_csv(path, header, rows())


class ReplayedStream:
    """A regression stream read back from :meth:`RegressionStream.to_csv`.

    Residuals are recomputed as ``y - <theta_*, x>``.
    """

    def __init__(self, problem: QuadraticProblem, path: str | Path, sigma: float | None = None) -> None:
        header, rows = read_csv(path)
        d = problem.dim
        if len(header) != d + 2:
            raise ValueError(f"expected {d + 2} columns for dimension {d}, got {len(header)}")
        self.problem = problem
        self.sigma = sigma
        self._data = {int(row[0]): np.array([float(v) for v in row[1:]]) for row in rows}

    def sample(self, n: int) -> tuple[np.ndarray, float, float]:
        try:
            row = self._data[n]
        except KeyError:
            raise IndexError(f"step {n} not in the replayed stream") from None
        x, y = row[:-1], float(row[-1])
        return x, y, y - float(self.problem.optimum @ x)


class SemiStochasticOracle:
    """``H(theta - theta_*) - r_n x_n``: exact curvature, sampled residual term."""

    def __init__(self, stream: RegressionStream | ReplayedStream) -> None:
        self.stream = stream
        self.problem = stream.problem
        self.noise_spec = NoiseSpec.structured(stream.sigma**2)

    def query(self, point, n: int) -> np.ndarray:
        x, _, r = self.stream.sample(n)
        # H(theta - theta_*) written as H theta - q so that sigma = 0 is the exact oracle
        return self.problem.gradient(point) - r * x


class SGDOracle:
    """Single-sample least-squares gradient ``x_n <x_n, theta> - y_n x_n``.

    The declared structured noise is only indicative: the multiplicative part
    ``(H - x x^T)(theta - theta_*)`` is not covered by it.
    """

    conjectural = True

    def __init__(self, stream: RegressionStream | ReplayedStream) -> None:
        self.stream = stream
        self.problem = stream.problem
        self.noise_spec = NoiseSpec.structured((stream.sigma or 0.0) ** 2)

    def query(self, point, n: int) -> np.ndarray:
        x, y, _ = self.stream.sample(n)
        point = np.asarray(point, dtype=float)
        return x * float(x @ point) - y * x


def exact_oracle(problem: QuadraticProblem) -> ExactOracle:
    return ExactOracle(problem)


def additive_noise_oracle(problem: QuadraticProblem, c, seed) -> AdditiveNoiseOracle:
    return AdditiveNoiseOracle(problem, c, seed)


def ls_semi_stochastic_oracle(problem: QuadraticProblem, sigma: float, seed) -> SemiStochasticOracle:
    return SemiStochasticOracle(RegressionStream(problem, sigma, seed))


def ls_sgd_oracle(stream: RegressionStream | ReplayedStream) -> SGDOracle:
    return SGDOracle(stream)
