"""Exact second moments of the reduced recursion under additive gradient noise.

For each eigenmode the pair ``Theta_n = (eta_n, eta_{n-1})`` follows
``Theta_{n+1} = F Theta_n + ((n alpha + beta) eps_{n+1}, 0)`` with
``F = [[2 - (alpha+beta)h, beta h - 1], [1, 0]]``. With uncorrelated noise of
variance ``c`` the 2x2 second moment follows
``M' = F M F^T + diag((n alpha + beta)^2 c, 0)``, which gives the expected
excess without sampling.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import write_csv
from .quadratic import QuadraticProblem
from .recursion import NoiseSummary, StepPair
from .spectral import EigenMode, closed_form_eta

__all__ = [
    "NoiseSpec",
    "SecondMoment",
    "MomentCurve",
    "moment_step",
    "moment_curve",
    "expected_excess",
    "bias_variance_split",
    "variance_term_closed_form",
    "root_square_sum",
    "root_square_sum_bound",
    "two_step_expected_excess",
]

_KINDS = ("None", "Unstructured", "Structured")


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Per-mode noise variances ``c_i = E[(eps^i)^2]``.

    ``Unstructured`` stores the variances directly. ``Structured`` stores
    ``sigma2`` and sets ``c_i = sigma2 * h_i`` for whatever spectrum it is
    evaluated on, i.e. the covariance bound ``sigma^2 H`` at equality.
    """

    kind: str
    variances: np.ndarray | None = None
    sigma2: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "Unstructured":
            c = np.asarray(self.variances, dtype=float)
            if c.ndim != 1 or np.any(c < 0) or not np.all(np.isfinite(c)):
                raise ValueError("variances must be a finite non-negative 1-D array")
            c.flags.writeable = False
            object.__setattr__(self, "variances", c)
        if self.kind == "Structured" and (self.sigma2 is None or not self.sigma2 >= 0):
            raise ValueError("structured noise needs sigma2 >= 0")

    @classmethod
    def none(cls) -> NoiseSpec:
        return cls("None")

    @classmethod
    def unstructured(cls, variances) -> NoiseSpec:
        return cls("Unstructured", variances=variances)

    @classmethod
    def isotropic(cls, trace_C: float, d: int) -> NoiseSpec:
        """Unstructured noise with ``c_i = trace_C / d``."""
        return cls("Unstructured", variances=np.full(d, trace_C / d))

    @classmethod
    def structured(cls, sigma2: float) -> NoiseSpec:
        return cls("Structured", sigma2=float(sigma2))

    def per_mode(self, eigenvalues) -> np.ndarray:
        h = np.asarray(eigenvalues, dtype=float)
        if self.kind == "None":
            return np.zeros_like(h)
        if self.kind == "Structured":
            return self.sigma2 * h
        if self.variances.shape != h.shape:
            raise ValueError(f"{self.variances.size} variances for {h.size} modes")
        return self.variances.copy()

    def trace_C(self, eigenvalues) -> float:
        return float(np.sum(self.per_mode(eigenvalues)))

    def trace_C_Hinv(self, eigenvalues) -> float:
        h = np.asarray(eigenvalues, dtype=float)
        if self.kind == "Structured":
            return self.sigma2 * h.size
        return float(np.sum(self.per_mode(h) / h))

    def summary(self, eigenvalues) -> NoiseSummary:
        return NoiseSummary(self.trace_C(eigenvalues), self.trace_C_Hinv(eigenvalues))

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "Unstructured":
            out["variances"] = self.variances.tolist()
        if self.kind == "Structured":
            out["sigma2"] = self.sigma2
        return out


@dataclass(frozen=True)
class SecondMoment:
    """Entries of the symmetric per-mode matrices ``E[Theta Theta^T]`` at index ``n``."""

    m11: np.ndarray
    m12: np.ndarray
    m22: np.ndarray
    n: int

    @classmethod
    def start(cls, eta1) -> SecondMoment:
        e = np.asarray(eta1, dtype=float)
        return cls(e * e, np.zeros_like(e), np.zeros_like(e), 1)

    def matrices(self) -> np.ndarray:
        """Shape ``(..., 2, 2)`` array of the per-mode matrices."""
        top = np.stack([self.m11, self.m12], axis=-1)
        bottom = np.stack([self.m12, self.m22], axis=-1)
        return np.stack([top, bottom], axis=-2)


def _propagate(m11, m12, m22, a, b, q):
    return a * a * m11 + 2 * a * b * m12 + b * b * m22 + q, a * m11 + b * m12, m11


def moment_step(M: SecondMoment, pair: StepPair, h, c, n: int | None = None) -> SecondMoment:
    """``M' = F M F^T + diag((n alpha + beta)^2 c, 0)``; ``n`` defaults to ``M.n``."""
    n = M.n if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    h = np.asarray(h, dtype=float)
    a = 2 - (pair.alpha + pair.beta) * h
    b = pair.beta * h - 1
    q = (n * pair.alpha + pair.beta) ** 2 * np.asarray(c, dtype=float)
    return SecondMoment(*_propagate(M.m11, M.m12, M.m22, a, b, q), n + 1)


@dataclass
class MomentCurve:
    """Expected excess for ``n = 0..N`` with its bias/variance split."""

    total: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    diverged_at: int | None = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def to_csv(self, path: str | Path, every: int = 1) -> Path:
        idx = range(0, self.total.size, max(1, every))
        rows = ((n, self.total[n], self.bias[n], self.variance[n]) for n in idx)
        return write_csv(path, ["N", "total", "bias", "variance"], rows)


def _mode_data(problem: QuadraticProblem, theta0, noise: NoiseSpec | None):
    h = problem.eigenvalues
    eta1 = problem.to_eigenbasis(np.asarray(theta0, dtype=float) - problem.optimum).coords
    c = (noise or NoiseSpec.none()).per_mode(h)
    return h, eta1, c


def _curve_for(h, eta1, c, pair: StepPair, N: int) -> tuple[np.ndarray, int | None]:
    out = np.empty(N + 1)
    M = SecondMoment.start(eta1)
    first = 0.5 * float(np.sum(h * M.m11))
    out[0] = first
    if N >= 1:
        out[1] = first
    bad = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, N):
            M = moment_step(M, pair, h, c, n)
            val = 0.5 * float(np.sum(h * M.m11)) / (n + 1) ** 2
            if not math.isfinite(val):
                out[n + 1:] = np.inf
                bad = n + 1
                break
            out[n + 1] = val
    return out, bad


def moment_curve(
    problem: QuadraticProblem, theta0, pair: StepPair, noise: NoiseSpec | None, N: int
) -> MomentCurve:
    """Expected excess for every horizon up to ``N``, from three propagations.

    The total is propagated independently of the bias and variance parts so
    that their additivity is a check, not an identity of the code.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    h, eta1, c = _mode_data(problem, theta0, noise)
    total, bad = _curve_for(h, eta1, c, pair, N)
    bias, _ = _curve_for(h, eta1, np.zeros_like(c), pair, N)
    variance, _ = _curve_for(h, np.zeros_like(eta1), c, pair, N)
    return MomentCurve(total, bias, variance, bad)


def expected_excess(
    problem: QuadraticProblem, theta0, pair: StepPair, noise: NoiseSpec | None, N: int
) -> float:
    """``E f(theta_N) - f_*``; ``inf`` when the propagation overflows."""
    if N < 1:
        raise ValueError("N must be >= 1")
    h, eta1, c = _mode_data(problem, theta0, noise)
    return float(_curve_for(h, eta1, c, pair, N)[0][N])


def bias_variance_split(
    problem: QuadraticProblem, theta0, pair: StepPair, noise: NoiseSpec | None, N: int
) -> tuple[float, float]:
    """``(bias, variance)``: the noiseless excess and the excess started at the optimum."""
    bias = expected_excess(problem, theta0, pair, None, N)
    variance = expected_excess(problem, problem.optimum, pair, noise, N)
    return bias, variance


def variance_term_closed_form(mode: EigenMode, c: float, n: int) -> float:
    """Noise part of ``h E[eta_n^2]`` written with the characteristic roots.

    Noise drawn at step ``k`` enters ``eta_{k+1}`` with weight
    ``k alpha + beta`` and reaches ``eta_n`` multiplied by
    ``U_{n-k} = (r_-^{n-k} - r_+^{n-k})/(r_- - r_+)``, so the term is
    ``h c sum_{k=1}^{n-1} (k alpha + beta)^2 U_{n-k}^2``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 0.0
    k = np.arange(1, n)
    u = closed_form_eta(mode, 1.0, n - k)
    w = k * mode.pair.alpha + mode.pair.beta
    return float(mode.h * c * np.sum((w * u) ** 2))


def root_square_sum(mode: EigenMode, n: int) -> float:
    """``sum_{k=1}^{n} U_k^2`` for the mode's roots."""
    u = closed_form_eta(mode, 1.0, np.arange(1, n + 1))
    return float(np.sum(u * u))


def root_square_sum_bound(pair: StepPair, h: float) -> float:
    """Uniform-in-``n`` bound on :func:`root_square_sum` for ``0 < alpha <= 1/h``, ``0 < beta <= 2/h - alpha``."""
    a, b = pair.alpha, pair.beta
    return (2 - b * h) / (4 * a * b * h * h * (1 - (a / 4 + b / 2) * h))


def two_step_expected_excess(
    eigenvalues, x1, coefficients: Iterable[tuple[float, float]], c
) -> np.ndarray:
    """Exact expected excess of a time-varying two-step method, per step.

    Each entry ``(delta_n, m_n)`` of ``coefficients`` describes
    ``x_{n+1} = (1 + m_n)(1 - delta_n h) x_n - m_n (1 - delta_n h) x_{n-1} + delta_n eps``
    in one eigen-coordinate, with ``x`` the deviation from the optimum and
    ``x_0 = x_1``. Returns ``0.5 sum_i h_i E[x^2]`` after every step, the
    first entry being the start.
    """
    h = np.asarray(eigenvalues, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    c = np.asarray(c, dtype=float)
    m11 = x1 * x1
    m12 = m11.copy()
    m22 = m11.copy()
    out = [0.5 * float(np.sum(h * m11))]
    for delta, m in coefficients:
        contraction = 1 - delta * h
        a = (1 + m) * contraction
        b = -m * contraction
        m11, m12, m22 = _propagate(m11, m12, m22, a, b, delta * delta * c)
        out.append(0.5 * float(np.sum(h * m11)))
    return np.asarray(out)
