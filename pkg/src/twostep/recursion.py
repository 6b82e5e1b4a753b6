"""The (alpha, beta) two-step recursion in gradient form and in reduced form.

Gradient form, started with ``theta_1 = theta_0``::

    theta_{n+1} = 2n/(n+1) theta_n - (n-1)/(n+1) theta_{n-1}
                  - (n alpha + beta)/(n+1) * g_n

where ``g_n`` is the oracle's reply at the affine combination
``n(alpha+beta)/(n alpha+beta) theta_n - (n-1) beta/(n alpha+beta) theta_{n-1}``.

Reduced form, for ``eta_n = n (theta_n - theta_*)`` projected on an eigenvector
with eigenvalue ``h``::

    eta_{n+1} = (1 - alpha h) eta_n + (1 - beta h)(eta_n - eta_{n-1}) + (n alpha + beta) eps_{n+1}
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Protocol

import numpy as np

from ._io import write_csv
from .quadratic import QuadraticProblem

__all__ = [
    "GradientOracle",
    "StepPair",
    "ScheduleKind",
    "Schedule",
    "NoiseSummary",
    "IterateState",
    "Trajectory",
    "resolve_schedule",
    "query_point",
    "step",
    "run",
    "reduced_step",
    "reduced_run",
    "avgd_reference",
]


class GradientOracle(Protocol):
    def query(self, point: np.ndarray, n: int) -> np.ndarray: ...


@dataclass(frozen=True)
class StepPair:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError(f"step sizes must be finite, got {self.alpha}, {self.beta}")

    def scaled(self, h: float) -> tuple[float, float]:
        return self.alpha * h, self.beta * h


class ScheduleKind(str, Enum):
    AVGD = "AvGD"
    ACCGD = "AccGD"
    HEAVY_BALL = "HeavyBall"
    CUSTOM = "Custom"
    BIAS_VARIANCE = "BiasVariance"
    OPTIMAL_UNSTRUCTURED = "OptimalUnstructured"
    OPTIMAL_STRUCTURED = "OptimalStructured"


@dataclass(frozen=True)
class NoiseSummary:
    """The two noise statistics the horizon-tuned schedules need."""

    trace_C: float
    trace_C_Hinv: float


@dataclass(frozen=True)
class Schedule:
    """A named rule producing a :class:`StepPair`.

    ``gamma`` parametrizes the three classical methods, ``a`` the bias-variance
    family, ``alpha``/``beta`` the custom pair. With ``anytime=True`` the
    horizon-dependent rules are re-evaluated at every step with ``n`` in place
    of ``N``.
    """

    kind: ScheduleKind
    horizon: int
    gamma: float | None = None
    a: float | None = None
    alpha: float | None = None
    beta: float | None = None
    anytime: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind in (ScheduleKind.AVGD, ScheduleKind.ACCGD, ScheduleKind.HEAVY_BALL):
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"{self.kind.value} needs gamma > 0")
        if self.kind is ScheduleKind.BIAS_VARIANCE:
            if self.a is None or not 0 <= self.a <= 1:
                raise ValueError("BiasVariance needs 0 <= a <= 1")
        if self.kind is ScheduleKind.CUSTOM and (self.alpha is None or self.beta is None):
            raise ValueError("Custom needs alpha and beta")

    @property
    def horizon_dependent(self) -> bool:
        return self.kind in (
            ScheduleKind.BIAS_VARIANCE,
            ScheduleKind.OPTIMAL_UNSTRUCTURED,
            ScheduleKind.OPTIMAL_STRUCTURED,
        )

    def with_anytime(self, flag: bool = True) -> Schedule:
        return replace(self, anytime=flag)


def resolve_schedule(
    schedule: Schedule,
    L: float,
    r: float | None = None,
    noise_summary: NoiseSummary | None = None,
    n_or_N: int | None = None,
) -> StepPair:
    """Turn a schedule into ``(alpha, beta)`` for curvature bound ``L``.

    ``n_or_N`` defaults to the schedule's horizon.
    """
    N = schedule.horizon if n_or_N is None else n_or_N
    if N < 1:
        raise ValueError("N must be >= 1")
    if not L > 0:
        raise ValueError("L must be positive")
    kind = schedule.kind
    if kind is ScheduleKind.AVGD:
        return StepPair(0.0, schedule.gamma)
    if kind is ScheduleKind.ACCGD:
        return StepPair(schedule.gamma, schedule.gamma)
    if kind is ScheduleKind.HEAVY_BALL:
        return StepPair(schedule.gamma, 0.0)
    if kind is ScheduleKind.CUSTOM:
        return StepPair(schedule.alpha, schedule.beta)
    if kind is ScheduleKind.BIAS_VARIANCE:
        return StepPair(1.0 / (L * N**schedule.a), 1.0 / L)

    if noise_summary is None:
        raise ValueError(f"{kind.value} needs noise statistics")
    if r is None:
        raise ValueError(f"{kind.value} needs the distance r = |theta_0 - theta_*|")
    if kind is ScheduleKind.OPTIMAL_UNSTRUCTURED:
        tr = noise_summary.trace_C
        raw = r / (2.0 * math.sqrt(tr) * N**1.5) if tr > 0 else math.inf
    else:
        tr = noise_summary.trace_C_Hinv
        raw = r / (math.sqrt(L * tr) * N) if tr > 0 else math.inf
    alpha = min(raw, 1.0 / L)
    return StepPair(alpha, min(N * alpha, 1.0 / L))


def pair_function(
    spec: StepPair | Schedule | Callable[[int], StepPair],
    L: float,
    r: float | None = None,
    noise_summary: NoiseSummary | None = None,
) -> Callable[[int], StepPair]:
    """Normalize a pair, schedule or callable into ``n -> StepPair``."""
    if isinstance(spec, StepPair):
        return lambda n: spec
    if isinstance(spec, Schedule):
        if spec.anytime and spec.horizon_dependent:
            return lambda n: resolve_schedule(spec, L, r, noise_summary, n)
        fixed = resolve_schedule(spec, L, r, noise_summary)
        return lambda n: fixed
    return spec


@dataclass(frozen=True)
class IterateState:
    current: np.ndarray
    previous: np.ndarray
    n: int = 1

    @classmethod
    def start(cls, theta0) -> IterateState:
        theta0 = np.asarray(theta0, dtype=float)
        return cls(theta0, theta0, 1)


@dataclass
class Trajectory:
    """Excess values ``f(theta_n) - f_*`` for ``n = 0..N`` plus run metadata.

    Entry 0 and entry 1 both describe the starting point (``theta_1 = theta_0``).
    Once a run diverges, the remaining entries hold ``inf``.
    """

    excess: np.ndarray
    theta_norm: np.ndarray
    iterates: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    diverged: bool = False
    diverged_at: int | None = None

    @property
    def horizon(self) -> int:
        return self.excess.size - 1

    def to_csv(self, path: str | Path) -> Path:
        rows = zip(range(self.excess.size), self.excess, self.theta_norm)
        return write_csv(path, ["n", "excess", "theta_norm"], rows)


def query_point(state: IterateState, pair: StepPair) -> np.ndarray | None:
    """Affine combination the oracle is queried at; ``None`` when ``n alpha + beta = 0``."""
    n = state.n
    denom = n * pair.alpha + pair.beta
    if denom == 0:
        return None
    a = n * (pair.alpha + pair.beta) / denom
    b = (n - 1) * pair.beta / denom
    return a * state.current - b * state.previous


def step(oracle: GradientOracle, state: IterateState, pair: StepPair) -> IterateState:
    """One application of the gradient-form recursion.

    Raises:
        ValueError: on a dimension mismatch in the oracle reply.
        FloatingPointError: if the oracle reply is not finite.
    """
    n = state.n
    if n < 1:
        raise ValueError("iterate index must be >= 1")
    new = (2 * n * state.current - (n - 1) * state.previous) / (n + 1)
    point = query_point(state, pair)
    if point is not None:
        g = np.asarray(oracle.query(point, n), dtype=float)
        if g.shape != state.current.shape:
            raise ValueError(f"oracle returned shape {g.shape}, expected {state.current.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite oracle reply at step {n}")
        new = new - (n * pair.alpha + pair.beta) / (n + 1) * g
    return IterateState(new, state.current, n + 1)


def _noise_summary_of(oracle, problem: QuadraticProblem) -> NoiseSummary | None:
    spec = getattr(oracle, "noise_spec", None)
    if spec is None:
        return None
    return spec.summary(problem.eigenvalues)


class _Recorder:
    def __init__(self, problem: QuadraticProblem, N: int, keep_iterates: bool) -> None:
        self.problem = problem
        self.excess = np.empty(N + 1)
        self.norm = np.empty(N + 1)
        self.iterates = np.empty((N + 1, problem.dim)) if keep_iterates else None
        self.diverged_at: int | None = None

    def record(self, n: int, theta: np.ndarray) -> bool:
        with np.errstate(over="ignore", invalid="ignore"):
            e = self.problem.excess(theta)
            nrm = float(np.linalg.norm(theta))
        if not (math.isfinite(e) and math.isfinite(nrm)):
            self.excess[n:] = np.inf
            self.norm[n:] = np.inf
            if self.iterates is not None:
                self.iterates[n:] = np.nan
            self.diverged_at = n
            return False
        self.excess[n] = e
        self.norm[n] = nrm
        if self.iterates is not None:
            self.iterates[n] = theta
        return True

    def trajectory(self, metadata: dict) -> Trajectory:
        return Trajectory(
            self.excess,
            self.norm,
            self.iterates,
            metadata,
            diverged=self.diverged_at is not None,
            diverged_at=self.diverged_at,
        )


def run(
    oracle: GradientOracle,
    theta0,
    pair: StepPair | Schedule | Callable[[int], StepPair],
    N: int,
    problem: QuadraticProblem,
    keep_iterates: bool = False,
    metadata: dict | None = None,
) -> Trajectory:
    """Iterate the gradient form up to ``theta_N`` and record excess values.

    A :class:`Schedule` is resolved with ``L`` from ``problem``, ``r`` from
    ``theta0`` and the oracle's declared noise statistics.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    theta0 = np.asarray(theta0, dtype=float)
    r = float(np.linalg.norm(theta0 - problem.optimum))
    pair_at = pair_function(pair, problem.largest(), r, _noise_summary_of(oracle, problem))
    rec = _Recorder(problem, N, keep_iterates)
    state = IterateState.start(theta0)
    ok = rec.record(0, theta0) and rec.record(1, theta0)
    while ok and state.n < N:
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                state = step(oracle, state, pair_at(state.n))
        except FloatingPointError:
            rec.record(state.n + 1, np.full_like(theta0, np.inf))
            break
        ok = rec.record(state.n, state.current)
    meta = {"horizon": N, "pair": pair if isinstance(pair, (StepPair, Schedule)) else "callable"}
    meta.update(metadata or {})
    return rec.trajectory(meta)


def reduced_step(eta, eta_prev, pair: StepPair, h, noise=None, n: int | None = None):
    """Per-eigenmode reduced update; broadcasts over arrays of modes or replications.

    ``noise`` is ``eps_{n+1}`` and is weighted by ``n alpha + beta``.
    """
    out = (1 - pair.alpha * h) * eta + (1 - pair.beta * h) * (eta - eta_prev)
    if noise is not None:
        if n is None:
            raise ValueError("the step index n is needed to weight the noise")
        out = out + (n * pair.alpha + pair.beta) * noise
    return out


def reduced_run(alpha, beta, h, eta1, N: int) -> np.ndarray:
    """Noiseless reduced recursion for ``n = 0..N``, vectorized over modes.

    ``alpha``, ``beta``, ``h`` and ``eta1`` broadcast together; the result has
    shape ``(N + 1,) + broadcast_shape`` with ``eta_0 = 0`` and ``eta_1 = eta1``.
    """
    alpha, beta, h, eta1 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (alpha, beta, h, eta1)))
    a = 2 - (alpha + beta) * h
    b = beta * h - 1
    out = np.empty((N + 1,) + alpha.shape)
    out[0] = 0.0
    if N >= 1:
        out[1] = eta1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, N):
            out[n + 1] = a * out[n] + b * out[n - 1]
    return out


def avgd_reference(
    gamma: float,
    oracle: GradientOracle,
    theta0,
    N: int,
    problem: QuadraticProblem,
    keep_iterates: bool = False,
) -> Trajectory:
    """Averaged gradient descent written with an explicit running average.

    ``psi_{n+1} = psi_n - gamma g(psi_n)`` and
    ``theta_{n+1} = theta_n + (psi_{n+1} - theta_n)/(n+1)``, started from
    ``psi_1 = theta_1 = theta_0``. The oracle is queried with the same step
    index as :func:`run`, so coupled noise is shared.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    theta = np.asarray(theta0, dtype=float)
    psi = theta.copy()
    rec = _Recorder(problem, N, keep_iterates)
    ok = rec.record(0, theta) and rec.record(1, theta)
    n = 1
    while ok and n < N:
        with np.errstate(over="ignore", invalid="ignore"):
            g = np.asarray(oracle.query(psi, n), dtype=float)
            psi = psi - gamma * g
            theta = theta + (psi - theta) / (n + 1)
        n += 1
        ok = rec.record(n, theta)
    return rec.trajectory({"horizon": N, "reference": "avgd", "gamma": gamma})
