"""Stochastic accelerated baselines (AC-SA, SAGE, accelerated RDA) and their two-step forms.

On a quadratic each baseline is a two-step method

    y = x_n + m_n (x_n - x_{n-1}),    x_{n+1} = y - delta_n * oracle(y, n)

with per-step step size ``delta_n`` and momentum ``m_n``. The verbatim
implementations below and :func:`run_two_step` driven by
:func:`reduce_to_unified` produce the same iterates.

Trajectories follow the same indexing as :func:`twostep.recursion.run`:
entries 0 and 1 hold the start and entry ``k + 1`` holds the iterate after
``k`` oracle calls, the ``k``-th call using step index ``k``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .moments import two_step_expected_excess
from .quadratic import QuadraticProblem
from .recursion import GradientOracle, Trajectory, _Recorder

__all__ = [
    "BaselineConfig",
    "RegimeMismatch",
    "acsa_config",
    "sage_config",
    "accrda_config",
    "acsa_preset",
    "sage_preset",
    "accrda_preset",
    "run_acsa",
    "run_sage",
    "run_accrda",
    "run_two_step",
    "reduce_to_unified",
    "two_step_coefficients",
    "accrda_bound",
    "baseline_expected_excess",
]


class RegimeMismatch(ValueError):
    """The schedules fall outside the regime in which the two-step reduction holds."""


@dataclass(frozen=True)
class BaselineConfig:
    """Per-step schedules of one baseline.

    ``schedules`` maps names to functions of the step index ``n >= 1``:
    ``gamma``/``beta`` for AC-SA, ``L``/``alpha`` for SAGE and
    ``alpha``/``beta`` for accelerated RDA (which also needs the constant
    ``L``). ``constant_beta`` marks an accelerated RDA run whose ``beta`` does
    not depend on ``n``.
    """

    kind: str
    horizon: int
    schedules: dict[str, Callable[[int], float]]
    L: float | None = None
    constant_beta: bool = True
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        needed = {"ACSA": ("gamma", "beta"), "SAGE": ("L", "alpha"), "AccRDA": ("alpha", "beta")}
        if self.kind not in needed:
            raise ValueError(f"unknown baseline {self.kind!r}")
        missing = [k for k in needed[self.kind] if k not in self.schedules]
        if missing:
            raise ValueError(f"{self.kind} needs schedules {missing}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind == "AccRDA" and (self.L is None or not self.L > 0):
            raise ValueError("AccRDA needs L > 0")

    def at(self, name: str, n: int) -> float:
        return float(self.schedules[name](n))


def acsa_config(gamma: Callable[[int], float], beta: Callable[[int], float], horizon: int, label: str = "AC-SA") -> BaselineConfig:
    return BaselineConfig("ACSA", horizon, {"gamma": gamma, "beta": beta}, label=label)


def sage_config(L_seq: Callable[[int], float], alpha: Callable[[int], float], horizon: int, label: str = "SAGE") -> BaselineConfig:
    return BaselineConfig("SAGE", horizon, {"L": L_seq, "alpha": alpha}, label=label)


def accrda_config(
    alpha: Callable[[int], float],
    beta: Callable[[int], float] | float,
    L: float,
    horizon: int,
    label: str = "Acc-RDA",
) -> BaselineConfig:
    constant = not callable(beta)
    beta_fn = (lambda n, b=float(beta): b) if constant else beta
    return BaselineConfig("AccRDA", horizon, {"alpha": alpha, "beta": beta_fn}, L=L, constant_beta=constant, label=label)


# -- step-size presets -------------------------------------------------------


def acsa_preset(L: float, r: float, trace_C: float, N: int, anytime: bool = True) -> BaselineConfig:
    """``beta_n = (n+1)/2``, ``gamma_n = (n+1) g/2`` with ``g = min{1/(4L), sqrt(6) r/(sqrt(trC) (N+2)^1.5)}``.

    With ``anytime`` the horizon ``N`` is replaced by the current step ``n``.
    """

    def g(n: int) -> float:
        m = n if anytime else N
        raw = math.sqrt(6) * r / (math.sqrt(trace_C) * (m + 2) ** 1.5) if trace_C > 0 else math.inf
        return min(1 / (4 * L), raw)

    cfg = acsa_config(lambda n: (n + 1) * g(n) / 2, lambda n: (n + 1) / 2, N)
    return _with_params(cfg, preset="acsa", L=L, r=r, trace_C=trace_C, anytime=anytime)


def sage_preset(L: float, r: float, trace_C: float, N: int) -> BaselineConfig:
    """``alpha_n = 2/(n+1)``, ``L_n = L + b (n+1)^1.5`` with ``b = sqrt(trC)/(sqrt(12) r)``; anytime by construction."""
    b = math.sqrt(trace_C) / (math.sqrt(12) * r)
    cfg = sage_config(lambda n: L + b * (n + 1) ** 1.5, lambda n: 2 / (n + 1), N)
    return _with_params(cfg, preset="sage", L=L, r=r, trace_C=trace_C, b=b)


def accrda_preset(L: float, r: float, trace_C: float, N: int, mode: str = "anytime") -> BaselineConfig:
    """Accelerated RDA with ``alpha_n = n/2``.

    ``mode``:
        ``"theorem"``: constant ``beta = 0``, so ``gamma = 1/L``.
        ``"horizon"``: constant ``beta`` with ``gamma = 1/(L+beta)`` minimizing
            ``4 r^2/(N^2 gamma) + N gamma trC/3`` subject to ``gamma <= 1/L``.
        ``"anytime"``: growing ``beta_n = L + b (n+1)^1.5``, ``b = sqrt(trC)/(sqrt(12) r)``.
    """
    alpha = lambda n: n / 2
    if mode == "theorem":
        cfg = accrda_config(alpha, 0.0, L, N)
    elif mode == "horizon":
        raw = 2 * math.sqrt(3) * r / (math.sqrt(trace_C) * N**1.5) if trace_C > 0 else math.inf
        gamma = min(1 / L, raw)
        cfg = accrda_config(alpha, 1 / gamma - L, L, N)
    elif mode == "anytime":
        b = math.sqrt(trace_C) / (math.sqrt(12) * r)
        cfg = accrda_config(alpha, lambda n: L + b * (n + 1) ** 1.5, L, N)
    else:
        raise ValueError(f"unknown Acc-RDA mode {mode!r}")
    return _with_params(cfg, preset="accrda", mode=mode, L=L, r=r, trace_C=trace_C)


def _with_params(cfg: BaselineConfig, **params) -> BaselineConfig:
    return BaselineConfig(cfg.kind, cfg.horizon, cfg.schedules, cfg.L, cfg.constant_beta, cfg.label, params)


# -- verbatim implementations ------------------------------------------------


def _check_reply(g: np.ndarray, shape: tuple) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != shape:
        raise ValueError(f"oracle returned shape {g.shape}, expected {shape}")
    return g


def run_acsa(
    config: BaselineConfig, oracle: GradientOracle, x1, N: int, problem: QuadraticProblem, keep_iterates: bool = False
) -> Trajectory:
    """AC-SA without projection; records the aggregated iterate ``x^ag``."""
    if config.kind != "ACSA":
        raise ValueError("not an AC-SA config")
    x = np.asarray(x1, dtype=float)
    ag = x.copy()
    rec = _Recorder(problem, N, keep_iterates)
    ok = rec.record(0, ag) and rec.record(1, ag)
    for n in range(1, N):
        if not ok:
            break
        b, gam = config.at("beta", n), config.at("gamma", n)
        if b < 1:
            raise ValueError(f"beta_n must be >= 1, got {b} at n={n}")
        with np.errstate(over="ignore", invalid="ignore"):
            md = x / b + (1 - 1 / b) * ag
            g = _check_reply(oracle.query(md, n), x.shape)
            x = x - gam * g
            ag = x / b + (1 - 1 / b) * ag
        ok = rec.record(n + 1, ag)
    return rec.trajectory({"horizon": N, "baseline": config.label, **config.params})


def run_sage(
    config: BaselineConfig, oracle: GradientOracle, y0, N: int, problem: QuadraticProblem, keep_iterates: bool = False
) -> Trajectory:
    """SAGE without projection, started from ``z_0 = y_0``; records ``y_n``."""
    if config.kind != "SAGE":
        raise ValueError("not a SAGE config")
    y = np.asarray(y0, dtype=float)
    z = y.copy()
    rec = _Recorder(problem, N, keep_iterates)
    ok = rec.record(0, y) and rec.record(1, y)
    for n in range(1, N):
        if not ok:
            break
        a, Ln = config.at("alpha", n), config.at("L", n)
        if not 0 < a <= 1:
            raise ValueError(f"alpha_n must lie in (0, 1], got {a} at n={n}")
        with np.errstate(over="ignore", invalid="ignore"):
            x = (1 - a) * y + a * z
            g = _check_reply(oracle.query(x, n), x.shape)
            y = x - g / Ln
            z = z - (x - y) / a
        ok = rec.record(n + 1, y)
    return rec.trajectory({"horizon": N, "baseline": config.label, **config.params})


def run_accrda(
    config: BaselineConfig, oracle: GradientOracle, w0, N: int, problem: QuadraticProblem, keep_iterates: bool = False
) -> Trajectory:
    """Accelerated RDA without a regularizer, ``v_0 = w_0``; records ``w_n``."""
    if config.kind != "AccRDA":
        raise ValueError("not an accelerated RDA config")
    v0 = np.asarray(w0, dtype=float)
    w, v = v0.copy(), v0.copy()
    g_avg = np.zeros_like(v0)
    A = 0.0
    rec = _Recorder(problem, N, keep_iterates)
    ok = rec.record(0, w) and rec.record(1, w)
    for n in range(1, N):
        if not ok:
            break
        a = config.at("alpha", n)
        A += a
        t = a / A
        with np.errstate(over="ignore", invalid="ignore"):
            u = (1 - t) * w + t * v
            g = _check_reply(oracle.query(u, n), u.shape)
            g_avg = (1 - t) * g_avg + t * g
            v = v0 - A / (config.L + config.at("beta", n)) * g_avg
            w = (1 - t) * w + t * v
        ok = rec.record(n + 1, w)
    return rec.trajectory({"horizon": N, "baseline": config.label, **config.params})


# -- two-step reductions -----------------------------------------------------


def reduce_to_unified(config: BaselineConfig, n: int) -> tuple[float, float]:
    """Step size ``delta_n`` and momentum ``m_n`` the baseline applies at step ``n``.

    At ``n = 1`` the momentum multiplies ``x_1 - x_0 = 0``; it is reported as 0.

    Raises:
        RegimeMismatch: accelerated RDA with a step-dependent ``beta``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if config.kind == "ACSA":
        b = config.at("beta", n)
        delta = config.at("gamma", n) / b
        m = 0.0 if n == 1 else (config.at("beta", n - 1) - 1) / b
        return delta, m
    if config.kind == "SAGE":
        delta = 1 / config.at("L", n)
        if n == 1:
            return delta, 0.0
        a_prev, a = config.at("alpha", n - 1), config.at("alpha", n)
        return delta, (1 - a_prev) * a / a_prev
    if not config.constant_beta:
        raise RegimeMismatch("the two-step form of accelerated RDA needs a constant beta")
    alphas = [config.at("alpha", k) for k in range(1, n + 1)]
    A = np.cumsum([0.0] + alphas)  # A[k] = A_k
    a = alphas[-1]
    delta = a * a / (A[n] * (config.L + config.at("beta", n)))
    m = 0.0 if n == 1 else a * A[n - 2] / (alphas[-2] * A[n])
    return delta, m


def two_step_coefficients(config: BaselineConfig, N: int) -> list[tuple[float, float]]:
    """``[(delta_n, m_n) for n = 1..N-1]`` computed in one pass."""
    if config.kind != "AccRDA":
        return [reduce_to_unified(config, n) for n in range(1, N)]
    if not config.constant_beta:
        raise RegimeMismatch("the two-step form of accelerated RDA needs a constant beta")
    out = []
    A_prev2, A_prev, a_prev = 0.0, 0.0, None
    for n in range(1, N):
        a = config.at("alpha", n)
        A = A_prev + a
        delta = a * a / (A * (config.L + config.at("beta", n)))
        m = 0.0 if n == 1 else a * A_prev2 / (a_prev * A)
        out.append((delta, m))
        A_prev2, A_prev, a_prev = A_prev, A, a
    return out


def run_two_step(
    oracle: GradientOracle,
    x1,
    coefficients: Callable[[int], tuple[float, float]],
    N: int,
    problem: QuadraticProblem,
    keep_iterates: bool = False,
    label: str = "two-step",
) -> Trajectory:
    """Generic momentum method ``x_{n+1} = y - delta_n oracle(y, n)``, ``y = x_n + m_n (x_n - x_{n-1})``."""
    cur = np.asarray(x1, dtype=float)
    prev = cur.copy()
    rec = _Recorder(problem, N, keep_iterates)
    ok = rec.record(0, cur) and rec.record(1, cur)
    for n in range(1, N):
        if not ok:
            break
        delta, m = coefficients(n)
        with np.errstate(over="ignore", invalid="ignore"):
            y = cur + m * (cur - prev)
            g = _check_reply(oracle.query(y, n), y.shape)
            prev, cur = cur, y - delta * g
        ok = rec.record(n + 1, cur)
    return rec.trajectory({"horizon": N, "baseline": label})


def baseline_expected_excess(config: BaselineConfig, problem: QuadraticProblem, x1, c, N: int) -> np.ndarray:
    """Exact expected excess (entries ``0..N``) of a baseline under noise variances ``c`` per mode."""
    x = problem.to_eigenbasis(np.asarray(x1, dtype=float) - problem.optimum).coords
    curve = two_step_expected_excess(problem.eigenvalues, x, two_step_coefficients(config, N), c)
    return np.concatenate([curve[:1], curve])


def accrda_bound(r: float, gamma: float, trace_C: float, n: int) -> float:
    """``4 r^2/(n^2 gamma) + n gamma trC/3`` for accelerated RDA with ``delta_n <= (n-1)/n gamma``."""
    return 4 * r * r / (n * n * gamma) + n * gamma * trace_C / 3
