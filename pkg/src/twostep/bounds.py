"""Upper bounds, lower-bound constructions and Lyapunov functions for the two-step recursion.

Bounds that are a min over several terms drop a term whose denominator
vanishes (``alpha = 0`` or ``beta = 0``). A violated precondition does not
raise; the report carries ``preconditions_met = False`` and names the
condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .recursion import StepPair

__all__ = [
    "BoundReport",
    "iterate_bound",
    "function_bound_noiseless",
    "function_bound_unstructured",
    "function_bound_structured",
    "tradeoff_bound_unstructured",
    "tradeoff_bound_structured",
    "proposition_noise_bound",
    "lower_bound_curvature_first",
    "lower_bound_curvature_second",
    "LOWER_BOUND_LIMIT_FIRST",
    "LOWER_BOUND_LIMIT_SECOND",
    "lower_bound_scaled_excess",
    "lyapunov_g1",
    "lyapunov_g2",
]

LOWER_BOUND_LIMIT_FIRST = 0.5
LOWER_BOUND_LIMIT_SECOND = (1 - math.exp(-2)) ** 2 / 4


@dataclass(frozen=True)
class BoundReport:
    """A bound value with the labelled terms it was reduced from."""

    value: float
    components: list[tuple[str, float]] = field(default_factory=list)
    preconditions_met: bool = True
    violated: str | None = None
    reduction: str = "min"


def _report(terms: list[tuple[str, float | None]], violated: str | None, reduction: str = "min") -> BoundReport:
    kept = [(k, float(v)) for k, v in terms if v is not None]
    values = [v for _, v in kept]
    if not values:
        value = math.inf
    else:
        value = min(values) if reduction == "min" else max(values)
    return BoundReport(value, kept, violated is None, violated, reduction)


def _general_conditions(
    pair: StepPair, L: float, beta_cap: float, cap_label: str, curvature: str = "L"
) -> str | None:
    a, b = pair.alpha, pair.beta
    if a < 0:
        return "alpha >= 0"
    if a > 1 / L:
        return f"alpha <= 1/{curvature}"
    if b < 0:
        return "beta >= 0"
    if b > beta_cap:
        return cap_label
    return None


def _div(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def iterate_bound(pair: StepPair, h: float, eta1: float, n: int) -> BoundReport:
    """Bound on ``eta_n^2`` for the noiseless mode with eigenvalue ``h``."""
    violated = _general_conditions(pair, h, 2 / h - pair.alpha, "beta <= 2/h - alpha", "h")
    a, b = pair.alpha, pair.beta
    e2 = eta1 * eta1
    return _report(
        [
            ("2 eta1^2/(alpha h)", _div(2 * e2, a * h)),
            ("8 eta1^2 n/((alpha+beta) h)", _div(8 * e2 * n, (a + b) * h)),
            ("16 eta1^2/((alpha+beta)^2 h^2)", _div(16 * e2, ((a + b) * h) ** 2)),
        ],
        violated,
    )


def function_bound_noiseless(pair: StepPair, L: float, r: float, n: int) -> BoundReport:
    """Noiseless bound on ``f(theta_n) - f_*``."""
    violated = _general_conditions(pair, L, 2 / L - pair.alpha, "beta <= 2/L - alpha")
    a, b = pair.alpha, pair.beta
    return _report(
        [
            ("r^2/(alpha n^2)", _div(r * r, a * n * n)),
            ("4 r^2/((alpha+beta) n)", _div(4 * r * r, (a + b) * n)),
        ],
        violated,
    )


def function_bound_unstructured(pair: StepPair, L: float, r: float, trace_C: float, N: int) -> BoundReport:
    """Bound on ``E f(theta_N) - f_*`` when the noise covariance has trace ``trace_C``."""
    violated = _general_conditions(pair, L, 2 / L - pair.alpha, "beta <= 2/L - alpha")
    a, b = pair.alpha, pair.beta
    w2 = (a * N + b) ** 2
    first = None
    if a != 0:
        first = r * r / (a * N * N) + w2 / (a * N) * trace_C
    second = None
    if a + b != 0:
        second = 4 * r * r / ((a + b) * N) + 4 * w2 / (a + b) * trace_C
    return _report([("alpha-driven", first), ("alpha+beta-driven", second)], violated)


def function_bound_structured(pair: StepPair, L: float, r: float, trace_C_Hinv: float, N: int) -> BoundReport:
    """Bound on ``E f(theta_N) - f_*`` for noise covariance below ``sigma^2 H``.

    The bias part of the second term is ``4 r^2/((alpha+beta) N)``, the same as
    in the noiseless bound; averaged gradient descent at ``beta = 1/L`` then
    gives ``4 L r^2/N + 8 tr(C H^-1)/N``.
    """
    violated = _general_conditions(pair, L, 1.5 / L - pair.alpha / 2, "beta <= 3/(2L) - alpha/2")
    a, b = pair.alpha, pair.beta
    w2 = (a * N + b) ** 2
    first = None
    if a != 0 and b != 0:
        first = r * r / (N * N * a) + w2 / (a * b * N * N) * trace_C_Hinv
    second = None
    if a + b != 0:
        second = 4 * r * r / ((a + b) * N) + 8 * w2 / ((a + b) ** 2 * N) * trace_C_Hinv
    return _report([("alpha-beta-driven", first), ("alpha+beta-driven", second)], violated)


def tradeoff_bound_unstructured(r: float, trace_C: float, N: int, L: float) -> tuple[StepPair, BoundReport]:
    """Horizon-tuned pair for unstructured noise and its guaranteed bound."""
    if not (r > 0 and trace_C >= 0 and N >= 1 and L > 0):
        raise ValueError("need r > 0, trace_C >= 0, N >= 1, L > 0")
    raw = r / (2 * math.sqrt(trace_C) * N**1.5) if trace_C > 0 else math.inf
    alpha = min(raw, 1 / L)
    pair = StepPair(alpha, min(N * alpha, 1 / L))
    bias = 2 * L * r * r / N**2
    noise = 4 * math.sqrt(trace_C) * r / math.sqrt(N)
    return pair, BoundReport(bias + noise, [("2 L r^2/N^2", bias), ("4 sqrt(trC) r/sqrt(N)", noise)], reduction="sum")


def tradeoff_bound_structured(r: float, trace_C_Hinv: float, N: int, L: float) -> tuple[StepPair, BoundReport]:
    """Horizon-tuned pair for structured noise and its guaranteed bound."""
    if not (r > 0 and trace_C_Hinv >= 0 and N >= 1 and L > 0):
        raise ValueError("need r > 0, trace_C_Hinv >= 0, N >= 1, L > 0")
    tr = trace_C_Hinv
    raw = r / (math.sqrt(L * tr) * N) if tr > 0 else math.inf
    alpha = min(raw, 1 / L)
    pair = StepPair(alpha, min(N * alpha, 1 / L))
    report = _report(
        [
            ("5 tr(CH^-1)/N", 5 * tr / N),
            ("5 sqrt(tr(CH^-1) L) r/N", 5 * math.sqrt(tr * L) * r / N),
            ("2 r^2 L/N^2", 2 * r * r * L / N**2),
        ],
        None,
        reduction="max",
    )
    return pair, report


def proposition_noise_bound(pair: StepPair, h: float, c: float, n: int) -> float:
    """Per-mode bound on the noise part of ``h E[eta_n^2]/n^2``.

    Four terms; those with a vanishing denominator, or a non-positive
    ``4 - (alpha + 2 beta) h``, are dropped. Returns ``inf`` when none applies.
    """
    if c == 0:
        return 0.0
    a, b = pair.alpha, pair.beta
    w2 = (a * n + b) ** 2
    slack = 4 - (a + 2 * b) * h
    candidates = []
    if a > 0 and b > 0 and slack > 0:
        candidates.append((2 * w2 * c, a * b * slack * n * n * h))
    if a + b > 0:
        candidates.append((16 * w2 * c, n * (a + b) ** 2 * h))
    if a > 0:
        candidates.append((2 * w2 * c, n * a))
    if a + b > 0:
        candidates.append((8 * w2 * c, a + b))
    # denominators can underflow for subnormal step sizes; such terms are dropped
    terms = [num / den for num, den in candidates if den > 0]
    return min(terms) if terms else math.inf


def lower_bound_curvature_first(alpha_n: float, n: int) -> float:
    """Curvature ``pi^2/(4 alpha_n n^2)`` for which ``alpha n^2 (f(theta_n) - f_*) -> r^2/2``."""
    if not alpha_n > 0:
        raise ValueError("alpha_n must be positive")
    return math.pi**2 / (4 * alpha_n * n * n)


def lower_bound_curvature_second(alpha_n: float, beta_n: float, n: int) -> float:
    """Curvature for which ``n (alpha+beta)(f(theta_n) - f_*) -> (1 - e^-2)^2 r^2/4``.

    With ``alpha_n = 0`` only the first term survives and the roots are real;
    that regime is degenerate for the limit.
    """
    if not alpha_n + beta_n > 0:
        raise ValueError("alpha_n + beta_n must be positive")
    s = alpha_n + beta_n
    return 2 / (n * s) + 4 * alpha_n / (s * s)


def lower_bound_scaled_excess(regime: str, alpha: float, beta: float, n: int, r: float = 1.0) -> float:
    """Run the noiseless 1-D recursion on the adversarial curvature and rescale.

    ``regime`` is ``"first"`` (returns ``alpha n^2 excess``) or ``"second"``
    (returns ``n (alpha + beta) excess``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if regime == "first":
        h = lower_bound_curvature_first(alpha, n)
        scale = alpha * n * n
    elif regime == "second":
        h = lower_bound_curvature_second(alpha, beta, n)
        scale = n * (alpha + beta)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    a = 2 - (alpha + beta) * h
    b = beta * h - 1
    prev, cur = 0.0, float(r)
    for _ in range(1, n):
        prev, cur = cur, a * cur + b * prev
    return scale * 0.5 * h * (cur / n) ** 2


def lyapunov_g1(eta, eta_prev, alpha: float):
    """``Theta^T G1 Theta`` with ``G1 = [[1, alpha-1], [alpha-1, 1-alpha]]`` (unit curvature).

    Non-increasing along the noiseless recursion for ``0 <= alpha <= 1`` and
    ``1 - sqrt(1-alpha) < beta < 1 + sqrt(1-alpha)``.
    """
    eta = np.asarray(eta, dtype=float)
    eta_prev = np.asarray(eta_prev, dtype=float)
    return eta * eta + 2 * (alpha - 1) * eta * eta_prev + (1 - alpha) * eta_prev * eta_prev


def lyapunov_g2(eta, eta_prev, pair: StepPair, h: float = 1.0):
    """``(eta_n - r eta_{n-1})^2 - Delta eta_{n-1}^2``; contracts by exactly ``1 - beta h`` per step."""
    r = 1 - (pair.alpha + pair.beta) * h / 2
    delta = h * (((pair.alpha + pair.beta) / 2) ** 2 * h - pair.alpha)
    eta = np.asarray(eta, dtype=float)
    eta_prev = np.asarray(eta_prev, dtype=float)
    return (eta - r * eta_prev) ** 2 - delta * eta_prev * eta_prev
