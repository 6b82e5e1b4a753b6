import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from reference import eta_float

from twostep import bounds as bnd
from twostep.moments import NoiseSpec, expected_excess, variance_term_closed_form
from twostep.quadratic import make_problem, spectrum_power_law
from twostep.recursion import StepPair, reduced_run
from twostep.spectral import RealDistinct, classify, closed_form_eta, closed_form_excess


def component(report, label):
    return dict(report.components)[label]


# -- iterate bound -----------------------------------------------------------


def test_iterate_bound_hand_value():
    rep = bnd.iterate_bound(StepPair(1.0, 1.0), 1.0, 1.0, 4)
    assert rep.value == pytest.approx(2.0)
    assert [v for _, v in rep.components] == pytest.approx([2.0, 16.0, 4.0])
    assert rep.preconditions_met


def test_iterate_bound_zero_start():
    assert bnd.iterate_bound(StepPair(0.3, 0.3), 1.0, 0.0, 10).value == 0.0


def test_iterate_bound_drops_vanishing_alpha():
    rep = bnd.iterate_bound(StepPair(0.0, 1.0), 1.0, 1.0, 2)
    assert rep.value == pytest.approx(16.0)
    assert len(rep.components) == 2


@pytest.mark.parametrize(
    "pair, label",
    [((-0.1, 0.5), "alpha >= 0"), ((1.5, 0.1), "alpha <= 1/h"), ((0.5, -0.1), "beta >= 0"), ((0.5, 1.6), "beta <= 2/h - alpha")],
)
def test_iterate_bound_reports_violations(pair, label):
    rep = bnd.iterate_bound(StepPair(*pair), 1.0, 1.0, 5)
    assert not rep.preconditions_met
    assert rep.violated == label


@settings(max_examples=200, deadline=None)
@given(h=st.floats(0.01, 10), a=st.floats(0, 1), frac=st.floats(0, 1), eta1=st.floats(-10, 10), n=st.integers(1, 5000))
def test_iterate_bound_dominates(h, a, frac, eta1, n):
    alpha = a / h
    beta = frac * (2 / h - alpha)
    rep = bnd.iterate_bound(StepPair(alpha, beta), h, eta1, n)
    assert rep.preconditions_met
    eta = closed_form_eta(classify(StepPair(alpha, beta), h), eta1, n)
    assert eta * eta <= rep.value * (1 + 1e-9) + 1e-300


# -- noiseless function bound ------------------------------------------------


def test_noiseless_bound_accelerated():
    assert bnd.function_bound_noiseless(StepPair(1.0, 1.0), 1.0, 1.0, 10).value == pytest.approx(0.01)


@pytest.mark.parametrize("L, r, n", [(1.0, 1.0, 10), (2.0, 3.0, 100), (0.5, 0.1, 7)])
def test_noiseless_bound_averaged(L, r, n):
    assert bnd.function_bound_noiseless(StepPair(0.0, 1 / L), L, r, n).value == pytest.approx(4 * r * r * L / n)


def test_noiseless_bound_zero_distance():
    assert bnd.function_bound_noiseless(StepPair(0.5, 0.5), 1.0, 0.0, 10).value == 0.0


def test_both_steps_zero_give_no_bound():
    assert math.isinf(bnd.function_bound_noiseless(StepPair(0.0, 0.0), 1.0, 1.0, 10).value)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(0, 1), frac=st.floats(0, 1), n=st.integers(1, 3000))
def test_noiseless_bound_dominates(seed, a, frac, n):
    p, theta0 = make_problem(spectrum_power_law(6, 2), 1.0, seed)
    L = p.largest()
    pair = StepPair(a / L, frac * (2 - a) / L)
    rep = bnd.function_bound_noiseless(pair, L, 1.0, n)
    assert closed_form_excess(p, theta0, pair, n) <= rep.value * (1 + 1e-9)


# -- unstructured noise ------------------------------------------------------


def test_unstructured_accelerated_first_term_grows():
    vals = []
    for N in (10, 100, 1000):
        rep = bnd.function_bound_unstructured(StepPair(1.0, 1.0), 1.0, 1.0, 0.5, N)
        first = component(rep, "alpha-driven")
        assert first == pytest.approx(1 / N**2 + (N + 1) ** 2 / N * 0.5)
        vals.append(first)
    assert vals[0] < vals[1] < vals[2]


def test_unstructured_reduces_to_noiseless():
    pair = StepPair(0.3, 0.7)
    a = bnd.function_bound_unstructured(pair, 1.0, 2.0, 0.0, 50).value
    assert a == pytest.approx(bnd.function_bound_noiseless(pair, 1.0, 2.0, 50).value)


@pytest.mark.parametrize("N", [16, 100, 10_000])
def test_unstructured_averaged_root_n_rate(N):
    L, r, tc = 2.0, 1.5, 0.3
    rep = bnd.function_bound_unstructured(StepPair(0.0, 1 / (L * math.sqrt(N))), L, r, tc, N)
    expected = 4 * r * r * L * math.sqrt(N) / N + 4 * tc / (L * math.sqrt(N))
    assert rep.value == pytest.approx(expected, rel=1e-12)


# -- structured noise --------------------------------------------------------


@pytest.mark.parametrize("L, r, tr, N", [(1.0, 1.0, 1.0, 100), (4.0, 2.0, 0.5, 1000)])
def test_structured_averaged_component(L, r, tr, N):
    rep = bnd.function_bound_structured(StepPair(0.0, 1 / L), L, r, tr, N)
    assert component(rep, "alpha+beta-driven") == pytest.approx(4 * L * r * r / N + 8 * tr / N, rel=1e-12)


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_structured_bias_variance_family(a):
    L, r, tr = 2.0, 1.0, 3.0
    for N in (100, 10_000, 1_000_000):
        pair = StepPair(1 / (L * N**a), 1 / L)
        first = component(bnd.function_bound_structured(pair, L, r, tr, N), "alpha-beta-driven")
        ref = L * r * r / N ** (2 - a) + tr / N**a
        assert 0.5 <= first / ref <= 4.0


def test_structured_noiseless_limit_decays():
    pair = StepPair(0.5, 0.5)
    vals = [bnd.function_bound_structured(pair, 1.0, 1.0, 0.0, N).value for N in (10, 100, 1000)]
    assert vals == pytest.approx([1 / (0.5 * N**2) for N in (10, 100, 1000)])


def test_structured_precondition_cap():
    rep = bnd.function_bound_structured(StepPair(1.0, 1.1), 1.0, 1.0, 1.0, 10)
    assert rep.violated == "beta <= 3/(2L) - alpha/2"


# -- horizon-tuned pairs -----------------------------------------------------


def test_tradeoff_unstructured_values():
    pair, rep = bnd.tradeoff_bound_unstructured(1.0, 1.0, 100, 1.0)
    assert pair.alpha == pytest.approx(5e-4)
    assert rep.value == pytest.approx(2e-4 + 0.4)
    assert rep.reduction == "sum"


def test_tradeoff_unstructured_noiseless():
    pair, rep = bnd.tradeoff_bound_unstructured(1.0, 0.0, 100, 2.0)
    assert pair.alpha == 0.5
    assert rep.value == pytest.approx(2 * 2.0 / 100**2)


def test_tradeoff_structured_values():
    pair, rep = bnd.tradeoff_bound_structured(1.0, 1.0, 100, 1.0)
    assert (pair.alpha, pair.beta) == pytest.approx((0.01, 1.0))
    assert rep.value == pytest.approx(0.05)
    assert rep.reduction == "max"


def test_tradeoff_structured_noiseless():
    _, rep = bnd.tradeoff_bound_structured(1.0, 0.0, 100, 3.0)
    assert rep.value == pytest.approx(2 * 3.0 / 100**2)


@pytest.mark.parametrize("fn", [bnd.tradeoff_bound_unstructured, bnd.tradeoff_bound_structured])
def test_tradeoff_rejects_bad_input(fn):
    with pytest.raises(ValueError):
        fn(0.0, 1.0, 10, 1.0)


def test_tradeoff_unstructured_dominates_moment_engine():
    rng = np.random.default_rng(0)
    for seed in range(50):
        d = int(rng.integers(2, 10))
        p, theta0 = make_problem(rng.uniform(0.01, 2, d), float(rng.uniform(0.1, 5)), seed)
        noise = NoiseSpec.unstructured(rng.uniform(0, 1, d))
        N = int(rng.integers(10, 400))
        r = float(np.linalg.norm(theta0 - p.optimum))
        pair, rep = bnd.tradeoff_bound_unstructured(r, noise.trace_C(p.eigenvalues), N, p.largest())
        assert expected_excess(p, theta0, pair, noise, N) <= rep.value


def test_tradeoff_structured_dominates_moment_engine():
    rng = np.random.default_rng(1)
    for seed in range(50):
        d = int(rng.integers(2, 10))
        p, theta0 = make_problem(rng.uniform(0.01, 2, d), float(rng.uniform(0.1, 5)), seed)
        noise = NoiseSpec.structured(float(rng.uniform(0.01, 2)))
        N = int(rng.integers(10, 400))
        r = float(np.linalg.norm(theta0 - p.optimum))
        pair, rep = bnd.tradeoff_bound_structured(r, noise.trace_C_Hinv(p.eigenvalues), N, p.largest())
        assert expected_excess(p, theta0, pair, noise, N) <= rep.value


# -- per-mode noise bound ----------------------------------------------------


def test_noise_bound_zero_variance():
    assert bnd.proposition_noise_bound(StepPair(0.3, 0.3), 1.0, 0.0, 10) == 0.0


def test_noise_bound_random_walk():
    b = bnd.proposition_noise_bound(StepPair(0.0, 1.0), 1.0, 1.0, 10)
    assert b >= 9 / 100


@settings(max_examples=200, deadline=None)
@given(h=st.floats(0.01, 10), a=st.floats(0, 1), frac=st.floats(0, 1), c=st.floats(0, 10), n=st.integers(1, 2000))
def test_noise_bound_dominates_variance_term(h, a, frac, c, n):
    alpha = a / h
    beta = frac * (2 / h - alpha)
    pair = StepPair(alpha, beta)
    var = variance_term_closed_form(classify(pair, h), c, n) / n**2
    assert var <= bnd.proposition_noise_bound(pair, h, c, n) * (1 + 1e-9) + 1e-300


# -- lower bounds ------------------------------------------------------------


def test_lower_bound_limits():
    assert bnd.LOWER_BOUND_LIMIT_FIRST == 0.5
    assert bnd.LOWER_BOUND_LIMIT_SECOND == pytest.approx((1 - math.exp(-2)) ** 2 / 4)


def test_lower_bound_zero_distance():
    assert bnd.lower_bound_scaled_excess("first", 0.1, 0.1, 100, r=0.0) == 0.0
    assert bnd.lower_bound_scaled_excess("second", 1e-4, 1.0, 100, r=0.0) == 0.0


def test_lower_bound_first_sequence():
    s = bnd.lower_bound_scaled_excess("first", 0.1, 0.1, 100_000)
    assert abs(s - 0.5) <= 0.05 * 0.5


def test_lower_bound_second_sequence():
    n = 10_000
    s = bnd.lower_bound_scaled_excess("second", 1 / n**2, 1.0, n)
    assert abs(s - bnd.LOWER_BOUND_LIMIT_SECOND) <= 0.05 * bnd.LOWER_BOUND_LIMIT_SECOND


def test_lower_bound_matches_reduced_recursion():
    n = 300
    h = bnd.lower_bound_curvature_first(0.1, n)
    eta = eta_float(0.1, 0.1, h, 2.0, n)[n]
    assert bnd.lower_bound_scaled_excess("first", 0.1, 0.1, n, r=2.0) == pytest.approx(0.1 * n * n * 0.5 * h * (eta / n) ** 2)


def test_lower_bound_without_alpha_has_real_roots():
    h = bnd.lower_bound_curvature_second(0.0, 1.0, 50)
    assert h == pytest.approx(2 / 50)
    assert isinstance(classify(StepPair(0.0, 1.0), h).classification, RealDistinct)


@pytest.mark.parametrize(
    "call",
    [
        lambda: bnd.lower_bound_curvature_first(0.0, 10),
        lambda: bnd.lower_bound_curvature_second(0.0, 0.0, 10),
        lambda: bnd.lower_bound_scaled_excess("third", 0.1, 0.1, 10),
        lambda: bnd.lower_bound_scaled_excess("first", 0.1, 0.1, 0),
    ],
)
def test_lower_bound_rejects_bad_input(call):
    with pytest.raises(ValueError):
        call()


# -- Lyapunov functions ------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0, 1), frac=st.floats(0.001, 0.999), eta1=st.floats(-10, 10), prev=st.floats(-10, 10))
def test_first_lyapunov_function_non_increasing(alpha, frac, eta1, prev):
    s = math.sqrt(1 - alpha)
    beta = 1 - s + frac * 2 * s
    pair = StepPair(alpha, beta)
    eta_prev, eta = prev, eta1
    g = bnd.lyapunov_g1(eta, eta_prev, alpha)
    # G1 can cancel to zero, so roundoff is measured against the state size
    scale = eta * eta + eta_prev * eta_prev
    for _ in range(200):
        eta_prev, eta = eta, (1 - alpha) * eta + (1 - beta) * (eta - eta_prev)
        g_next = bnd.lyapunov_g1(eta, eta_prev, alpha)
        assert g_next <= g + 1e-10 * scale
        g = g_next


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0, 1), frac=st.floats(0, 1), h=st.floats(0.1, 2), eta1=st.floats(-10, 10))
def test_second_lyapunov_function_contracts(alpha, frac, h, eta1):
    a = alpha / h
    beta = frac * (2 / h - a)
    pair = StepPair(a, beta)
    eta = reduced_run(a, beta, h, eta1, 100)
    g = bnd.lyapunov_g2(eta[1:], eta[:-1], pair, h)
    ratio = 1 - beta * h
    scale = np.maximum(np.abs(g[:-1]), np.abs(eta[1:-1]) ** 2 + np.abs(eta[:-2]) ** 2)
    assert np.all(np.abs(g[1:] - ratio * g[:-1]) <= 1e-10 * np.maximum(scale, 1e-300))


def test_lyapunov_vectorized():
    out = bnd.lyapunov_g1(np.ones(3), np.zeros(3), 0.5)
    np.testing.assert_array_equal(out, np.ones(3))
