import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twostep.quadratic import QuadraticProblem, make_problem, random_orthogonal, spectrum_power_law


def test_power_law_flat_spectrum():
    assert spectrum_power_law(3, 0) == [1.0, 1.0, 1.0]


def test_power_law_values():
    np.testing.assert_allclose(spectrum_power_law(3, 2), [1.0, 0.25, 1 / 9], rtol=0, atol=1e-15)
    assert spectrum_power_law(2, 8) == [1.0, 0.00390625]
    np.testing.assert_allclose(spectrum_power_law(20, 2), [1 / k**2 for k in range(1, 21)])


def test_power_law_rejects_empty():
    with pytest.raises(ValueError):
        spectrum_power_law(0, 2)


def test_one_dimensional_problem():
    p, theta0 = make_problem([1.0], 1.0, seed=3)
    assert p.dim == 1
    assert abs(np.linalg.norm(theta0 - p.optimum) - 1.0) < 1e-15
    assert p.excess(theta0) == pytest.approx(0.5, abs=1e-15)


def test_gradient_vanishes_at_optimum():
    p, _ = make_problem(spectrum_power_law(20, 2), 1.0, seed=0)
    assert np.all(p.gradient(p.optimum) == 0.0)
    assert p.excess(p.optimum) == 0.0


def test_scalar_gradient_and_excess():
    p = QuadraticProblem.from_spectrum([2.0], [[1.0]], [0.0])
    assert p.gradient([3.0]) == pytest.approx([6.0])
    q = QuadraticProblem.from_spectrum([1.0], [[1.0]], [0.0])
    assert q.excess([2.0]) == pytest.approx(2.0)


def test_excess_matches_value_difference():
    p, theta0 = make_problem([0.1, 0.5, 3.0], 2.0, seed=5)
    assert p.excess(theta0) == pytest.approx(p.value(theta0) - p.value(p.optimum), rel=1e-12)


def test_eigenbasis_of_eigenvector_is_unit_coordinate():
    p, _ = make_problem([0.2, 0.7, 1.0, 4.0], 1.0, seed=2)
    np.testing.assert_allclose(p.to_eigenbasis(p.basis[:, 0]).coords, [1, 0, 0, 0], atol=1e-14)
    np.testing.assert_array_equal(p.to_eigenbasis(np.zeros(4)).coords, np.zeros(4))


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 12), seed=st.integers(0, 2**31 - 1))
def test_eigenbasis_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    p, _ = make_problem(rng.uniform(0.01, 5, d), 1.0, seed)
    v = rng.standard_normal(d)
    assert np.max(np.abs(p.from_eigenbasis(p.to_eigenbasis(v)) - v)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 15), seed=st.integers(0, 2**31 - 1), r=st.floats(1e-3, 1e3))
def test_problem_invariants(d, seed, r):
    rng = np.random.default_rng(seed)
    p, theta0 = make_problem(rng.uniform(0.01, 5, d), r, seed)
    assert np.all(p.eigenvalues > 0)
    assert np.all(np.diff(p.eigenvalues) >= 0)
    assert np.max(np.abs(p.basis.T @ p.basis - np.eye(d))) <= 1e-12
    np.testing.assert_allclose(p.linear_term, p.hessian() @ p.optimum, atol=1e-12)
    assert np.linalg.norm(theta0 - p.optimum) == pytest.approx(r, rel=1e-12)
    assert p.excess(theta0) >= 0


def test_seed_reproducible():
    a, ta = make_problem([1.0, 0.5, 0.1], 1.0, seed=9)
    b, tb = make_problem([1.0, 0.5, 0.1], 1.0, seed=9)
    np.testing.assert_array_equal(a.basis, b.basis)
    np.testing.assert_array_equal(ta, tb)


@pytest.mark.parametrize("eig", [[1.0, 0.0], [1.0, -0.5]])
def test_rejects_non_positive_eigenvalues(eig):
    with pytest.raises(ValueError):
        make_problem(eig, 1.0, seed=0)


def test_rejects_bad_distance():
    with pytest.raises(ValueError):
        make_problem([1.0], 0.0, seed=0)


def test_rejects_non_orthogonal_basis():
    with pytest.raises(ValueError):
        QuadraticProblem.from_spectrum([1.0, 2.0], [[1.0, 0.1], [0.0, 1.0]], [0.0, 0.0])


def test_rejects_unsorted_eigenvalues():
    with pytest.raises(ValueError):
        QuadraticProblem([2.0, 1.0], np.eye(2), np.zeros(2), np.zeros(2))


def test_dimension_mismatch():
    p, _ = make_problem([1.0, 2.0], 1.0, seed=0)
    with pytest.raises(ValueError):
        p.gradient(np.zeros(3))


def test_save_load_round_trip(tmp_path):
    p, theta0 = make_problem(spectrum_power_law(6, 2), 1.0, seed=4)
    path = tmp_path / "problem.json"
    p.save(path)
    q = QuadraticProblem.load(path)
    np.testing.assert_array_equal(q.basis, p.basis)
    np.testing.assert_array_equal(q.optimum, p.optimum)
    np.testing.assert_array_equal(q.linear_term, p.linear_term)
    assert q.excess(theta0) == p.excess(theta0)
    assert q.seed == 4


def test_random_orthogonal_is_orthogonal():
    Q = random_orthogonal(30, np.random.default_rng(0))
    assert np.max(np.abs(Q.T @ Q - np.eye(30))) < 1e-12
