import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twostep.quadratic import QuadraticProblem, random_orthogonal  # noqa: E402


def zero_optimum_problem(eigenvalues, seed: int) -> QuadraticProblem:
    """Random-basis problem with theta_* = 0, so iterates keep full relative precision."""
    h = np.sort(np.asarray(eigenvalues, dtype=float))
    P = random_orthogonal(h.size, np.random.default_rng(seed))
    return QuadraticProblem.from_spectrum(h, P, np.zeros(h.size), seed)


@pytest.fixture
def small_problem():
    rng = np.random.default_rng(11)
    h = rng.uniform(0.05, 1.0, 5)
    p = zero_optimum_problem(h, 11)
    theta0 = rng.standard_normal(5)
    return p, theta0


# -- acceptance report -------------------------------------------------------

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record_acceptance(criterion: str, ok: bool, detail: str) -> None:
    """Store one checked part of an acceptance criterion and echo it."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        parts = ACCEPTANCE[key]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
