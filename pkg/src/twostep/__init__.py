"""Two-step (alpha, beta) gradient recursions for quadratics: iterates, spectra, moments and bounds."""

from .bounds import BoundReport
from .moments import NoiseSpec, bias_variance_split, expected_excess, moment_curve
from .quadratic import QuadraticProblem, make_problem, spectrum_power_law
from .recursion import Schedule, ScheduleKind, StepPair, Trajectory, resolve_schedule, run
from .spectral import EigenMode, Stability, classify, stability_map

__all__ = [
    "BoundReport",
    "EigenMode",
    "NoiseSpec",
    "QuadraticProblem",
    "Schedule",
    "ScheduleKind",
    "Stability",
    "StepPair",
    "Trajectory",
    "bias_variance_split",
    "classify",
    "expected_excess",
    "make_problem",
    "moment_curve",
    "resolve_schedule",
    "run",
    "spectrum_power_law",
    "stability_map",
]

__version__ = "0.1.0"
