"""Experiment configuration and the commands behind the command-line interface.

Every command is a pure function of its configuration and master seed and
writes CSV files only. Replication ``k`` draws its noise from
``SeedSequence([master_seed, k])``; the problem itself is fixed by the
problem seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bnd
from ._io import write_csv
from .baselines import accrda_preset, acsa_preset, run_accrda, run_acsa, run_sage, sage_preset
from .moments import NoiseSpec, expected_excess
from .oracles import ExactOracle, RegressionStream, SemiStochasticOracle, SGDOracle, AdditiveNoiseOracle
from .quadratic import QuadraticProblem, make_problem, spectrum_power_law
from .recursion import Schedule, ScheduleKind, StepPair, Trajectory, resolve_schedule, run
from .spectral import closed_form_eta, closed_form_excess, classify, stability_map

__all__ = [
    "ConfigError",
    "UnexpectedDivergence",
    "ProblemConfig",
    "NoiseConfig",
    "AlgorithmConfig",
    "ExperimentConfig",
    "load_config",
    "replication_seed",
    "cmd_run",
    "cmd_stability_map",
    "cmd_bounds_check",
    "cmd_lower_bound",
    "cmd_compare",
    "horizon_grid",
    "last_decade_slope",
    "compare_data",
    "CompareResult",
    "bounds_rows",
    "lower_bound_rows",
    "run_algorithm",
]

BASELINES = ("ACSA", "SAGE", "AccRDA")


class ConfigError(ValueError):
    pass


class UnexpectedDivergence(RuntimeError):
    pass


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing '{key}' in {where}")
    return d[key]


@dataclass(frozen=True)
class ProblemConfig:
    d: int
    r: float
    seed: int
    spectrum_m: float | None = None
    eigenvalues: tuple[float, ...] | None = None

    @classmethod
    def from_dict(cls, data: dict, default_seed: int) -> ProblemConfig:
        eig = data.get("eigenvalues")
        m = data.get("spectrum_m")
        if (eig is None) == (m is None):
            raise ConfigError("problem needs exactly one of 'spectrum_m' or 'eigenvalues'")
        d = int(data["d"]) if "d" in data else (len(eig) if eig is not None else 0)
        if d < 1 or (eig is not None and len(eig) != d):
            raise ConfigError("problem dimension 'd' must be >= 1 and match the eigenvalues")
        r = float(_require(data, "r", "problem"))
        if not r > 0:
            raise ConfigError("problem 'r' must be positive")
        return cls(d, r, int(data.get("seed", default_seed)), m, tuple(eig) if eig is not None else None)

    def build(self) -> tuple[QuadraticProblem, np.ndarray]:
        eig = self.eigenvalues if self.eigenvalues is not None else spectrum_power_law(self.d, self.spectrum_m)
        try:
            return make_problem(eig, self.r, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class NoiseConfig:
    """``kind`` is ``none``, ``unstructured`` or ``structured``.

    Unstructured noise takes explicit per-mode ``variances`` or a ``trace_C``
    spread evenly over the modes. Structured noise takes ``sigma`` and an
    ``oracle`` (``semi_stochastic`` or ``sgd``).
    """

    kind: str = "none"
    sigma: float = 0.0
    trace_C: float | None = None
    variances: tuple[float, ...] | None = None
    oracle: str = "semi_stochastic"

    @classmethod
    def from_dict(cls, data: dict | None) -> NoiseConfig:
        data = data or {"kind": "none"}
        kind = data.get("kind", "none")
        if kind == "none":
            return cls()
        if kind == "unstructured":
            if ("trace_C" in data) == ("variances" in data):
                raise ConfigError("unstructured noise needs exactly one of 'trace_C' or 'variances'")
            v = data.get("variances")
            tc = data.get("trace_C")
            if (tc is not None and not tc >= 0) or (v is not None and min(v) < 0):
                raise ConfigError("noise variances must be non-negative")
            return cls(kind, trace_C=tc, variances=tuple(v) if v is not None else None)
        if kind == "structured":
            sigma = float(_require(data, "sigma", "noise"))
            oracle = data.get("oracle", "semi_stochastic")
            if sigma < 0 or oracle not in ("semi_stochastic", "sgd"):
                raise ConfigError("structured noise needs sigma >= 0 and oracle in {semi_stochastic, sgd}")
            return cls(kind, sigma=sigma, oracle=oracle)
        raise ConfigError(f"unknown noise kind {kind!r}")

    def spec(self, d: int) -> NoiseSpec:
        if self.kind == "none":
            return NoiseSpec.none()
        if self.kind == "structured":
            return NoiseSpec.structured(self.sigma**2)
        if self.variances is not None:
            if len(self.variances) != d:
                raise ConfigError(f"{len(self.variances)} noise variances for dimension {d}")
            return NoiseSpec.unstructured(self.variances)
        return NoiseSpec.isotropic(self.trace_C, d)

    def make_oracle(self, problem: QuadraticProblem, seed):
        if self.kind == "none":
            return ExactOracle(problem)
        if self.kind == "unstructured":
            return AdditiveNoiseOracle(problem, self.spec(problem.dim).per_mode(problem.eigenvalues), seed)
        stream = RegressionStream(problem, self.sigma, seed)
        return SemiStochasticOracle(stream) if self.oracle == "semi_stochastic" else SGDOracle(stream)


@dataclass(frozen=True)
class AlgorithmConfig:
    """One algorithm: a unified schedule or a baseline preset.

    ``gamma`` may be a number or the string ``"1/L"``.
    """

    name: str
    schedule: dict | None = None
    baseline: str | None = None
    mode: str = "anytime"

    @classmethod
    def from_dict(cls, data: dict) -> AlgorithmConfig:
        name = str(_require(data, "name", "algorithm"))
        sched, base = data.get("schedule"), data.get("baseline")
        if (sched is None) == (base is None):
            raise ConfigError(f"algorithm {name!r} needs exactly one of 'schedule' or 'baseline'")
        if base is not None and base not in BASELINES:
            raise ConfigError(f"unknown baseline {base!r}")
        if sched is not None:
            try:
                ScheduleKind(sched.get("kind"))
            except ValueError:
                raise ConfigError(f"unknown schedule kind {sched.get('kind')!r}") from None
        return cls(name, sched, base, data.get("mode", "anytime"))

    def schedule_for(self, L: float, N: int, anytime: bool) -> Schedule:
        s = dict(self.schedule)
        kind = s.pop("kind")
        if s.get("gamma") == "1/L":
            s["gamma"] = 1.0 / L
        s.setdefault("anytime", anytime)
        try:
            return Schedule(kind, N, **s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"algorithm {self.name!r}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemConfig
    noise: NoiseConfig
    algorithms: tuple[AlgorithmConfig, ...]
    horizon: int
    replications: int
    seed: int
    allow_divergence: bool = False
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, seed: int | None = None, reps: int | None = None) -> ExperimentConfig:
        master = int(seed if seed is not None else data.get("seed", 0))
        horizon = int(_require(data, "horizon", "config"))
        replications = int(reps if reps is not None else data.get("replications", 1))
        if horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if replications < 1:
            raise ConfigError("replications must be >= 1")
        algs = tuple(AlgorithmConfig.from_dict(a) for a in data.get("algorithms", []))
        names = [a.name for a in algs]
        if len(set(names)) != len(names):
            raise ConfigError("algorithm names must be unique")
        return cls(
            ProblemConfig.from_dict(_require(data, "problem", "config"), master),
            NoiseConfig.from_dict(data.get("noise")),
            algs,
            horizon,
            replications,
            master,
            bool(data.get("allow_divergence", False)),
        )


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def replication_seed(master_seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, rep])


# -- running algorithms ------------------------------------------------------


def _baseline_config(alg: AlgorithmConfig, L: float, r: float, trace_C: float, N: int):
    if alg.baseline == "ACSA":
        return acsa_preset(L, r, trace_C, N, anytime=alg.mode != "horizon"), run_acsa
    if alg.baseline == "SAGE":
        return sage_preset(L, r, trace_C, N), run_sage
    return accrda_preset(L, r, trace_C, N, mode=alg.mode), run_accrda


def _in_triangle(pair: StepPair, L: float) -> bool:
    return pair.alpha >= 0 and pair.beta >= 0 and pair.alpha + 2 * pair.beta <= 4 / L


def run_algorithm(
    alg: AlgorithmConfig, problem: QuadraticProblem, theta0, oracle, noise: NoiseSpec, N: int, anytime: bool = False
) -> tuple[Trajectory, bool]:
    """One run; returns the trajectory and whether divergence would be expected."""
    L = problem.largest()
    r = float(np.linalg.norm(theta0 - problem.optimum))
    if alg.baseline is not None:
        cfg, runner = _baseline_config(alg, L, r, noise.trace_C(problem.eigenvalues), N)
        return runner(cfg, oracle, theta0, N, problem), False
    sched = alg.schedule_for(L, N, anytime)
    try:
        pair = resolve_schedule(sched, L, r, noise.summary(problem.eigenvalues))
    except ValueError as exc:
        raise ConfigError(f"algorithm {alg.name!r}: {exc}") from exc
    traj = run(oracle, theta0, sched, N, problem, metadata={"algorithm": alg.name})
    expected = not _in_triangle(pair, L) or isinstance(oracle, SGDOracle) or noise.kind == "Unstructured"
    return traj, expected


def _summarize(curves: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    finite = np.isfinite(curves)
    n_div = np.sum(~finite, axis=0)
    k = np.sum(finite, axis=0)
    safe = np.where(finite, curves, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(k > 0, safe.sum(axis=0) / np.maximum(k, 1), np.inf)
        var = np.where(k > 1, np.sum(np.where(finite, (safe - mean) ** 2, 0.0), axis=0) / np.maximum(k - 1, 1), 0.0)
        stderr = np.sqrt(var / np.maximum(k, 1))
    return mean, stderr, n_div


def cmd_run(cfg: ExperimentConfig, out: str | Path, anytime: bool = False) -> dict[str, Path]:
    """One CSV per algorithm: ``n, mean_excess, stderr_excess, diverged_reps``.

    Means and standard errors are over the replications that stayed finite.
    """
    if not cfg.algorithms:
        raise ConfigError("no algorithms configured")
    problem, theta0 = cfg.problem.build()
    noise = cfg.noise.spec(problem.dim)
    N = cfg.horizon
    curves = {a.name: np.empty((cfg.replications, N + 1)) for a in cfg.algorithms}
    for rep in range(cfg.replications):
        oracle = cfg.noise.make_oracle(problem, replication_seed(cfg.seed, rep))
        for alg in cfg.algorithms:
            traj, expected = run_algorithm(alg, problem, theta0, oracle, noise, N, anytime)
            if traj.diverged and not (expected or cfg.allow_divergence):
                raise UnexpectedDivergence(f"{alg.name} diverged at step {traj.diverged_at} (replication {rep})")
            curves[alg.name][rep] = traj.excess
    paths = {}
    for name, c in curves.items():
        mean, se, nd = _summarize(c)
        paths[name] = write_csv(
            Path(out) / f"run_{name}.csv",
            ["n", "mean_excess", "stderr_excess", "diverged_reps"],
            zip(range(N + 1), mean, se, nd),
        )
    return paths


# -- stability map -----------------------------------------------------------


def cmd_stability_map(
    alpha_range: tuple[float, float], beta_range: tuple[float, float], h: float, resolution: int, out: str | Path
) -> Path:
    (a0, a1), (b0, b1) = alpha_range, beta_range
    if not (a0 < a1 and b0 < b1):
        raise ConfigError("alpha and beta ranges must be non-empty (low < high)")
    if resolution < 2:
        raise ConfigError("resolution must be >= 2")
    if not h > 0:
        raise ConfigError("h must be positive")
    grid = stability_map(np.linspace(a0, a1, resolution), np.linspace(b0, b1, resolution), h)
    return grid.to_csv(Path(out) / "stability_map.csv")


# -- bounds check ------------------------------------------------------------

BOUND_HEADER = ["alpha", "beta", "N", "empirical", "bound", "slack", "preconditions_met"]


def _grid(spec, name: str) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    if isinstance(spec, dict):
        lo, hi = _require(spec, "low", name), _require(spec, "high", name)
        count = int(_require(spec, "count", name))
        if spec.get("scale") == "log":
            return np.geomspace(lo, hi, count)
        return np.linspace(lo, hi, count)
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    raise ConfigError(f"bad grid for {name!r}")


def bounds_rows(data: dict) -> list[list]:
    """Rows of ``(alpha, beta, N, empirical, bound, slack, preconditions_met)``.

    ``theorem`` selects ``"2"`` (one eigenmode: ``eta_N^2`` vs the iterate
    bound), ``"corollary1"`` (noiseless excess), ``"3"`` or ``"4"`` (expected
    excess from the moment engine). Empirical values never come from sampling.
    """
    theorem = str(_require(data, "theorem", "bounds-check config"))
    if theorem not in ("2", "corollary1", "3", "4"):
        raise ConfigError(f"unknown theorem selector {theorem!r}")
    grid = _require(data, "grid", "bounds-check config")
    alphas = _grid(_require(grid, "alpha", "grid"), "alpha")
    betas = _grid(_require(grid, "beta", "grid"), "beta")
    horizons = [int(n) for n in _grid(_require(grid, "N", "grid"), "N")]
    if min(horizons) < 1:
        raise ConfigError("horizons must be >= 1")
    rows = []
    if theorem == "2":
        h = float(data.get("h", 1.0))
        eta1 = float(data.get("eta1", 1.0))
        for a in alphas:
            for b in betas:
                mode = classify(StepPair(a, b), h)
                eta = closed_form_eta(mode, eta1, np.array(horizons))
                for N, e in zip(horizons, np.atleast_1d(eta)):
                    rep = bnd.iterate_bound(mode.pair, h, eta1, N)
                    rows.append([a, b, N, e * e, rep.value, rep.value - e * e, rep.preconditions_met])
        return rows
    problem, theta0 = ProblemConfig.from_dict(_require(data, "problem", "bounds-check config"), 0).build()
    L, r = problem.largest(), float(np.linalg.norm(theta0 - problem.optimum))
    noise = NoiseConfig.from_dict(data.get("noise")).spec(problem.dim)
    for a in alphas:
        for b in betas:
            pair = StepPair(a, b)
            for N in horizons:
                if theorem == "corollary1":
                    emp = closed_form_excess(problem, theta0, pair, N)
                    rep = bnd.function_bound_noiseless(pair, L, r, N)
                else:
                    emp = expected_excess(problem, theta0, pair, noise, N)
                    if theorem == "3":
                        rep = bnd.function_bound_unstructured(pair, L, r, noise.trace_C(problem.eigenvalues), N)
                    else:
                        rep = bnd.function_bound_structured(pair, L, r, noise.trace_C_Hinv(problem.eigenvalues), N)
                rows.append([a, b, N, emp, rep.value, rep.value - emp, rep.preconditions_met])
    return rows


def cmd_bounds_check(data: dict, out: str | Path) -> Path:
    rows = bounds_rows(data)
    for row in rows:
        if row[-1] and not math.isfinite(row[3]):
            raise UnexpectedDivergence(f"non-finite empirical value inside the valid region at {row[:3]}")
    return write_csv(Path(out) / f"bounds_check_{data['theorem']}.csv", BOUND_HEADER, rows)


# -- lower bounds ------------------------------------------------------------


def lower_bound_rows(data: dict) -> list[list]:
    """``(n, scaled_excess, limit, rel_error)`` for the selected adversarial sequence.

    ``alpha``/``beta`` are numbers or ``"1/n^2"``; defaults are ``0.1, 0.1``
    for the first regime and ``"1/n^2", 1`` for the second.
    """
    regime = data.get("regime", "first")
    if regime not in ("first", "second"):
        raise ConfigError(f"unknown regime {regime!r}")
    ns = [int(n) for n in data.get("n", [1, 10, 100, 1000, 10000])]
    if not ns or min(ns) < 1:
        raise ConfigError("n list must hold positive integers")
    r = float(data.get("r", 1.0))
    default_a, default_b = (0.1, 0.1) if regime == "first" else ("1/n^2", 1.0)
    a_spec, b_spec = data.get("alpha", default_a), data.get("beta", default_b)

    def value(spec, n):
        if spec == "1/n^2":
            return 1.0 / (n * n)
        return float(spec)

    limit = (bnd.LOWER_BOUND_LIMIT_FIRST if regime == "first" else bnd.LOWER_BOUND_LIMIT_SECOND) * r * r
    rows = []
    for n in ns:
        s = bnd.lower_bound_scaled_excess(regime, value(a_spec, n), value(b_spec, n), n, r)
        rows.append([n, s, limit, abs(s - limit) / limit if limit else math.nan])
    return rows


def cmd_lower_bound(data: dict, out: str | Path) -> Path:
    rows = lower_bound_rows(data)
    regime = data.get("regime", "first")
    return write_csv(Path(out) / f"lower_bound_{regime}.csv", ["n", "scaled_excess", "limit", "rel_error"], rows)


# -- comparison --------------------------------------------------------------

COMPARE_ALGORITHMS = (
    AlgorithmConfig("unified", {"kind": "OptimalStructured"}),
    AlgorithmConfig("avgd", {"kind": "AvGD", "gamma": "1/L"}),
    AlgorithmConfig("accgd", {"kind": "AccGD", "gamma": "1/L"}),
    AlgorithmConfig("acsa", baseline="ACSA"),
    AlgorithmConfig("sage", baseline="SAGE"),
    AlgorithmConfig("accrda", baseline="AccRDA"),
)


def horizon_grid(N: int, per_decade: int = 10) -> np.ndarray:
    """Log-spaced horizons from 1 to ``N`` (both included)."""
    k = max(1, int(round(per_decade * math.log10(N)))) + 1 if N > 1 else 1
    return np.unique(np.round(np.geomspace(1, N, k)).astype(int))


def last_decade_slope(ns: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log(value) against log(n) over ``n >= N/10``."""
    ns = np.asarray(ns)
    values = np.asarray(values, dtype=float)
    sel = (ns >= ns[-1] / 10) & np.isfinite(values) & (values > 0)
    if sel.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(ns[sel]), np.log(values[sel]), 1)[0])


@dataclass
class CompareResult:
    horizons: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    diverged: dict[str, np.ndarray]
    slopes: dict[str, float]


def compare_data(cfg: ExperimentConfig, anytime: bool = False) -> CompareResult:
    """Mean excess of the six algorithms on a log grid of horizons, same noise for all.

    A horizon-tuned unified schedule is rerun for every horizon on the grid
    (each point is a separate run of that length); the other algorithms do
    not depend on the horizon and are read off a single run.
    """
    problem, theta0 = cfg.problem.build()
    noise = cfg.noise.spec(problem.dim)
    N = cfg.horizon
    grid = horizon_grid(N)
    algs = cfg.algorithms or COMPARE_ALGORITHMS
    vals = {a.name: np.empty((cfg.replications, grid.size)) for a in algs}
    for rep in range(cfg.replications):
        oracle = cfg.noise.make_oracle(problem, replication_seed(cfg.seed, rep))
        for alg in algs:
            horizon_tuned = alg.schedule is not None and alg.schedule_for(1.0, N, anytime).horizon_dependent and not anytime
            if horizon_tuned:
                for j, n in enumerate(grid):
                    traj, _ = run_algorithm(alg, problem, theta0, oracle, noise, int(n), anytime)
                    vals[alg.name][rep, j] = traj.excess[-1]
            else:
                traj, _ = run_algorithm(alg, problem, theta0, oracle, noise, N, anytime)
                vals[alg.name][rep] = traj.excess[grid]
    mean, se, div, slopes = {}, {}, {}, {}
    for name, v in vals.items():
        mean[name], se[name], div[name] = _summarize(v)
        slopes[name] = last_decade_slope(grid, mean[name])
    return CompareResult(grid, mean, se, div, slopes)


def cmd_compare(cfg: ExperimentConfig, out: str | Path, anytime: bool = False) -> tuple[Path, Path]:
    res = compare_data(cfg, anytime)
    rows = []
    for name in res.mean:
        for j, n in enumerate(res.horizons):
            m = res.mean[name][j]
            lg = math.log10(m) if 0 < m < math.inf else math.nan
            rows.append([name, n, m, res.stderr[name][j], int(res.diverged[name][j]), math.log10(n), lg])
    header = ["algorithm", "N", "mean_excess", "stderr_excess", "diverged_reps", "log10_N", "log10_excess"]
    p1 = write_csv(Path(out) / "compare.csv", header, rows)
    p2 = write_csv(Path(out) / "compare_slopes.csv", ["algorithm", "last_decade_slope"], res.slopes.items())
    return p1, p2
