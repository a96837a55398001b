"""
Monte Carlo study of penalized ZIB estimators.

Covariate design (columns 1..5 of each block, column 1 the intercept)::

    X2 ~ N(0, 1)          Z2 ~ N(-1, 1)
    X3 ~ Bernoulli(0.9)   Z3 ~ Bernoulli(0.5)
    X4 ~ U[2, 5]          Z4 ~ Exponential(rate 1)
    X5 ~ Binomial(5, 0.5) Z5 ~ Exponential(rate 3)

Every replicate draws from its own stream spawned from ``SeedSequence(seed)``
by replicate index, so results do not depend on the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError, StudyError
from .io import dumps_canonical
from .model import Dataset, Parameters, expit
from .optimizer import FitOptions, fit
from .selection import LambdaGrid, aic, lambda_path, standard_errors, wald_intervals

PARAMETER_NAMES = tuple(f"beta{j}" for j in range(1, 6)) + tuple(f"gamma{j}" for j in range(1, 6))


@dataclass(frozen=True)
class Scenario:
    name: str
    beta0: tuple
    gamma0: tuple
    expected_zero_inflation: float

    @property
    def theta0(self):
        return Parameters(np.array(self.beta0), np.array(self.gamma0))


SCENARIO_1 = Scenario(
    name="scenario1",
    beta0=(-0.9, -0.65, -0.2, 0.65, 0.0),
    gamma0=(-0.55, -0.7, -1.0, 0.45, 0.0),
    expected_zero_inflation=0.25,
)
SCENARIO_2 = Scenario(
    name="scenario2",
    beta0=(-0.9, -0.65, -0.2, 0.65, 0.0),
    gamma0=(0.25, -0.4, 0.8, 0.45, 0.0),
    expected_zero_inflation=0.50,
)
SCENARIOS = {1: SCENARIO_1, 2: SCENARIO_2}

# (mean, variance) of each non-intercept covariate column
COVARIATE_MOMENTS = {
    "X2": (0.0, 1.0),
    "X3": (0.9, 0.09),
    "X4": (3.5, 0.75),
    "X5": (2.5, 1.25),
    "Z2": (-1.0, 1.0),
    "Z3": (0.5, 0.25),
    "Z4": (1.0, 1.0),
    "Z5": (1.0 / 3.0, 1.0 / 9.0),
}


def generate_covariates(n, rng):
    """Draw the ``(X, Z)`` design, both ``n x 5`` with a leading ones column."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    ones = np.ones(n)
    X = np.column_stack(
        [ones, rng.normal(0.0, 1.0, n), rng.binomial(1, 0.9, n), rng.uniform(2.0, 5.0, n), rng.binomial(5, 0.5, n)]
    ).astype(float)
    Z = np.column_stack(
        [ones, rng.normal(-1.0, 1.0, n), rng.binomial(1, 0.5, n), rng.exponential(1.0, n), rng.exponential(1.0 / 3.0, n)]
    ).astype(float)
    return X, Z


def generate_response(scenario, X, Z, rng):
    """Structural zero with prob ``pi_i``; otherwise Bernoulli(``p_i``)."""
    beta0, gamma0 = np.asarray(scenario.beta0, float), np.asarray(scenario.gamma0, float)
    if X.shape[1] != beta0.size or Z.shape[1] != gamma0.size:
        raise DomainError("design dimensions do not match the scenario")
    pi = expit(Z @ gamma0)
    p = expit(X @ beta0)
    structural = rng.random(X.shape[0]) < pi
    event = rng.random(X.shape[0]) < p
    return np.where(structural, 0.0, event.astype(float))


def generate_dataset(scenario, n, rng):
    X, Z = generate_covariates(n, rng)
    y = generate_response(scenario, X, Z, rng)
    return Dataset(y=y, X=X, Z=Z)


def replicate_rngs(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass
class SimulationReport:
    """Per-parameter Monte Carlo summaries (arrays indexed like ``theta``).

    ``se`` is the Monte Carlo standard error ``sd / sqrt(N)``. ``rel_bias`` is
    NaN where the true value is zero (serialized as null).
    """

    names: tuple
    theta0: np.ndarray
    mean: np.ndarray
    bias: np.ndarray
    rel_bias: np.ndarray
    sd: np.ndarray
    se: np.ndarray
    rmse: np.ndarray
    ci_length: np.ndarray
    coverage: np.ndarray
    replicates: int
    failures: int = 0
    mean_log_likelihood: Optional[float] = None
    mean_aic: Optional[float] = None
    meta: dict = field(default_factory=dict)
    estimates: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def mean_rmse(self):
        return float(np.mean(self.rmse))

    METRICS = ("theta0", "mean", "bias", "rel_bias", "sd", "se", "rmse", "ci_length", "coverage")

    def to_dict(self):
        rows = []
        for j, name in enumerate(self.names):
            row = {"parameter": name}
            for metric in self.METRICS:
                row[metric] = _clean(getattr(self, metric)[j])
            rows.append(row)
        return {
            "meta": self.meta,
            "replicates": self.replicates,
            "failures": self.failures,
            "mean_log_likelihood": _clean(self.mean_log_likelihood),
            "mean_aic": _clean(self.mean_aic),
            "se_definition": "sd / sqrt(replicates)",
            "parameters": rows,
        }

    def to_json(self):
        return dumps_canonical(self.to_dict())

    def to_csv(self):
        lines = ["parameter," + ",".join(self.METRICS)]
        for j, name in enumerate(self.names):
            cells = [_fmt(getattr(self, m)[j]) for m in self.METRICS]
            lines.append(name + "," + ",".join(cells))
        lines.append(f"# replicates={self.replicates} failures={self.failures}")
        lines.append(f"# mean_log_likelihood={_fmt(self.mean_log_likelihood)} mean_aic={_fmt(self.mean_aic)}")
        return "\n".join(lines) + "\n"


def _clean(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def _fmt(value):
    value = _clean(value)
    return "" if value is None else format(value, ".17g")


def metrics(estimates, theta0, intervals=None, names=PARAMETER_NAMES):
    """Bias, relative bias, SD, SE, RMSE, CI length and coverage.

    ``estimates`` is ``(N, k)`` (or a list of Parameters); ``intervals`` is
    ``(N, k, 2)`` with NaN rows for absent intervals. SD uses divisor N-1 and
    RMSE divisor N, so ``rmse^2 = bias^2 + (N-1)/N sd^2``.
    """
    est = np.array([e.flat if isinstance(e, Parameters) else np.asarray(e, float) for e in estimates])
    if est.ndim != 2 or est.shape[0] == 0:
        raise DomainError("metrics needs a nonempty (N, k) array of estimates")
    theta0 = theta0.flat if isinstance(theta0, Parameters) else np.asarray(theta0, float)
    N = est.shape[0]
    err = est - theta0
    bias = err.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_bias = np.where(theta0 != 0.0, bias / np.where(theta0 != 0.0, theta0, 1.0), np.nan)
    sd = est.std(axis=0, ddof=1) if N > 1 else np.zeros(est.shape[1])
    rmse = np.sqrt(np.mean(err**2, axis=0))
    if intervals is None:
        ci_length = np.full(est.shape[1], np.nan)
        coverage = np.full(est.shape[1], np.nan)
    else:
        ci = np.asarray(intervals, dtype=float)
        lower, upper = ci[..., 0], ci[..., 1]
        present = np.isfinite(lower) & np.isfinite(upper)
        counts = present.sum(axis=0)
        with np.errstate(invalid="ignore"):
            length_sum = np.where(present, upper - lower, 0.0).sum(axis=0)
            hits = (present & (lower <= theta0) & (theta0 <= upper)).sum(axis=0)
            ci_length = np.where(counts > 0, length_sum / np.maximum(counts, 1), np.nan)
            coverage = np.where(counts > 0, hits / np.maximum(counts, 1), np.nan)
    names = tuple(names) if len(names) == est.shape[1] else tuple(f"theta{j + 1}" for j in range(est.shape[1]))
    return SimulationReport(
        names=names,
        theta0=theta0,
        mean=est.mean(axis=0),
        bias=bias,
        rel_bias=rel_bias,
        sd=sd,
        se=sd / math.sqrt(N),
        rmse=rmse,
        ci_length=ci_length,
        coverage=coverage,
        replicates=N,
        estimates=est,
    )


def _one_replicate(args):
    scenario, n, spec, options, seed_seq, level = args
    rng = np.random.default_rng(seed_seq)
    data = generate_dataset(scenario, n, rng)
    result = fit(data, spec, options)
    if not result.converged:
        return None
    se = standard_errors(result, warn=False)
    ci = wald_intervals(result, level, se=se)
    return result.theta, ci, result.log_likelihood_at_solution, aic(result)


def _map(func, jobs, threads):
    if threads is None or threads <= 1:
        return [func(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def run_study(scenario, n, N, spec, options=None, seed=0, threads=1, level=0.95):
    """Fit ``N`` simulated datasets and summarize the converged fits.

    Failed fits are counted in ``failures`` and left out of every aggregate.
    Raises :class:`StudyError` if no replicate converges.
    """
    if N < 2:
        raise DomainError("a study needs N >= 2 replicates")
    options = options or FitOptions()
    seeds = np.random.SeedSequence(seed).spawn(N)
    jobs = [(scenario, n, spec, options, s, level) for s in seeds]
    outcomes = _map(_one_replicate, jobs, threads)
    good = [o for o in outcomes if o is not None]
    if not good:
        raise StudyError(f"all {N} replicate fits failed")
    report = metrics([g[0] for g in good], scenario.theta0, np.array([g[1] for g in good]))
    report.failures = N - len(good)
    report.mean_log_likelihood = float(np.mean([g[2] for g in good]))
    report.mean_aic = float(np.mean([g[3] for g in good]))
    report.meta = {
        "scenario": scenario.name,
        "n": int(n),
        "N": int(N),
        "seed": int(seed),
        "family": spec.family,
        "lambda_beta": spec.lambda_beta,
        "lambda_gamma": spec.lambda_gamma,
        "alpha": spec.alpha,
        "penalize_intercepts": spec.penalize_intercepts,
        "scale_by_n": spec.scale_by_n,
        "solver": options.solver,
        "level": level,
    }
    return report


def _sweep_replicate(args):
    scenario, n, template, grid, options, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    data = generate_dataset(scenario, n, rng)
    path = lambda_path(data, template, grid, options)
    return [(r.theta if r is not None and r.converged else None) for r in path.results]


def run_lambda_sweep(scenario, n, N, template, grid=None, options=None, seed=0, threads=1):
    """Mean-RMSE profile over a lambda grid on common simulated datasets.

    Each replicate dataset is fitted along the whole warm-started path, so
    every lambda sees the same N datasets. Returns ``{lambda: SimulationReport}``.
    """
    grid = grid or LambdaGrid()
    options = options or FitOptions()
    seeds = np.random.SeedSequence(seed).spawn(N)
    jobs = [(scenario, n, template, grid, options, s) for s in seeds]
    rows = _map(_sweep_replicate, jobs, threads)
    reports = {}
    for i, lam in enumerate(grid.values):
        good = [row[i] for row in rows if row[i] is not None]
        if not good:
            raise StudyError(f"all fits failed at lambda={lam}")
        rep = metrics(good, scenario.theta0)
        rep.failures = N - len(good)
        rep.meta = {"scenario": scenario.name, "n": n, "N": N, "family": template.family, "lambda": lam}
        reports[lam] = rep
    return reports
