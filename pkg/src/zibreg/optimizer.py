"""
Penalized maximum likelihood for the ZIB model.

Two solvers minimize ``F(theta) = -l_n(theta) + penalty(theta)``:

* ``proximal`` (default, any penalty): proximal gradient with spectral
  (Barzilai-Borwein) trial steps and backtracking until
  ``F(new) <= F(old) - sigma/(2 s) ||new - old||^2``. L1 parts are handled by
  soft thresholding, so LASSO zeros are exact. With ``active_set_newton``
  each accepted prox step is followed by a Newton trial restricted to its
  nonzero coordinates (signs held fixed, L1 coordinates that would cross
  zero are set to zero); the trial replaces the prox point only if ``F``
  goes down further.
* ``newton`` (smooth penalties only, i.e. ridge or lambda = 0): damped Newton
  on the observed information plus the ridge curvature, with a
  Levenberg-Marquardt shift whenever that matrix is not positive definite.

The likelihood is not concave, so both return the first stationary point
reached from ``initial_theta``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError, NumericalFailure
from .likelihood import log_likelihood, observed_information, score
from .model import Parameters, as_flat
from .penalty import PenaltySpec, penalizable_mask, penalty_value, penalty_weights, prox_scalar

SUFFICIENT_DECREASE = 1e-4
DRIFT_LIMIT = 50.0
# accepted iterations over which a relative objective change below
# objective_tolerance counts as a stall
STALL_WINDOW = 100
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 10000
    objective_tolerance: float = 1e-9
    gradient_tolerance: float = 1e-6
    initial_theta: Optional[object] = None
    line_search_shrink: float = 0.5
    initial_step: float = 1.0
    solver: str = "proximal"
    active_set_newton: bool = True

    def __post_init__(self):
        if self.objective_tolerance <= 0 or self.gradient_tolerance <= 0:
            raise DomainError("tolerances must be positive")
        if not 0.0 < self.line_search_shrink < 1.0:
            raise DomainError("line_search_shrink must lie in (0, 1)")
        if self.initial_step <= 0:
            raise DomainError("initial_step must be positive")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be >= 0")
        if self.solver not in ("proximal", "newton"):
            raise DomainError(f"unknown solver {self.solver!r}")

    def replace(self, **changes):
        fields = dict(self.__dict__)
        fields.update(changes)
        return FitOptions(**fields)


@dataclass
class FitResult:
    theta_hat: Parameters
    converged: bool
    iterations: int
    final_objective: float
    log_likelihood_at_solution: float
    penalty_at_solution: float
    information_at_solution: np.ndarray
    active_set: tuple
    spec: PenaltySpec
    n_obs: int
    residual: float
    solver: str
    unbounded_drift: bool = False
    message: str = ""
    objective_trace: list = field(default_factory=list, repr=False)
    floor_hits: int = 0

    @property
    def theta(self):
        """Flat estimate ``(beta, gamma)``."""
        return self.theta_hat.flat

    @property
    def support(self):
        """Indices of all nonzero coefficients, intercepts included."""
        return tuple(int(j) for j in np.flatnonzero(self.theta != 0.0))

    @property
    def df(self):
        return len(self.support)

    @property
    def penalized_log_likelihood(self):
        """``l_n - penalty`` at the estimate."""
        return self.log_likelihood_at_solution - self.penalty_at_solution


@dataclass(frozen=True)
class KKTReport:
    max_violation: float
    violations: np.ndarray


class _Problem:
    """Objective pieces for one (data, spec) pair on flat vectors."""

    def __init__(self, data, spec):
        self.data = data
        self.spec = spec
        self.l1, self.l2 = penalty_weights(spec, data.p, data.q, data.n)
        self.diagnostics = {}

    def smooth(self, theta):
        """-l_n(theta), or +inf if it is not finite."""
        value = -log_likelihood(theta, self.data, self.diagnostics)
        return value if np.isfinite(value) else np.inf

    def penalty(self, theta):
        return float(np.sum(self.l1 * np.abs(theta)) + np.sum(self.l2 * theta**2))

    def objective(self, theta):
        return self.smooth(theta) + self.penalty(theta)

    def grad_smooth(self, theta):
        return -score(theta, self.data)

    def prox(self, v, step):
        return prox_scalar(v, step, self.l1, self.l2)

    def residual(self, theta, grad):
        """Unit-step prox-gradient mapping; zero iff theta is stationary."""
        return float(np.max(np.abs(theta - self.prox(theta - grad, 1.0)), initial=0.0))


def _initial(data, options):
    if options.initial_theta is None:
        return np.zeros(data.dim)
    return as_flat(options.initial_theta, data.p, data.q).copy()


def _check_finite_start(problem, theta, value):
    if not np.isfinite(value):
        raise NumericalFailure(
            "objective is not finite at the starting point",
            dump={"theta": theta.tolist(), "objective": value},
        )


def _result(problem, theta, converged, iterations, residual, solver, trace, drift=False, message=""):
    data, spec = problem.data, problem.spec
    theta = theta.copy()
    theta[theta == 0.0] = 0.0  # normalize -0.0
    loglik = log_likelihood(theta, data)
    pen = penalty_value(spec, theta, data.n, data.p, data.q)
    mask = penalizable_mask(spec, data.p, data.q)
    active = tuple(int(j) for j in np.flatnonzero((theta != 0.0) & mask))
    return FitResult(
        theta_hat=Parameters.from_flat(theta, data.p),
        converged=bool(converged),
        iterations=iterations,
        final_objective=-loglik + pen,
        log_likelihood_at_solution=loglik,
        penalty_at_solution=pen,
        information_at_solution=observed_information(theta, data),
        active_set=active,
        spec=spec,
        n_obs=data.n,
        residual=residual,
        solver=solver,
        unbounded_drift=drift,
        message=message,
        objective_trace=trace,
        floor_hits=problem.diagnostics.get("floor_hits", 0),
    )


def _proximal_gradient(problem, theta, options):
    shrink = options.line_search_shrink
    f = problem.smooth(theta)
    F = f + problem.penalty(theta)
    _check_finite_start(problem, theta, F)
    g = problem.grad_smooth(theta)
    step = options.initial_step
    trace = [F]
    for k in range(options.max_iterations + 1):
        res = problem.residual(theta, g)
        if res <= options.gradient_tolerance:
            return _result(problem, theta, True, k, res, "proximal", trace, message="converged")
        if k == options.max_iterations:
            break
        accepted = False
        while step > 1e-300:
            cand = problem.prox(theta - step * g, step)
            delta = cand - theta
            moved = float(delta @ delta)
            if moved == 0.0:
                break
            F_c = problem.objective(cand)
            if np.isfinite(F_c) and F_c <= F - SUFFICIENT_DECREASE / (2.0 * step) * moved:
                accepted = True
                break
            if np.isfinite(F_c) and abs(F_c - F) <= 16 * _EPS * max(1.0, abs(F)):
                # change is at rounding level: accept only if stationarity improves
                g_c = problem.grad_smooth(cand)
                if problem.residual(cand, g_c) < res:
                    accepted = True
                    break
            step *= shrink
        if not accepted:
            return _result(
                problem, theta, False, k, res, "proximal", trace, message="line search failed"
            )
        g_new = problem.grad_smooth(cand)
        if options.active_set_newton:
            polished = _support_newton(problem, cand, g_new, F_c)
            if polished is not None:
                cand, F_c = polished
                g_new = problem.grad_smooth(cand)
                moved = float((cand - theta) @ (cand - theta))
        s_vec, y_vec = cand - theta, g_new - g
        curvature = float(s_vec @ y_vec)
        step = float(np.clip(moved / curvature, 1e-12, 1e12)) if curvature > 0 else min(step * 2.0, 1e12)
        theta, g, F = cand, g_new, F_c
        trace.append(F)
        if len(trace) > STALL_WINDOW and abs(trace[-STALL_WINDOW - 1] - F) <= options.objective_tolerance * max(1.0, abs(F)):
            res = problem.residual(theta, g)
            return _result(
                problem, theta, res <= options.gradient_tolerance, k + 1, res, "proximal", trace,
                message="objective stalled",
            )
        if np.max(np.abs(theta)) > DRIFT_LIMIT:
            return _result(
                problem, theta, False, k + 1, problem.residual(theta, g), "proximal", trace,
                drift=True, message="unbounded_drift",
            )
    res = problem.residual(theta, g)
    return _result(
        problem, theta, res <= options.gradient_tolerance, options.max_iterations, res, "proximal",
        trace, message="iteration limit reached",
    )


def _support_newton(problem, theta, g, F):
    support = np.flatnonzero(theta != 0.0)
    if support.size == 0:
        return None
    sign = np.sign(theta[support])
    grad = g[support] + problem.l1[support] * sign + 2.0 * problem.l2[support] * theta[support]
    H = observed_information(theta, problem.data)[np.ix_(support, support)]
    H = H + np.diag(2.0 * problem.l2[support])
    step = _newton_direction(H, grad)
    cand = theta.copy()
    cand[support] += step
    # orthant projection: L1 coordinates that would change sign are set to zero
    flipped = (np.sign(cand[support]) != sign) & (problem.l1[support] > 0.0)
    cand[support[flipped]] = 0.0
    F_c = problem.objective(cand)
    if np.isfinite(F_c) and F_c < F:
        return cand, F_c
    return None


def _newton(problem, theta, options):
    if not problem.spec.is_smooth:
        raise DomainError("the newton solver needs a smooth penalty (ridge or lambda = 0)")
    shrink = options.line_search_shrink
    data = problem.data
    F = problem.objective(theta)
    _check_finite_start(problem, theta, F)
    trace = [F]

    def gradient(t):
        return problem.grad_smooth(t) + 2.0 * problem.l2 * t

    g = gradient(theta)
    for k in range(options.max_iterations + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= options.gradient_tolerance:
            return _result(problem, theta, True, k, gnorm, "newton", trace, message="converged")
        if k == options.max_iterations:
            break
        H = observed_information(theta, data) + np.diag(2.0 * problem.l2)
        direction = _newton_direction(H, g)
        t = 1.0
        accepted = False
        while t > 1e-12:
            cand = theta + t * direction
            F_c = problem.objective(cand)
            if np.isfinite(F_c) and F_c <= F + SUFFICIENT_DECREASE * t * float(g @ direction):
                accepted = True
                break
            t *= shrink
        if not accepted:
            # rounding-level regime: take the full step if it shrinks the gradient
            cand = theta + direction
            F_c = problem.objective(cand)
            g_c = gradient(cand)
            if not (np.isfinite(F_c) and np.max(np.abs(g_c)) < gnorm and F_c <= F + 16 * _EPS * max(1.0, abs(F))):
                return _result(problem, theta, False, k, gnorm, "newton", trace, message="line search failed")
        theta, F = cand, F_c
        g = gradient(theta)
        trace.append(F)
        if np.max(np.abs(theta)) > DRIFT_LIMIT:
            return _result(
                problem, theta, False, k + 1, float(np.max(np.abs(g))), "newton", trace,
                drift=True, message="unbounded_drift",
            )
    gnorm = float(np.max(np.abs(g)))
    return _result(
        problem, theta, gnorm <= options.gradient_tolerance, options.max_iterations, gnorm,
        "newton", trace, message="iteration limit reached",
    )


def _newton_direction(H, g):
    shift = 0.0
    scale = max(float(np.max(np.abs(np.diag(H)))), 1.0)
    eye = np.eye(H.shape[0])
    for _ in range(60):
        try:
            L = np.linalg.cholesky(H + shift * eye)
        except np.linalg.LinAlgError:
            shift = max(2.0 * shift, 1e-8 * scale)
            continue
        return -np.linalg.solve(L.T, np.linalg.solve(L, g))
    return -g / scale


def fit(data, spec, options=None):
    """Minimize ``-l_n + penalty`` and return a :class:`FitResult`.

    Non-convergence is reported through ``converged=False`` and ``message``,
    never raised. A non-finite objective at the starting point raises
    :class:`NumericalFailure`.
    """
    options = options or FitOptions()
    problem = _Problem(data, spec)
    theta = _initial(data, options)
    if options.solver == "newton":
        return _newton(problem, theta, options)
    return _proximal_gradient(problem, theta, options)


def fit_unpenalized(data, options=None):
    """Plain maximum likelihood via damped Newton."""
    options = (options or FitOptions()).replace(solver="newton")
    return fit(data, PenaltySpec.none(), options)


def kkt_check(result, data):
    """Optimality certificate for a fitted result.

    For nonzero coordinates the violation is ``|grad_j + subgrad_j|`` with
    ``grad`` the gradient of ``-l_n``; for zero coordinates it is
    ``max(|grad_j| - l1_j, 0)``.
    """
    theta = result.theta
    l1, l2 = penalty_weights(result.spec, data.p, data.q, data.n)
    grad = -score(theta, data)
    nonzero = theta != 0.0
    viol = np.where(
        nonzero,
        np.abs(grad + l1 * np.sign(theta) + 2.0 * l2 * theta),
        np.maximum(np.abs(grad) - l1, 0.0),
    )
    return KKTReport(max_violation=float(np.max(viol, initial=0.0)), violations=viol)
