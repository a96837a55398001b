"""
Choosing lambda (BIC, AIC, k-fold CV) and Wald inference at a fitted model.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError, NumericalFailure, ValidationError
from .likelihood import log_likelihood
from .optimizer import FitOptions, fit

DEFAULT_GRID = (0.0001, 0.001, 0.01, 0.05, 0.09, 0.1, 0.3, 0.5, 10.0, 1000.0)
EIGENVALUE_FLOOR = 1e-10


class SingularInformationWarning(UserWarning):
    """The information matrix on the active set is singular or indefinite."""


@dataclass(frozen=True)
class LambdaGrid:
    values: tuple = DEFAULT_GRID

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("lambda grid is empty")
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise DomainError("lambda values must be finite and >= 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("lambda grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)


@dataclass
class PathResult:
    lambdas: tuple
    results: list
    bic: np.ndarray
    aic: np.ndarray
    criterion: str
    selected_index: int
    cv_loss: Optional[np.ndarray] = None
    folds: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def selected_lambda(self):
        return self.lambdas[self.selected_index]

    @property
    def selected_result(self):
        return self.results[self.selected_index]

    def table(self):
        """One dict per lambda, for reporting."""
        rows = []
        for i, lam in enumerate(self.lambdas):
            r = self.results[i]
            rows.append(
                {
                    "lambda": lam,
                    "converged": bool(r is not None and r.converged),
                    "df": None if r is None else r.df,
                    "active_set_size": None if r is None else len(r.active_set),
                    "log_likelihood": None if r is None else r.log_likelihood_at_solution,
                    "penalized_log_likelihood": None if r is None else r.penalized_log_likelihood,
                    "bic": float(self.bic[i]),
                    "aic": float(self.aic[i]),
                    "cv_loss": None if self.cv_loss is None else float(self.cv_loss[i]),
                    "selected": i == self.selected_index,
                }
            )
        return rows


def bic(result, n=None):
    """``-2 (l_n - penalty) + log(n) df`` with df = number of nonzero coefficients."""
    n = result.n_obs if n is None else n
    if n <= 0:
        raise DomainError("n must be positive")
    return -2.0 * result.penalized_log_likelihood + math.log(n) * result.df


def aic(result):
    """``-2 (l_n - penalty) + 2 df``."""
    return -2.0 * result.penalized_log_likelihood + 2.0 * result.df


def _argmin_prefer_larger(values):
    """Index of the minimum finite value; ties go to the larger lambda."""
    best = None
    for i in range(len(values) - 1, -1, -1):
        v = values[i]
        if np.isfinite(v) and (best is None or v < values[best]):
            best = i
    if best is None:
        raise NumericalFailure("no lambda on the grid produced a usable fit")
    return best


def _fit_path(data, template, grid, options, warm_start=True):
    results = [None] * len(grid)
    start = options.initial_theta
    for i in range(len(grid) - 1, -1, -1):
        spec = template.with_lambda(grid.values[i])
        opts = options.replace(initial_theta=start) if warm_start else options
        try:
            res = fit(data, spec, opts)
        except NumericalFailure:
            continue
        results[i] = res
        if res.converged and warm_start:
            start = res.theta
    return results


def lambda_path(data, template, grid=None, options=None, criterion="bic", warm_start=True):
    """Fit every lambda on the grid, largest first, warm-starting each fit.

    ``lambda_gamma`` tracks ``lambda_beta``. Failed fits stay in the path with
    NaN criteria; selection minimizes ``criterion`` ("bic" or "aic").
    """
    grid = grid or LambdaGrid()
    options = options or FitOptions()
    if criterion not in ("bic", "aic"):
        raise DomainError(f"unknown criterion {criterion!r}")
    results = _fit_path(data, template, grid, options, warm_start)
    bics = np.array([bic(r) if r is not None and r.converged else np.nan for r in results])
    aics = np.array([aic(r) if r is not None and r.converged else np.nan for r in results])
    chosen = bics if criterion == "bic" else aics
    return PathResult(
        lambdas=grid.values,
        results=results,
        bic=bics,
        aic=aics,
        criterion=criterion,
        selected_index=_argmin_prefer_larger(chosen),
    )


def stratified_folds(data, k, seed):
    """Fold label per row, stratified by y.

    Rows are first put in a canonical order by content, so a row permutation
    of the data yields the same folds.
    """
    n = data.n
    if not 2 <= k <= n:
        raise DomainError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    content = np.column_stack([data.y, data.X, data.Z])
    order = np.lexsort(content.T[::-1])
    folds = np.empty(n, dtype=int)
    offset = 0
    for cls in (0.0, 1.0):
        idx = order[data.y[order] == cls]
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (offset + np.arange(idx.size)) % k
        offset += idx.size
    for f in range(k):
        train_y = data.y[folds != f]
        if train_y.size == 0 or np.all(train_y == train_y[0]):
            raise ValidationError(f"fold {f}: training rows all have y={train_y[:1].tolist()}")
    return folds


def cross_validate(data, template, grid=None, k=5, seed=0, options=None):
    """k-fold CV on held-out negative log-likelihood per observation.

    Also fits the full-data path so the returned :class:`PathResult` carries
    the model at every lambda; selection minimizes ``cv_loss``.
    """
    grid = grid or LambdaGrid()
    options = options or FitOptions()
    folds = stratified_folds(data, k, seed)
    loss = np.zeros(len(grid))
    for f in range(k):
        held = folds == f
        train, test = data.subset(~held), data.subset(held)
        for i, res in enumerate(_fit_path(train, template, grid, options)):
            if res is None or not res.converged:
                loss[i] = np.nan
            else:
                loss[i] -= log_likelihood(res.theta, test)
    loss /= data.n
    path = lambda_path(data, template, grid, options)
    path.cv_loss = loss
    path.folds = folds
    path.criterion = "cv"
    path.selected_index = _argmin_prefer_larger(loss)
    return path


def standard_errors(result, warn=True):
    """Wald standard errors from the inverse observed information.

    Only nonzero coefficients get an SE; the rest are NaN. If the information
    on that set is not positive definite its eigenvalues are floored at 1e-10
    and a :class:`SingularInformationWarning` is issued.
    """
    info = np.asarray(result.information_at_solution, dtype=float)
    se = np.full(info.shape[0], np.nan)
    support = np.asarray(result.support, dtype=int)
    if support.size == 0:
        return se
    sub = info[np.ix_(support, support)]
    vals, vecs = np.linalg.eigh(sub)
    top = max(float(np.max(np.abs(vals))), 1.0)
    if vals[0] <= EIGENVALUE_FLOOR * top:
        if warn:
            warnings.warn(
                f"information on the active set is singular or indefinite "
                f"(smallest eigenvalue {vals[0]:.3g}); flooring at {EIGENVALUE_FLOOR}",
                SingularInformationWarning,
                stacklevel=2,
            )
    vals = np.maximum(vals, EIGENVALUE_FLOOR)
    cov_diag = np.sum(vecs**2 / vals, axis=1)
    se[support] = np.sqrt(cov_diag)
    return se


def wald_intervals(result, level=0.95, se=None):
    """``theta_j -/+ z se_j`` as a ``(k, 2)`` array; NaN rows where SE is absent."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie strictly between 0 and 1")
    if se is None:
        se = standard_errors(result)
    z = normal_quantile(0.5 * (1.0 + level))
    theta = result.theta
    half = z * np.asarray(se, dtype=float)
    return np.column_stack([theta - half, theta + half])


# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427, 13731.693765509461125,
      45921.953931549871457, 67265.770927008700853, 33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674, 5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055, 3.64784832476320460504,
      1.27045825245236838258, 0.24178072517745061177, 0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4, 1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358, 0.29656057182850489123,
      0.026532189526576123093, 0.0012426609473880784386, 2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7, 2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


def normal_quantile(prob):
    """Inverse standard normal CDF, refined by one Newton step on ``erfc``."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {prob!r}")
    q = prob - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(_A, r) / _poly(_B, r)
    else:
        r = math.sqrt(-math.log(min(prob, 1.0 - prob)))
        if r <= 5.0:
            r -= 1.6
            x = _poly(_C, r) / _poly(_D, r)
        else:
            r -= 5.0
            x = _poly(_E, r) / _poly(_F, r)
        if q < 0:
            x = -x
    # Newton step: Phi(x) - prob over the density
    if prob < 0.5:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - prob
    else:
        err = (1.0 - prob) - 0.5 * math.erfc(x / math.sqrt(2.0))
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if density > 0:
        x -= err / density
    return x
