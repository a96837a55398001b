"""
Zero-inflated Bernoulli (ZIB) probability model.

An observation is a structural zero with probability ``pi`` and otherwise a
Bernoulli draw with success probability ``p``::

    P(Y=0) = pi + (1 - pi)(1 - p)
    P(Y=1) = (1 - pi) p

with ``p = logistic(x'beta)`` (event part) and ``pi = logistic(z'gamma)``
(zero-inflation part). Both design matrices carry an explicit leading column
of ones.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DatasetValidationError, DomainError, ShapeError

# Largest double below one; logistic() saturates here instead of returning 1.0.
_ONE_MINUS = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


def softplus(u):
    """log(1 + e^u) evaluated without overflow."""
    u = np.asarray(u, dtype=float)
    return np.where(u > 0, u + np.log1p(np.exp(-np.abs(u))), np.log1p(np.exp(np.minimum(u, 0.0))))


def expit(u):
    """Unclipped vectorized logistic function, branch form (no overflow).

    Used internally where ``1 - p`` is formed as ``expit(-u)`` so tails keep
    full relative precision.
    """
    u = np.asarray(u, dtype=float)
    e = np.exp(-np.abs(u))
    return np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic(u):
    """Map a linear predictor to a probability strictly inside (0, 1).

    Accepts scalars or arrays. Far tails saturate at the doubles adjacent to
    0 and 1, since ``e^u/(1+e^u)`` for ``u > 37`` rounds to exactly 1.0.

    Raises
    ------
    DomainError
        If any input is NaN or infinite.
    """
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("logistic: non-finite linear predictor")
    out = np.clip(expit(arr), _TINY, _ONE_MINUS)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Dataset:
    """Binary responses with event (X) and zero-inflation (Z) designs."""

    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Z.shape[1]

    @property
    def dim(self):
        return self.p + self.q

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.y[rows], self.X[rows], self.Z[rows])


@dataclass(frozen=True)
class Parameters:
    """Coefficient pair ``theta = (beta, gamma)``."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=float)))
        if self.beta.ndim != 1 or self.gamma.ndim != 1:
            raise ShapeError("beta and gamma must be vectors")
        if not (np.all(np.isfinite(self.beta)) and np.all(np.isfinite(self.gamma))):
            raise DomainError("parameters must be finite")

    @property
    def flat(self):
        return np.concatenate([self.beta, self.gamma])

    @classmethod
    def from_flat(cls, theta, p):
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:p].copy(), theta[p:].copy())

    @classmethod
    def zeros(cls, p, q):
        return cls(np.zeros(p), np.zeros(q))

    def __eq__(self, other):
        if not isinstance(other, Parameters):
            return NotImplemented
        return np.array_equal(self.beta, other.beta) and np.array_equal(self.gamma, other.gamma)

    __hash__ = None


def as_flat(theta, p, q):
    """Return ``theta`` as a flat float vector of length ``p + q``.

    Accepts a :class:`Parameters` or anything array-like.
    """
    if isinstance(theta, Parameters):
        if theta.beta.size != p or theta.gamma.size != q:
            raise ShapeError(
                f"parameters have dims ({theta.beta.size}, {theta.gamma.size}), data need ({p}, {q})"
            )
        return theta.flat
    arr = np.asarray(theta, dtype=float).ravel()
    if arr.size != p + q:
        raise ShapeError(f"theta has length {arr.size}, expected {p + q}")
    return arr


@dataclass(frozen=True)
class MixtureProbabilities:
    p: np.ndarray
    pi: np.ndarray
    p_zero: np.ndarray
    p_one: np.ndarray


def _linear_predictor(coef, rows):
    coef = np.asarray(coef, dtype=float).ravel()
    rows = np.asarray(rows, dtype=float)
    if rows.shape[-1] != coef.size:
        raise ShapeError(f"coefficient length {coef.size} does not match row length {rows.shape[-1]}")
    eta = rows @ coef
    if not np.all(np.isfinite(eta)):
        raise DomainError("non-finite linear predictor")
    return eta


def event_probability(beta, x):
    """p = logistic(beta'x) for one row or for each row of a matrix."""
    return logistic(_linear_predictor(beta, x))


def zero_inflation_probability(gamma, z):
    """pi = logistic(gamma'z) for one row or for each row of a matrix."""
    return logistic(_linear_predictor(gamma, z))


def mixture_probabilities(theta, x, z):
    """Event, inflation and marginal outcome probabilities for rows ``x, z``."""
    if isinstance(theta, Parameters):
        beta, gamma = theta.beta, theta.gamma
    else:
        beta, gamma = theta
    a = _linear_predictor(beta, x)
    b = _linear_predictor(gamma, z)
    p, one_minus_p = expit(a), expit(-a)
    pi, one_minus_pi = expit(b), expit(-b)
    p_one = one_minus_pi * p
    p_zero = pi + one_minus_pi * one_minus_p
    return MixtureProbabilities(p=p, pi=pi, p_zero=p_zero, p_one=p_one)


def mixture_pmf(theta, x, z, y):
    """P(Y = y | x, z, theta) under the ZIB mixture."""
    if y not in (0, 1):
        raise DomainError(f"response must be 0 or 1, got {y!r}")
    probs = mixture_probabilities(theta, x, z)
    out = probs.p_one if y == 1 else probs.p_zero
    return float(out) if np.ndim(out) == 0 else out


def validate_dataset(raw):
    """Check every dataset invariant and return a clean float copy.

    Accepts a :class:`Dataset` or a ``(y, X, Z)`` triple. All problems are
    collected before raising, so the error lists every offending row/column.
    """
    if isinstance(raw, Dataset):
        y, X, Z = raw.y, raw.X, raw.Z
    else:
        y, X, Z = raw
    problems = []
    try:
        y = np.asarray(y, dtype=float).ravel()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
    except (TypeError, ValueError) as exc:
        raise DatasetValidationError([f"non-numeric input: {exc}"]) from exc

    n = y.size
    if n == 0:
        raise DatasetValidationError(["dataset has zero rows"])
    for name, M in (("X", X), ("Z", Z)):
        if M.ndim != 2:
            problems.append(f"{name} must be a 2-D matrix")
            continue
        if M.shape[0] != n:
            problems.append(f"{name} has {M.shape[0]} rows, y has {n}")
        if M.shape[1] == 0:
            problems.append(f"{name} has no columns")
            continue
        bad_rows, bad_cols = np.nonzero(~np.isfinite(M))
        for r, c in zip(bad_rows[:20], bad_cols[:20]):
            problems.append(f"{name}[{r}, {c}] is not finite")
        if not np.all(M[:, 0] == 1.0):
            rows = np.flatnonzero(M[:, 0] != 1.0)
            problems.append(f"{name} column 0 is not an all-ones intercept (rows {rows[:10].tolist()})")
    bad_y = np.flatnonzero((y != 0.0) & (y != 1.0))
    for r in bad_y[:20]:
        problems.append(f"y[{r}] = {y[r]!r} is not binary")
    if problems:
        raise DatasetValidationError(problems)
    return Dataset(y=y.copy(), X=X.copy(), Z=Z.copy())
