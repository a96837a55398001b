"""
ZIB log-likelihood, analytic score and observed information.

Notation per observation: ``a = x'beta``, ``b = z'gamma``, ``J = 1{y = 0}``,
``p = logistic(a)``, ``pi = logistic(b)``, ``sp(u) = log(1 + e^u)``.

Log-likelihood contributions::

    y = 1:  l = log((1-pi) p) = -sp(-a) - sp(b)
    y = 0:  l = log(pi + (1-pi)(1-p)) = c - sp(a) - sp(b),
            c = log(1 + e^b + e^(a+b))

For ``y = 0`` write ``c`` as a log-sum-exp over the three terms
``(0, b, a+b)`` with softmax weights ``s0, s1, s2``. Then ``s0`` is the
posterior probability that a zero is a Bernoulli failure, ``w = s1 + s2 =
1 - s0`` the posterior probability that it is structural, and ``s2 = w p``.
The gradient of ``c`` in ``(a, b)`` is ``(s2, w)`` and its Hessian is the
covariance of the term indicators ``(0,0), (0,1), (1,1)`` under the softmax:
``[[s2(1-s2), s2 s0], [s2 s0, w s0]]``.

Score (linear-predictor derivatives, chained through X and Z)::

    dl/da = (1-J)(1-p) - J s0 p
    dl/db = J pi (1-pi) p / P(Y=0) - (1-J) pi

(``w - pi = pi (1-pi) p / P(Y=0)`` avoids the cancellation in ``w - pi``.)

Observed information ``-d2l`` has per-observation weights::

    D1 = p(1-p) - J s2 (1 - s2)      (beta, beta)
    D2 = pi(1-pi) - J w s0           (gamma, gamma)
    D0 = -J s2 s0                    (beta, gamma)

and the full matrix is ``W diag-block(D1, D2, D0) W'`` with ``W`` the
block-diagonal arrangement of ``X'`` and ``Z'``.
"""

import numpy as np

from .exceptions import DomainError
from .model import as_flat, softplus

# Guard for P(Y=0) in pathological line-search states.
P_ZERO_FLOOR = 1e-300
_LOG_P_ZERO_FLOOR = np.log(P_ZERO_FLOOR)


def _predictors(theta, data):
    theta = as_flat(theta, data.p, data.q)
    return data.X @ theta[: data.p], data.Z @ theta[data.p :]


def _logsumexp3(b, ab):
    m = np.maximum(np.maximum(0.0, b), ab)
    return m + np.log(np.exp(-m) + np.exp(b - m) + np.exp(ab - m))


def _terms(a, b, y):
    """Shared per-observation quantities for loglik, score and information."""
    zero = y == 0
    sp_a, sp_b = softplus(a), softplus(b)
    sp_na, sp_nb = softplus(-a), softplus(-b)
    c = _logsumexp3(b, a + b)
    log_p0 = c - sp_a - sp_b
    log_p1 = -sp_na - sp_b
    return dict(
        zero=zero,
        log_pi=-sp_nb,
        log_one_minus_pi=-sp_b,
        log_p=-sp_na,
        log_p0=log_p0,
        log_p1=log_p1,
        p=np.exp(-sp_na),
        q=np.exp(-sp_a),  # 1 - p
        pi=np.exp(-sp_nb),
        one_minus_pi=np.exp(-sp_b),
        s0=np.exp(-c),
        s2=np.exp(a + b - c),
        w=np.exp(b + sp_a - c),
    )


def loglik_contributions(theta, data, diagnostics=None):
    """Per-observation log-likelihood terms ``l_i``.

    ``diagnostics``, if a dict, gets ``floor_hits`` incremented by the number
    of ``y = 0`` rows whose ``P(Y=0)`` fell below the 1e-300 floor.
    """
    a, b = _predictors(theta, data)
    y = data.y
    zero = y == 0
    c = _logsumexp3(b, a + b)
    sp_b = softplus(b)
    log_p0 = c - softplus(a) - sp_b
    hits = zero & (log_p0 < _LOG_P_ZERO_FLOOR)
    if diagnostics is not None:
        diagnostics["floor_hits"] = diagnostics.get("floor_hits", 0) + int(hits.sum())
    log_p0 = np.maximum(log_p0, _LOG_P_ZERO_FLOOR)
    log_p1 = -softplus(-a) - sp_b
    return np.where(zero, log_p0, log_p1)


def log_likelihood(theta, data, diagnostics=None):
    """ZIB log-likelihood ``l_n(theta)``, always <= 0."""
    return float(np.sum(loglik_contributions(theta, data, diagnostics)))


def _score_weights(a, b, y):
    t = _terms(a, b, y)
    zero = t["zero"]
    u_a = np.where(zero, -t["s0"] * t["p"], t["q"])
    # pi (1-pi) p / P(Y=0) in log space
    log_p0 = np.maximum(t["log_p0"], _LOG_P_ZERO_FLOOR)
    w_minus_pi = np.exp(t["log_pi"] + t["log_one_minus_pi"] + t["log_p"] - log_p0)
    u_b = np.where(zero, w_minus_pi, -t["pi"])
    return u_a, u_b


def score(theta, data):
    """Analytic gradient of the log-likelihood, beta block then gamma block."""
    a, b = _predictors(theta, data)
    u_a, u_b = _score_weights(a, b, data.y)
    return np.concatenate([data.X.T @ u_a, data.Z.T @ u_b])


def information_weights(theta, data):
    """Diagonal weights ``(D1, D2, D0)`` of the observed information."""
    a, b = _predictors(theta, data)
    t = _terms(a, b, data.y)
    zero = t["zero"].astype(float)
    s0, s2, w = t["s0"], t["s2"], t["w"]
    d1 = t["p"] * t["q"] - zero * s2 * (s0 + (w - s2))
    d2 = t["pi"] * t["one_minus_pi"] - zero * w * s0
    d0 = -zero * s2 * s0
    return d1, d2, d0


def block_design(data):
    """The ``(p+q) x 2n`` block matrix ``[[X', 0], [0, Z']]``."""
    n, p, q = data.n, data.p, data.q
    W = np.zeros((p + q, 2 * n))
    W[:p, :n] = data.X.T
    W[p:, n:] = data.Z.T
    return W


def observed_information(theta, data):
    """``-d2 l_n / dtheta dtheta'`` assembled blockwise; exactly symmetric."""
    d1, d2, d0 = information_weights(theta, data)
    X, Z = data.X, data.Z
    bb = X.T @ (d1[:, None] * X)
    gg = Z.T @ (d2[:, None] * Z)
    bg = X.T @ (d0[:, None] * Z)
    info = np.block([[bb, bg], [bg.T, gg]])
    return 0.5 * (info + info.T)


def observed_information_dense(theta, data):
    """Same matrix via the explicit product ``W D W'`` (small n only)."""
    d1, d2, d0 = information_weights(theta, data)
    D = np.block([[np.diag(d1), np.diag(d0)], [np.diag(d0), np.diag(d2)]])
    W = block_design(data)
    return W @ D @ W.T


def _steps(theta, h):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError("finite-difference step must be positive")
    return np.broadcast_to(h, theta.shape).astype(float)


def finite_difference_gradient(theta, data=None, h=1e-6, func=None):
    """Central-difference gradient of ``func`` (default: the log-likelihood).

    ``h`` may be a scalar or one step per coordinate.
    """
    if func is None:
        theta = as_flat(theta, data.p, data.q)
        func = lambda t: log_likelihood(t, data)  # noqa: E731
    else:
        theta = np.asarray(theta, dtype=float).ravel()
    steps = _steps(theta, h)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = steps[j]
        grad[j] = (func(theta + e) - func(theta - e)) / (2.0 * steps[j])
    return grad


def finite_difference_information(theta, data, h=1e-6):
    """Negative central-difference Jacobian of :func:`score`, symmetrized."""
    theta = as_flat(theta, data.p, data.q)
    steps = _steps(theta, h)
    k = theta.size
    jac = np.empty((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = steps[j]
        jac[:, j] = (score(theta + e, data) - score(theta - e, data)) / (2.0 * steps[j])
    return -0.5 * (jac + jac.T)
