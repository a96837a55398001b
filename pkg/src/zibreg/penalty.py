"""
LASSO, ridge and elastic-net penalties on ``theta = (beta, gamma)``.

Every family is expressed through per-coordinate weights ``(l1, l2)``::

    penalty(theta) = sum_j l1_j |theta_j| + l2_j theta_j^2

    lasso:        l1 = lambda_block,            l2 = 0
    ridge:        l1 = 0,                       l2 = lambda_block
    elastic_net:  l1 = alpha * lambda_block,    l2 = (1 - alpha)/2 * lambda_block

``lambda_block`` is ``lambda_beta`` on beta and ``lambda_gamma`` on gamma.
The ridge weight uses factor 1, while elastic net at ``alpha = 0`` gives half
of it. Intercepts (column 0 of each block) can be exempted, and all weights
can be multiplied by ``n``.

The fitted objective is ``F(theta) = -l_n(theta) + penalty(theta)``, minimized.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .likelihood import log_likelihood
from .model import Parameters, as_flat

FAMILIES = ("lasso", "ridge", "elastic_net")


@dataclass(frozen=True)
class PenaltySpec:
    family: str = "lasso"
    lambda_beta: float = 0.0
    lambda_gamma: float = 0.0
    alpha: float = 1.0
    penalize_intercepts: bool = True
    scale_by_n: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown penalty family {self.family!r}; choose from {FAMILIES}")
        for name in ("lambda_beta", "lambda_gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @classmethod
    def none(cls):
        """The zero penalty (plain maximum likelihood)."""
        return cls(family="ridge", lambda_beta=0.0, lambda_gamma=0.0)

    def with_lambda(self, lam, lambda_gamma=None):
        """Copy with ``lambda_beta = lam`` and ``lambda_gamma`` (default: ``lam``)."""
        lg = lam if lambda_gamma is None else lambda_gamma
        return PenaltySpec(
            self.family, float(lam), float(lg), self.alpha, self.penalize_intercepts, self.scale_by_n
        )

    @property
    def l1_fraction(self):
        return {"lasso": 1.0, "ridge": 0.0}.get(self.family, self.alpha)

    @property
    def l2_factor(self):
        return {"lasso": 0.0, "ridge": 1.0}.get(self.family, (1.0 - self.alpha) / 2.0)

    @property
    def is_smooth(self):
        """True when the penalty has no active L1 part."""
        return self.l1_fraction == 0.0 or (self.lambda_beta == 0.0 and self.lambda_gamma == 0.0)


def penalizable_mask(spec, p, q):
    """Boolean mask of coordinates subject to the penalty (any lambda)."""
    mask = np.ones(p + q, dtype=bool)
    if not spec.penalize_intercepts:
        mask[0] = False
        mask[p] = False
    return mask


def penalty_weights(spec, p, q, n=None):
    """Per-coordinate ``(l1, l2)`` weight vectors of length ``p + q``."""
    lam = np.concatenate([np.full(p, spec.lambda_beta), np.full(q, spec.lambda_gamma)])
    if spec.scale_by_n:
        if n is None:
            raise DomainError("scale_by_n requires the sample size n")
        lam = lam * n
    lam = np.where(penalizable_mask(spec, p, q), lam, 0.0)
    return spec.l1_fraction * lam, spec.l2_factor * lam


def _split(theta, p, q):
    if p is None:
        beta, gamma = theta.beta, theta.gamma
        return np.concatenate([beta, gamma]), beta.size, gamma.size
    return as_flat(theta, p, q), p, q


def penalty_value(spec, theta, n=None, p=None, q=None):
    """Penalty at ``theta`` (a :class:`Parameters`, or a flat vector with ``p, q``)."""
    flat, p, q = _split(theta, p, q)
    l1, l2 = penalty_weights(spec, p, q, n)
    return float(np.sum(l1 * np.abs(flat)) + np.sum(l2 * flat**2))


def penalty_subgradient(spec, theta, n=None, p=None, q=None):
    """Elementwise subgradient, choosing 0 for the L1 part at ``theta_j = 0``.

    Meant for KKT diagnostics only; optimization never steps along it.
    """
    flat, p, q = _split(theta, p, q)
    l1, l2 = penalty_weights(spec, p, q, n)
    return l1 * np.sign(flat) + 2.0 * l2 * flat


def prox_scalar(v, step, l1, l2):
    """argmin_u 0.5 (u - v)^2 + step (l1 |u| + l2 u^2), vectorized."""
    v = np.asarray(v, dtype=float)
    shrunk = np.sign(v) * np.maximum(np.abs(v) - step * l1, 0.0)
    return shrunk / (1.0 + 2.0 * step * l2)


def proximal_step(spec, theta, step, n=None, p=None, q=None):
    """Proximal operator of ``step * penalty`` applied coordinatewise.

    Soft-thresholds at ``step * l1_j`` then divides by ``1 + 2 step l2_j``.
    Unpenalized coordinates pass through unchanged. Returns the same kind of
    object it was given (Parameters or flat array).
    """
    if not step > 0:
        raise DomainError(f"prox step must be positive, got {step!r}")
    flat, p_, q_ = _split(theta, p, q)
    l1, l2 = penalty_weights(spec, p_, q_, n)
    out = prox_scalar(flat, step, l1, l2)
    if p is None:
        return Parameters.from_flat(out, p_)
    return out


def penalized_objective(spec, theta, data):
    """``F(theta) = -l_n(theta) + penalty(theta)``, the quantity minimized."""
    flat = as_flat(theta, data.p, data.q)
    return -log_likelihood(flat, data) + penalty_value(spec, flat, data.n, data.p, data.q)
