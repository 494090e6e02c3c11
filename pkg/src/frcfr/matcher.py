"""Regret-matching policies: fixed points of link-weighted transformation mixes.

Given (estimated) cumulative regrets, the matching policy is the fixed point
of the convex combination of transformation maps weighted by the link output.
For the external transformation set this is simply the normalised link
output; for the internal set it is the stationary distribution of a small
row-stochastic matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .links import LinkFamily, LinkSpec, link
from .odp import TransformationKind, TransformationSet

__all__ = [
    "FixedPointPolicy",
    "external_fixed_point",
    "internal_fixed_point",
    "policy_from_estimates",
]

# Power iteration: aim well below the acceptance threshold so the reported
# residual has margin; cap keeps degenerate chains from spinning.
_POWER_TOL = 1e-13
_POWER_CAP = 10_000
_RESIDUAL_OK = 1e-10
_DIRECT_SOLVE_MAX = 8


@dataclass(frozen=True)
class FixedPointPolicy:
    """A matching policy plus the fixed-point residual it was accepted at.

    ``residual`` is ``||sigma Q - sigma||_1`` for internal fixed points and 0
    for external ones (exact normalisation).
    """

    distribution: np.ndarray
    residual: float = 0.0


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def external_fixed_point(y) -> FixedPointPolicy:
    """Normalise nonnegative weights into a policy; uniform when all-zero.

    The all-zero case is underdetermined ("play anything"); uniform is the
    deterministic, symmetric resolution used throughout this package.
    """
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("external fixed point requires nonnegative weights")
    total = y.sum()
    if total <= 0.0:
        return FixedPointPolicy(_uniform(y.shape[0]))
    return FixedPointPolicy(y / total)


def _mixture_matrix(y: np.ndarray, phi: TransformationSet) -> np.ndarray:
    """Row-stochastic matrix of the y-weighted transformation mixture."""
    weights = y / y.sum()
    return np.tensordot(weights, phi.stacked(), axes=1)


def _stationary_direct(q: np.ndarray) -> np.ndarray:
    """Solve sigma Q = sigma, sum sigma = 1 by replacing one equation."""
    n = q.shape[0]
    a = q.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    sigma = np.linalg.solve(a, b)
    sigma = np.maximum(sigma, 0.0)
    return sigma / sigma.sum()


def internal_fixed_point(y, phi: TransformationSet) -> FixedPointPolicy:
    """Stationary distribution of the y-weighted internal transformation mix.

    Power iteration to a residual far below 1e-10, with a direct linear solve
    fallback for small action sets.  If neither route reaches the residual
    target the best iterate is returned with its achieved residual.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(phi) != y.shape[0]:
        raise ValueError("weight vector must be indexed by the transformation set")
    if np.any(y < 0):
        raise ValueError("internal fixed point requires nonnegative weights")
    n = phi.n_actions
    if y.sum() <= 0.0:
        return FixedPointPolicy(_uniform(n))
    q = _mixture_matrix(y, phi)
    sigma = _uniform(n)
    for _ in range(_POWER_CAP):
        nxt = sigma @ q
        nxt = nxt / nxt.sum()
        if np.abs(nxt - sigma).sum() < _POWER_TOL:
            sigma = nxt
            break
        sigma = nxt
    residual = float(np.abs(sigma @ q - sigma).sum())
    if residual > _RESIDUAL_OK and n <= _DIRECT_SOLVE_MAX:
        sigma = _stationary_direct(q)
        residual = float(np.abs(sigma @ q - sigma).sum())
    return FixedPointPolicy(sigma, residual)


def policy_from_estimates(
    spec: LinkSpec, regrets, phi: TransformationSet
) -> FixedPointPolicy:
    """Map (estimated) cumulative regrets through the link to a matching policy.

    The exponential family never exponentiates raw regrets when producing the
    external policy: logits are shifted by their maximum first, so the policy
    is finite for any finite input.
    """
    regrets = np.asarray(regrets, dtype=np.float64)
    if not np.all(np.isfinite(regrets)):
        raise ValueError("regret estimates must be finite")
    if len(phi) != regrets.shape[0]:
        raise ValueError("regret vector must be indexed by the transformation set")
    if phi.n_actions == 1:
        return FixedPointPolicy(np.ones(1))
    if phi.kind is TransformationKind.EXTERNAL:
        if spec.family is LinkFamily.EXPONENTIAL:
            z = regrets / spec.param
            z = z - z.max()
            e = np.exp(z)
            return FixedPointPolicy(e / e.sum())
        return external_fixed_point(link(spec, regrets))
    if spec.family is LinkFamily.EXPONENTIAL:
        # Shift-invariant after normalisation inside the fixed point.
        z = regrets / spec.param
        y = np.exp(z - z.max())
    else:
        y = link(spec, regrets)
    return internal_fixed_point(y, phi)
