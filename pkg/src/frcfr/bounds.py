"""Closed-form regret bound evaluation and the Blackwell inequality checker.

The bounds come from the Gordon potential framework: a triple (G, g, gamma)
with G(x + y) <= G(x) + g(x) . y + gamma(y) turns a per-step inner-product
condition into a cumulative potential bound.  The triples in use here are

* polynomial, p > 2:       G(x) = ||x^+||_p^2,      gamma(y) = (p-1) ||y||_p^2
* polynomial, 1 < p <= 2:  G(x) = ||x^+||_p^p,      gamma(y) = ||y||_p^p
* exponential, tau > 0:    G(x) = tau log-sum-exp(x / tau),
                           gamma(y) = ||y||_inf^2 / (2 tau)

with the companion maps ``g`` implemented in :func:`frcfr.links.gordon_g`.
A (p-1) factor on the low-exponent gamma would fail the triple inequality
for p < 2 (x = 0, y = 1 gives G = 1 > p - 1); the factor-free form holds and
is the one the closed-form bound constants correspond to.
Only the final bound formulas are evaluated at runtime; G and gamma are kept
for the randomised sanity check of the triple inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .links import LinkFamily, LinkSpec, gordon_g, link
from .odp import TransformationKind, enumerate_transformations, expected_phi_regret

__all__ = [
    "odp_bound",
    "RcfrBound",
    "rcfr_bound",
    "BlackwellCheck",
    "blackwell_check",
    "gordon_G",
    "gordon_gamma",
]


def odp_bound(
    spec: LinkSpec, t: int, u: float, activation: float, cumulative_error: float
) -> float:
    """Average-regret bound for one decision problem after ``t`` rounds.

    ``activation`` is the transformation-set statistic the family's bound
    depends on: the maximal activation for the polynomial family, the set
    size |Phi| for the exponential family.  ``cumulative_error`` is the
    accumulated L1 gap between the companion-map outputs at true and
    estimated regrets; zero for exact (tabular) regrets.
    """
    if t < 1:
        raise ValueError("bound requires t >= 1")
    if u < 0 or activation < 0 or cumulative_error < 0:
        raise ValueError("bound inputs must be nonnegative")
    if spec.family is LinkFamily.EXPONENTIAL:
        tau = spec.param
        return (tau * np.log(activation) + 2.0 * u * cumulative_error) / t \
            + 2.0 * u * u / tau
    p = spec.param
    if p > 2.0:
        inner = t * (p - 1.0) * 4.0 * u * u * activation ** (2.0 / p) \
            + 2.0 * u * cumulative_error
        return float(np.sqrt(inner)) / t
    inner = t * (2.0 * u) ** p * activation + 2.0 * u * cumulative_error
    return float(inner ** (1.0 / p)) / t


@dataclass(frozen=True)
class RcfrBound:
    """Game-level average-regret bound in its two forms.

    ``per_state`` sums the per-state bound terms (tighter); ``uniform``
    replaces every state's action count and error by the worst case.
    """

    per_state: float
    uniform: float


def rcfr_bound(
    spec: LinkSpec,
    t: int,
    u: float,
    action_counts,
    per_state_errors,
) -> RcfrBound:
    """Average external-regret bound for one player of a solved game.

    ``action_counts[s]`` is |A(s)| and ``per_state_errors[s]`` the cumulative
    companion-map error accumulated at state s.  The per-state form applies
    the single-problem bound per information state and sums; it never exceeds
    the uniform form.
    """
    if t < 1:
        raise ValueError("bound requires t >= 1")
    counts = np.asarray(action_counts, dtype=np.float64)
    errors = np.asarray(per_state_errors, dtype=np.float64)
    if counts.shape != errors.shape:
        raise ValueError("one error value per state is required")
    if np.any(errors < 0):
        raise ValueError("cumulative errors must be nonnegative")
    n_states = len(counts)
    if n_states == 0:
        return RcfrBound(0.0, 0.0)

    if spec.family is LinkFamily.EXPONENTIAL:
        tau = spec.param
        per_state = float(
            np.sum((tau * np.log(counts) + 2.0 * u * errors) / t + 2.0 * u * u / tau)
        )
        uniform = n_states * (
            (tau * np.log(counts.max()) + 2.0 * u * errors.max()) / t
            + 2.0 * u * u / tau
        )
        return RcfrBound(per_state, float(uniform))

    p = spec.param
    mu = counts - 1.0
    if p > 2.0:
        terms = np.sqrt(
            t * (p - 1.0) * 4.0 * u * u * mu ** (2.0 / p) + 2.0 * u * errors
        )
        worst = np.sqrt(
            t * (p - 1.0) * 4.0 * u * u * mu.max() ** (2.0 / p)
            + 2.0 * u * errors.max()
        )
    else:
        terms = (t * (2.0 * u) ** p * mu + 2.0 * u * errors) ** (1.0 / p)
        worst = (t * (2.0 * u) ** p * mu.max() + 2.0 * u * errors.max()) ** (1.0 / p)
    return RcfrBound(float(terms.sum()) / t, float(n_states * worst) / t)


@dataclass(frozen=True)
class BlackwellCheck:
    """One evaluation of the approximate matching inequality.

    ``lhs`` is the link output at the true regrets dotted with the expected
    instantaneous regret of the played policy; ``rhs`` is twice the reward
    bound times the L1 link-output gap.  ``g_space`` marks that the raw
    exponential link overflowed and the normalised companion map was
    substituted on both sides (a valid positive rescaling of the link).
    """

    lhs: float
    rhs: float
    passed: bool
    g_space: bool = False


def blackwell_check(
    spec: LinkSpec,
    regrets,
    regret_estimates,
    sigma,
    reward,
    u: float,
    phi=None,
) -> BlackwellCheck:
    """Check lhs <= 2 U ||f(R) - f(R_est)||_1 for a played matching policy.

    ``sigma`` must be the fixed-point policy computed from the estimates.
    ``phi`` defaults to the external transformation set over the actions.
    """
    regrets = np.asarray(regrets, dtype=np.float64)
    regret_estimates = np.asarray(regret_estimates, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    reward = np.asarray(reward, dtype=np.float64)
    if phi is None:
        phi = enumerate_transformations(TransformationKind.EXTERNAL, len(sigma))
    rho = expected_phi_regret(sigma, reward, phi)

    g_space = False
    if spec.family is LinkFamily.EXPONENTIAL:
        with np.errstate(over="ignore"):
            raw = np.exp(regrets / spec.param)
            raw_est = np.exp(regret_estimates / spec.param)
        if not (np.all(np.isfinite(raw)) and np.all(np.isfinite(raw_est))):
            g_space = True
    if g_space:
        y = gordon_g(spec, regrets)
        y_est = gordon_g(spec, regret_estimates)
    else:
        y = link(spec, regrets)
        y_est = link(spec, regret_estimates)

    lhs = float(y @ rho)
    rhs = float(2.0 * u * np.abs(y - y_est).sum())
    # Rounding of the inner product scales with the link-output mass, so the
    # absorbed slack must too; everything beyond float noise still fails.
    tol = 1e-8 * (1.0 + abs(rhs)) + 1e-12 * float(np.abs(y).sum()) * max(u, 1.0)
    return BlackwellCheck(lhs, rhs, lhs <= rhs + tol, g_space)


# ---------------------------------------------------------------------------
# Potential triple (documentation constants + sanity-check support)
# ---------------------------------------------------------------------------


def gordon_G(spec: LinkSpec, x) -> float:
    """Potential function G of the family's triple."""
    x = np.asarray(x, dtype=np.float64)
    if spec.family is LinkFamily.EXPONENTIAL:
        tau = spec.param
        z = x / tau
        zmax = z.max()
        return float(tau * (zmax + np.log(np.exp(z - zmax).sum())))
    p = spec.param
    xp = np.maximum(x, 0.0)
    norm = np.power(np.power(xp, p).sum(), 1.0 / p)
    return float(norm ** (2.0 if p > 2.0 else p))


def gordon_gamma(spec: LinkSpec, y) -> float:
    """Per-step slack term gamma of the family's triple."""
    y = np.asarray(y, dtype=np.float64)
    if spec.family is LinkFamily.EXPONENTIAL:
        return float(np.abs(y).max() ** 2 / (2.0 * spec.param))
    p = spec.param
    norm = np.power(np.power(np.abs(y), p).sum(), 1.0 / p)
    if p > 2.0:
        return float((p - 1.0) * norm**2)
    return float(norm**p)
