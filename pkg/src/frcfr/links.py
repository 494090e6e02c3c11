"""Link functions and their potential companion maps.

Two families are supported.  The polynomial family with exponent ``p > 1``
maps a regret vector componentwise to ``(x_i^+)**(p - 1)`` (a normalised
rectified power); ``p = 2`` is plain regret matching.  The exponential family
with temperature ``tau > 0`` maps to ``exp(x_i / tau)``; normalising it gives
a softmax policy (Hedge).

Each family also carries a companion map ``g`` from the Gordon potential
framework.  The companion map is what enters the regret bounds in
:mod:`frcfr.bounds`, and for the exponential family it is the numerically
safe (normalised) object, so bound bookkeeping never exponentiates large
regrets in isolation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "LinkFamily",
    "LinkSpec",
    "link",
    "gordon_g",
    "link_error",
    "POLY_PARAM_GRID",
    "EXP_PARAM_GRID",
    "EXP_PARAM_GRID_WIDE",
]

log = logging.getLogger(__name__)

_F64_MAX = np.finfo(np.float64).max

# Default experiment grids around the common choices (p = 2, softmax with a
# small temperature).  The wide temperature grid suits games whose regrets
# stay at the win/loss scale.
POLY_PARAM_GRID = (1.1, 1.5, 2.0, 2.5, 3.0)
EXP_PARAM_GRID = (0.01, 0.05, 0.1, 0.5, 1.0)
EXP_PARAM_GRID_WIDE = (0.1, 0.5, 1.0, 5.0, 10.0)


class LinkFamily(Enum):
    POLYNOMIAL = "poly"
    EXPONENTIAL = "exp"


@dataclass(frozen=True)
class LinkSpec:
    """A link family together with its parameter (p or tau)."""

    family: LinkFamily
    param: float

    def __post_init__(self) -> None:
        if self.family is LinkFamily.POLYNOMIAL and not self.param > 1.0:
            raise ValueError("polynomial link requires p > 1")
        if self.family is LinkFamily.EXPONENTIAL and not self.param > 0.0:
            raise ValueError("exponential link requires tau > 0")

    @staticmethod
    def poly(p: float) -> "LinkSpec":
        return LinkSpec(LinkFamily.POLYNOMIAL, p)

    @staticmethod
    def exp(tau: float) -> "LinkSpec":
        return LinkSpec(LinkFamily.EXPONENTIAL, tau)

    def __str__(self) -> str:
        return f"{self.family.value}({self.param:g})"


def _as_finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("link input must be finite")
    return x


def link(spec: LinkSpec, x) -> np.ndarray:
    """Apply the raw link function componentwise.

    Polynomial: ``(x_i^+)**(p-1)``.  Exponential: ``exp(x_i / tau)``, evaluated
    in extended precision; values past the float64 range are clamped to the
    largest finite float with a logged warning.  Policies are never produced
    from these raw values (see :func:`frcfr.matcher.policy_from_estimates`);
    the raw outputs exist for error bookkeeping and diagnostics.
    """
    x = _as_finite(x)
    if spec.family is LinkFamily.POLYNOMIAL:
        xp = np.maximum(x, 0.0)
        return np.power(xp, spec.param - 1.0)
    scaled = np.asarray(x, dtype=np.longdouble) / spec.param
    with np.errstate(over="ignore"):
        raw = np.exp(scaled)
    out = raw.astype(np.float64)
    oversized = ~np.isfinite(out)
    if np.any(oversized):
        log.warning(
            "exponential link overflow in %d component(s); clamping to float max",
            int(oversized.sum()),
        )
        out[oversized] = _F64_MAX
    return out


def gordon_g(spec: LinkSpec, x) -> np.ndarray:
    """Apply the family's potential companion map componentwise.

    Polynomial with p > 2:  ``g(x)_i = 2 x_i^{p-1} / ||x^+||_p^{p-2}`` for
    positive components and 0 otherwise; the all-nonpositive input maps to the
    zero vector.  Polynomial with 1 < p <= 2:  ``g(x)_i = p (x_i^+)^{p-1}``.
    Exponential:  the softmax of ``x / tau`` (computed with shifted logits).
    """
    x = _as_finite(x)
    if spec.family is LinkFamily.EXPONENTIAL:
        z = x / spec.param
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum()
    p = spec.param
    xp = np.maximum(x, 0.0)
    if p <= 2.0:
        return p * np.power(xp, p - 1.0)
    norm = np.power(np.power(xp, p).sum(), 1.0 / p)
    if norm == 0.0:
        return np.zeros_like(xp)
    return 2.0 * np.power(xp, p - 1.0) / np.power(norm, p - 2.0)


def link_error(y, y_est) -> float:
    """L1 distance between two link-output vectors."""
    y = np.asarray(y, dtype=np.float64)
    y_est = np.asarray(y_est, dtype=np.float64)
    if y.shape != y_est.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_est.shape}")
    return float(np.abs(y - y_est).sum())
