"""Population moments of the assignment indicator against the running variable.

Every large-sample covariance in this package is built from a handful of
cross moments between the treatment indicator z and powers of x. For the
window rules on the uniform rank scale these have short closed forms; for
sliding scales they are integrals of x^k (2 p(x) - 1) over (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import normal, quadrature
from .designs import (AssignmentDistribution, IntervalRule, SlidingScale,
                      STANDARD_GAUSSIAN, ThreeLevelRule, TieBreaker, UNIFORM_RANK)
from .errors import DomainError


@dataclass(frozen=True)
class DesignMoments:
    """First cross moments of (z, x): E[z], E[zx], E[zx^2], and E[x^2]."""

    z_mean: float
    zx_mean: float
    zx2_mean: float
    x2_mean: float = 1.0 / 3.0

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return abs(self.z_mean) <= tol and abs(self.zx2_mean) <= tol


def central_zx_mean(delta):
    """E[zx] for a symmetric central window of width delta: (1 - delta^2)/2."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0) or np.any(delta > 1.0):
        raise DomainError("delta must lie in [0, 1]")
    out = (1.0 - delta * delta) / 2.0
    return float(out) if out.ndim == 0 else out


def central_zx3_mean(delta):
    """E[zx^3] for a symmetric central window: (1 - delta^4)/4."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0) or np.any(delta > 1.0):
        raise DomainError("delta must lie in [0, 1]")
    d2 = delta * delta
    out = (1.0 - d2 * d2) / 4.0
    return float(out) if out.ndim == 0 else out


def gaussian_zx_mean(delta):
    """E[zx] when x is standard Gaussian and the central fraction delta
    of subjects is randomized: 2 phi(Phi^-1((1 + delta)/2))."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0) or np.any(delta > 1.0):
        raise DomainError("delta must lie in [0, 1]")
    out = np.asarray(2.0 * normal.pdf(normal.ppf((1.0 + delta) / 2.0)))
    return float(out) if out.ndim == 0 else out


def three_level_zx_mean(delta, epsilon):
    """E[zx] for the three-level rule: (1 - 2 epsilon)(1 - delta^2)/2.

    The outer regions contribute with weight 1 - 2 epsilon (their arms are
    only epsilon away from deterministic) and the central coin contributes
    nothing, so the rule behaves like a tie-breaker shrunk by 1 - 2 epsilon.
    At epsilon = 1/2 every region is a fair coin and the moment vanishes.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0) or np.any(delta > 1.0):
        raise DomainError("delta must lie in [0, 1]")
    if not 0.0 <= epsilon < 0.5:
        raise DomainError("epsilon must lie in [0, 1/2)")
    out = (1.0 - 2.0 * epsilon) * (1.0 - delta * delta) / 2.0
    return float(out) if out.ndim == 0 else out


def interval_moments(a: float, b: float, p: float = 0.5) -> DesignMoments:
    """Closed-form moments for randomization on (a, b) with probability p.

    Derived by splitting E[z x^k] = (1/2) [ int_b^1 x^k dx
    + (2p - 1) int_a^b x^k dx - int_{-1}^a x^k dx ].
    """
    IntervalRule(a, b, p)  # reuse the rule's own validation
    q = 2.0 * p - 1.0
    z_mean = -(a + b) / 2.0 + q * (b - a) / 2.0
    zx_mean = 0.5 - (a * a + b * b) / 4.0 + q * (b * b - a * a) / 4.0
    zx2_mean = -(a ** 3 + b ** 3) / 6.0 + q * (b ** 3 - a ** 3) / 6.0
    return DesignMoments(z_mean, zx_mean, zx2_mean)


def sliding_moments(scale: SlidingScale, tol: float = 1e-10) -> DesignMoments:
    """Moments of a sliding scale by adaptive quadrature over (-1, 1).

    The scale's breakpoints (knots of a table, window edges of a step
    rule) are passed through so kinks land on panel boundaries.
    """
    bps = scale.breakpoints

    def bar(k):
        return 0.5 * quadrature.integrate(
            lambda x: (x ** k if k else 1.0) * (2.0 * scale(x) - 1.0),
            -1.0, 1.0, breakpoints=bps, tol=tol)

    return DesignMoments(bar(0), bar(1), bar(2))


def rule_moments(rule, distribution: AssignmentDistribution | None = None) -> DesignMoments:
    """Moments of any rule, on the given distribution (uniform rank default).

    The Gaussian case covers the fair-coin tie-breaker only; its odd
    symmetry gives E[z] = E[zx^2] = 0 with E[x^2] = 1.
    """
    dist = distribution or AssignmentDistribution.uniform_rank()
    if dist.kind == STANDARD_GAUSSIAN:
        if isinstance(rule, TieBreaker) and rule.p == 0.5:
            return DesignMoments(0.0, float(gaussian_zx_mean(rule.delta)), 0.0,
                                 x2_mean=1.0)
        raise DomainError("Gaussian moments are available for the fair-coin "
                          "tie-breaker only")
    if dist.kind != UNIFORM_RANK:
        raise DomainError("closed-form moments need the uniform rank scale")
    if isinstance(rule, TieBreaker):
        return interval_moments(-rule.delta, rule.delta, rule.p)
    if isinstance(rule, IntervalRule):
        return interval_moments(rule.a, rule.b, rule.p)
    if isinstance(rule, ThreeLevelRule):
        return DesignMoments(0.0, float(three_level_zx_mean(rule.delta, rule.epsilon)), 0.0)
    if isinstance(rule, SlidingScale):
        return sliding_moments(rule)
    raise DomainError(f"no moment formulas for {type(rule).__name__}")
