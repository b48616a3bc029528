"""Large-sample analysis of the two-line outcome model.

The outcome is modelled as Y = b0 + b1 x + b2 z + b3 z x + noise, with x
the rank-transformed assignment variable and z in {-1, +1} the arm. The
treatment effect at x is 2(b2 + b3 x). With unit noise variance, the
scaled covariance N Var(bhat) of the least-squares fit depends on the
design only through the cross moments of (z, x), so every quantity here
is a short formula in those moments.

For the fair-coin tie-breaker the moments reduce to E[zx] = (1 - d^2)/2
and the covariance has explicit entries. Off-centre windows and unequal
coin probabilities shift E[z] and E[zx^2] away from zero; the general
case goes through the 2x2 Schur complement of the design Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CoefCovariance, TWOLINE_LABELS
from .designs import STANDARD_GAUSSIAN, UNIFORM_RANK, AssignmentDistribution
from .errors import DegenerateDesignError, DomainError
from .moments import (DesignMoments, central_zx_mean, gaussian_zx_mean,
                      interval_moments)

EFFECT_LABELS = ("beta2", "beta3")

_DEGENERATE_REL = 1e-13


def _check_delta(delta) -> np.ndarray:
    arr = np.asarray(delta, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("delta must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class MomentSchur:
    """Schur complement of the (z, zx) block of the design Gram matrix.

    For regressors (1, x, z, zx) on the uniform rank scale the Gram
    matrix is [[D, C], [C, D]] with D = diag(1, 1/3) and C the symmetric
    matrix of cross moments. M = D - C D^-1 C is what the covariance of
    (b2, b3) inverts, and by the symmetry of the blocks it is also what
    the covariance of (b0, b1) inverts.
    """

    m11: float
    m12: float
    m22: float

    @classmethod
    def from_moments(cls, mom: DesignMoments) -> "MomentSchur":
        zb, zxb, zx2b = mom.z_mean, mom.zx_mean, mom.zx2_mean
        return cls(m11=1.0 - zb * zb - 3.0 * zxb * zxb,
                   m12=-zb * zxb - 3.0 * zx2b * zxb,
                   m22=1.0 / 3.0 - zxb * zxb - 3.0 * zx2b * zx2b)

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    def inverse(self) -> np.ndarray:
        det = self.det
        scale = max(abs(self.m11), abs(self.m22), abs(self.m12), 1e-300)
        if det <= _DEGENERATE_REL * scale * scale:
            raise DegenerateDesignError(
                "design is degenerate: the (z, zx) moment matrix is singular")
        return np.array([[self.m22, -self.m12],
                         [-self.m12, self.m11]]) / det


def covariance_from_moments(mom: DesignMoments, full: bool = False) -> CoefCovariance:
    """Scaled covariance of the two-line fit from design moments alone.

    The (b2, b3) block is M^-1 with M the Schur complement; with
    full=True both diagonal blocks of the 4x4 equal M^-1 and the cross
    block is -M^-1 C D^-1.
    """
    schur = MomentSchur.from_moments(mom)
    a = schur.inverse()
    if not full:
        return CoefCovariance(EFFECT_LABELS, a)
    c = np.array([[mom.z_mean, mom.zx_mean],
                  [mom.zx_mean, mom.zx2_mean]])
    d_inv = np.diag([1.0, 1.0 / mom.x2_mean])
    b = -a @ c @ d_inv
    full_mat = np.block([[a, b], [b.T, a]])
    return CoefCovariance(TWOLINE_LABELS, full_mat)


def covariance_uniform(delta: float, full: bool = False) -> CoefCovariance:
    """Scaled covariance for the fair-coin tie-breaker on uniform ranks.

    With f = (1 - delta^2)/2, the variances are N Var(b0) = N Var(b2)
    = 1/(1 - 3 f^2) and N Var(b1) = N Var(b3) = 3/(1 - 3 f^2); the only
    couplings are Cov(b0, b3) = Cov(b1, b2) = -3 f/(1 - 3 f^2). Pass
    full=True for the 4x4 matrix, otherwise the (b2, b3) block.
    """
    delta = float(_check_delta(delta))
    f = central_zx_mean(delta)
    denom = 1.0 - 3.0 * f * f
    v_even = 1.0 / denom
    v_odd = 3.0 / denom
    if not full:
        return CoefCovariance(EFFECT_LABELS, np.diag([v_even, v_odd]))
    coupling = -3.0 * f / denom
    mat = np.diag([v_even, v_odd, v_even, v_odd])
    mat[0, 3] = mat[3, 0] = coupling
    mat[1, 2] = mat[2, 1] = coupling
    return CoefCovariance(TWOLINE_LABELS, mat)


def covariance_gaussian(delta: float, full: bool = False) -> CoefCovariance:
    """Scaled covariance when scores stay on their Gaussian scale.

    E[x^2] = 1 makes all four variances equal: N Var(b_j)
    = 1/(1 - f^2) with f = 2 phi(Phi^-1((1 + delta)/2)). The sharp
    cut-off (delta = 0) gives pi/(pi - 2), about 2.752, against 4 on the
    rank scale: Gaussian tails spread the forced arms further from the
    threshold and buy extrapolation leverage.
    """
    delta = float(_check_delta(delta))
    f = gaussian_zx_mean(delta)
    denom = 1.0 - f * f
    v = 1.0 / denom
    if not full:
        return CoefCovariance(EFFECT_LABELS, np.diag([v, v]))
    coupling = -f / denom
    mat = np.diag([v, v, v, v])
    mat[0, 3] = mat[3, 0] = coupling
    mat[1, 2] = mat[2, 1] = coupling
    return CoefCovariance(TWOLINE_LABELS, mat)


def var_gain_at_x(delta, x, distribution: AssignmentDistribution | None = None):
    """Scaled variance of the estimated treatment effect 2(b2 + b3 x).

    On the rank scale this is 16 (1 + 3 x^2) / (1 + 3 delta^2 (2 - delta^2));
    on the Gaussian scale 4 (1 + x^2) / (1 - f^2). Broadcasts over delta
    and x.
    """
    delta = _check_delta(delta)
    x = np.asarray(x, dtype=float)
    kind = (distribution or AssignmentDistribution.uniform_rank()).kind
    if kind == UNIFORM_RANK:
        out = 16.0 * (1.0 + 3.0 * x * x) / (1.0 + 3.0 * delta * delta * (2.0 - delta * delta))
    elif kind == STANDARD_GAUSSIAN:
        f = gaussian_zx_mean(delta)
        out = 4.0 * (1.0 + x * x) / (1.0 - f * f)
    else:
        raise DomainError("treatment effect variance needs the uniform rank "
                          "or Gaussian scale")
    return float(out) if out.ndim == 0 else out


def efficiency_vs_rdd(delta):
    """Variance of the sharp-cut-off effect estimate relative to width delta.

    Equals 1 + 3 delta^2 (2 - delta^2): randomizing everyone cuts the
    variance of the estimated effect fourfold, and a window of half the
    population already captures a factor 2.31.
    """
    delta = _check_delta(delta)
    out = 1.0 + 3.0 * delta * delta * (2.0 - delta * delta)
    return float(out) if out.ndim == 0 else out


def gain(delta, beta3, beta0: float = 0.0):
    """Expected per-subject benefit of assignment, b0 + b3 (1 - delta^2)/2.

    The b3 term is the payoff from giving treatment preferentially to
    high scorers; widening the window erodes it.
    """
    delta = _check_delta(delta)
    out = beta0 + beta3 * central_zx_mean(delta)
    return float(out) if np.ndim(out) == 0 else out


def experimentation_cost(delta, beta3, n: float = 1.0):
    """Shortfall of a width-delta window against the sharp cut-off, summed
    over n subjects: n b3 delta^2 / 2."""
    delta = _check_delta(delta)
    out = n * beta3 * delta * delta / 2.0
    return float(out) if np.ndim(out) == 0 else out


def precision(delta):
    """Reciprocal of N Var(b3): 1/3 - ((1 - delta^2)/2)^2.

    Increases with delta; the fully randomized design attains 1/3.
    """
    delta = _check_delta(delta)
    f = central_zx_mean(delta)
    out = 1.0 / 3.0 - f * f
    return float(out) if np.ndim(out) == 0 else out


def value(delta, beta3, lam, beta0: float = 0.0):
    """Gain plus lam times precision, the objective traded off by delta."""
    if lam < 0.0:
        raise DomainError("the precision weight lam must be non-negative")
    out = gain(delta, beta3, beta0) + lam * precision(delta)
    return float(out) if np.ndim(out) == 0 else out


def optimal_delta(beta3: float, lam: float) -> float:
    """Window width maximizing gain + lam * precision.

    The objective is quadratic in delta^2, giving a closed form: ratios
    r = b3/lam at or below 0 push to full randomization, r at or above 1
    to the sharp cut-off, and in between delta* = sqrt(1 - r).
    """
    if not np.isfinite(beta3):
        raise DomainError("beta3 must be finite")
    if not (np.isfinite(lam) and lam > 0.0):
        raise DomainError("the precision weight lam must be positive")
    r = beta3 / lam
    if r <= 0.0:
        return 1.0
    if r >= 1.0:
        return 0.0
    return float(np.sqrt(1.0 - r))


def min_delta_for_fraction(rho: float) -> float:
    """Smallest window giving at least rho of the attainable precision.

    precision(1) = 1/3 is the ceiling; solving precision(delta) = rho/3
    gives delta = sqrt(1 - 2 sqrt((1 - rho)/3)). Any rho below 1/4 is
    free, since even the sharp cut-off retains a quarter of the ceiling.
    """
    if not 0.25 <= rho <= 1.0:
        raise DomainError("rho must lie in [1/4, 1]")
    return float(np.sqrt(1.0 - 2.0 * np.sqrt((1.0 - rho) / 3.0)))


def noncentral_covariance(a: float, b: float, p: float = 0.5,
                          full: bool = False) -> CoefCovariance:
    """Scaled covariance for randomization on an arbitrary window (a, b).

    Off-centre windows make E[z] and E[z x^2] non-zero, which couples the
    two regression lines; the covariance comes from the Schur complement
    of the moment matrix rather than a single scalar. Reduces exactly to
    covariance_uniform when a = -b and p = 1/2.
    """
    return covariance_from_moments(interval_moments(a, b, p), full=full)
