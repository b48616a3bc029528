"""Monte Carlo check of the large-sample covariance formulas.

Each replicate holds the design fixed (the same quantile-spaced x and
the same rule), redraws the arms and the noise, refits by least squares,
and the scatter of the fitted coefficients across replicates estimates
N Var(bhat). The replicate streams are counter-based: replicate r of a
run seeded s uses the generator keyed (s, r), so any replicate can be
reproduced alone, the full run is independent of execution order, and
two runs with the same seed agree bit for bit on the same kernel path.

Within a replicate the draw order is fixed: one uniform per subject for
the arms, then one normal per subject for the noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import kernels
from .covariance import CoefCovariance, QUADRATIC_LABELS, TWOLINE_LABELS
from .designs import (AssignmentDistribution, DesignRule, IntervalRule,
                      STANDARD_GAUSSIAN, SlidingScale, ThreeLevelRule,
                      TieBreaker, UNIFORM_RANK, treatment_probability)
from .errors import (DegenerateDesignError, DomainError, RankDeficientError)
from .moments import rule_moments
from .quadratic import covariance_quadratic
from .twoline import covariance_from_moments, covariance_gaussian

TWOLINE = "twoline"
QUADRATIC = "quadratic"

SIMPLE_RANDOM = "simple-random"
STRATIFIED_PAIRS = "stratified-pairs"

DEGENERATE_FRACTION_LIMIT = 0.01

# The joint fit solves for the baseline coefficients first and the arm
# interactions second; this maps the quadratic fit order
# (b0, b1, b4, b2, b3, b5) back to natural order.
_QUADRATIC_FIT_TO_NATURAL = (0, 1, 3, 4, 2, 5)


def design_matrix(x: np.ndarray, model: str = TWOLINE) -> np.ndarray:
    """Baseline regressors per subject: [1, x] or [1, x, x^2]."""
    x = np.asarray(x, dtype=float)
    if model == TWOLINE:
        return np.column_stack([np.ones_like(x), x])
    if model == QUADRATIC:
        return np.column_stack([np.ones_like(x), x, x * x])
    raise DomainError(f"unknown model {model!r}")


def model_labels(model: str) -> tuple[str, ...]:
    if model == TWOLINE:
        return TWOLINE_LABELS
    if model == QUADRATIC:
        return QUADRATIC_LABELS
    raise DomainError(f"unknown model {model!r}")


def sample_assignment(rng: np.random.Generator, x: np.ndarray, rule: DesignRule,
                      distribution: AssignmentDistribution | None = None,
                      scheme: str = SIMPLE_RANDOM) -> np.ndarray:
    """Draw arms z in {-1, +1} for fixed subject positions x.

    Always consumes exactly one uniform per subject, so the downstream
    noise draws sit at the same stream offset whatever the scheme.
    simple-random compares each uniform against Pr(z = +1 | x), which
    also realizes the deterministic arms exactly. stratified-pairs walks
    the fair-coin window in position order, gives each consecutive pair
    one treated and one control member (the pair's first uniform decides
    which), and tosses the leftover subject's own coin if the window is
    odd; it requires every probability to be 0, 1/2, or 1.
    """
    x = np.asarray(x, dtype=float)
    probs = np.asarray(treatment_probability(x, rule, distribution), dtype=float)
    us = rng.random(x.size)
    if scheme == SIMPLE_RANDOM:
        return np.where(us < probs, 1.0, -1.0)
    if scheme != STRATIFIED_PAIRS:
        raise DomainError(f"unknown assignment scheme {scheme!r}")
    coin = probs == 0.5
    if not np.all(coin | (probs == 0.0) | (probs == 1.0)):
        raise DomainError("stratified pairing needs arm probabilities of "
                          "exactly 0, 1/2, or 1")
    z = np.where(probs >= 1.0, 1.0, -1.0)
    idx = np.flatnonzero(coin)
    npairs = idx.size // 2
    if npairs:
        firsts = idx[: 2 * npairs : 2]
        seconds = idx[1 : 2 * npairs : 2]
        first_treated = us[firsts] < 0.5
        z[firsts] = np.where(first_treated, 1.0, -1.0)
        z[seconds] = np.where(first_treated, -1.0, 1.0)
    if idx.size % 2:
        i = idx[-1]
        z[i] = 1.0 if us[i] < 0.5 else -1.0
    return z


def simulate_outcomes(rng: np.random.Generator, features: np.ndarray,
                      z: np.ndarray, baseline: np.ndarray,
                      interaction: np.ndarray, sigma: float) -> np.ndarray:
    """Draw outcomes y = F b + z (F g) + sigma * noise."""
    m1 = features @ baseline
    m2 = features @ interaction
    return m1 + z * m2 + sigma * rng.standard_normal(features.shape[0])


def _plu_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a small dense symmetric system by partial-pivot elimination.

    A pivot below 1e-12 of the matrix scale means the realized design did
    not separate the regressors (every window subject on one arm, say),
    and raises RankDeficientError so the replicate can be discarded.
    """
    a = np.array(mat, dtype=float)
    b = np.array(rhs, dtype=float)
    k = a.shape[0]
    tol = 1e-12 * max(np.max(np.abs(a)), 1.0)
    for col in range(k):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < tol:
            raise RankDeficientError("normal equations are rank deficient")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= factors[:, None] * a[col, col:]
        b[col + 1:] -= factors * b[col]
    out = np.empty(k)
    for row in range(k - 1, -1, -1):
        out[row] = (b[row] - a[row, row + 1:] @ out[row + 1:]) / a[row, row]
    return out


def ols_fit(features: np.ndarray, z: np.ndarray, y: np.ndarray,
            gram: np.ndarray | None = None,
            jit: bool | None = None) -> np.ndarray:
    """Least-squares coefficients of the joint fit, in natural order.

    The regressors are [F | zF]; because z^2 = 1 both diagonal Gram
    blocks equal F'F, so only the cross block depends on the replicate.
    Pass gram=F'F to amortize it across replicates.
    """
    f = np.ascontiguousarray(features, dtype=float)
    bz, cf, cz = kernels(jit).z_gram_rhs(f, np.ascontiguousarray(z, dtype=float),
                                         np.ascontiguousarray(y, dtype=float))
    a = f.T @ f if gram is None else gram
    d = f.shape[1]
    g = np.empty((2 * d, 2 * d))
    g[:d, :d] = a
    g[:d, d:] = bz
    g[d:, :d] = bz
    g[d:, d:] = a
    coef = _plu_solve(g, np.concatenate([cf, cz]))
    if d == 3:
        coef = coef[list(_QUADRATIC_FIT_TO_NATURAL)]
    return coef


def empirical_covariance(coefs: np.ndarray, n: int) -> np.ndarray:
    """N-scaled sample covariance of fitted coefficients across replicates."""
    coefs = np.asarray(coefs, dtype=float)
    if coefs.ndim != 2 or coefs.shape[0] < 2:
        raise DomainError("need at least two replicates of coefficients")
    return n * np.cov(coefs, rowvar=False, ddof=1)


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run: a model, a design, and replication settings.

    baseline and interaction are the true coefficient vectors of the
    outcome model (zeros by default; the covariance of a linear fit does
    not depend on them, which the defaults make plain).
    """

    rule: DesignRule
    model: str = TWOLINE
    distribution: AssignmentDistribution = field(
        default_factory=AssignmentDistribution.uniform_rank)
    n: int = 4000
    reps: int = 2000
    seed: int = 0
    sigma: float = 1.0
    baseline: tuple[float, ...] | None = None
    interaction: tuple[float, ...] | None = None
    scheme: str = SIMPLE_RANDOM

    def __post_init__(self):
        if self.model not in (TWOLINE, QUADRATIC):
            raise DomainError(f"unknown model {self.model!r}")
        if self.scheme not in (SIMPLE_RANDOM, STRATIFIED_PAIRS):
            raise DomainError(f"unknown assignment scheme {self.scheme!r}")
        if self.n < 4:
            raise DomainError("n must be at least 4")
        if self.reps < 2:
            raise DomainError("reps must be at least 2")
        if not 0 <= int(self.seed) < 2 ** 63:
            raise DomainError("seed must be a non-negative 63-bit integer")
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise DomainError("sigma must be positive")
        width = len(model_labels(self.model)) // 2
        for name in ("baseline", "interaction"):
            vec = getattr(self, name)
            if vec is None:
                object.__setattr__(self, name, (0.0,) * width)
            else:
                vec = tuple(float(v) for v in vec)
                if len(vec) != width or not all(np.isfinite(vec)):
                    raise DomainError(f"{name} must be {width} finite values")
                object.__setattr__(self, name, vec)

    def labels(self) -> tuple[str, ...]:
        return model_labels(self.model)


@dataclass(frozen=True)
class SimReport:
    """Empirical covariance of a run, against its closed form if one exists.

    empirical and reference are N-scaled covariance matrices over
    labels; se holds the large-reps standard error of each empirical
    entry, and max_dev_se the worst |empirical - reference| in SE units.
    """

    config: SimConfig
    labels: tuple[str, ...]
    coef_mean: np.ndarray
    empirical: np.ndarray
    se: np.ndarray
    reference: np.ndarray | None
    max_dev_se: float | None
    degenerate: int
    reps_used: int

    def to_dict(self) -> dict:
        rule = self.config.rule
        rule_desc = {"type": type(rule).__name__}
        if isinstance(rule, (TieBreaker, IntervalRule, ThreeLevelRule)):
            for key, val in vars(rule).items():
                rule_desc[key] = val
        return {
            "model": self.config.model,
            "distribution": self.config.distribution.kind,
            "rule": rule_desc,
            "scheme": self.config.scheme,
            "n": self.config.n,
            "reps": self.config.reps,
            "reps_used": self.reps_used,
            "degenerate": self.degenerate,
            "seed": int(self.config.seed),
            "sigma": self.config.sigma,
            "labels": list(self.labels),
            "coef_mean": self.coef_mean.tolist(),
            "empirical": self.empirical.tolist(),
            "reference": None if self.reference is None else self.reference.tolist(),
            "se": self.se.tolist(),
            "max_dev_se": self.max_dev_se,
        }


def closed_form_reference(config: SimConfig) -> CoefCovariance:
    """The package's own prediction for a run's N-scaled covariance.

    Covers the designs with analytic moments; anything else (empirical
    distributions, Gaussian scores with off-centre rules, a quadratic
    fit of a non-window design) has no closed form and raises.
    """
    rule, dist = config.rule, config.distribution
    if config.model == TWOLINE:
        if dist.kind == UNIFORM_RANK:
            return covariance_from_moments(rule_moments(rule), full=True)
        if dist.kind == STANDARD_GAUSSIAN and isinstance(rule, TieBreaker) \
                and rule.p == 0.5:
            return covariance_gaussian(rule.delta, full=True)
    elif config.model == QUADRATIC:
        if dist.kind == UNIFORM_RANK and isinstance(rule, TieBreaker) \
                and rule.p == 0.5:
            return covariance_quadratic(rule.delta)
    raise DomainError("no closed-form reference for this configuration")


def run_simulation(config: SimConfig, jit: bool | None = None,
                   reference: CoefCovariance | None = None,
                   require_reference: bool = False) -> SimReport:
    """Run the replicates and compare against the closed form.

    reference overrides the automatic closed_form_reference lookup; with
    require_reference=False a configuration without a closed form still
    runs and reports empirical results alone. Replicates whose realized
    design is rank deficient are dropped, and more than 1% of them marks
    the design itself degenerate.
    """
    if reference is None:
        try:
            reference = closed_form_reference(config)
        except DomainError:
            if require_reference:
                raise
            reference = None
    labels = config.labels()
    k = len(labels)
    x = config.distribution.points(config.n)
    features = np.ascontiguousarray(design_matrix(x, config.model))
    gram = features.T @ features
    baseline = np.asarray(config.baseline)
    interaction = np.asarray(config.interaction)
    coefs = np.empty((config.reps, k))
    used = 0
    degenerate = 0
    for rep in range(config.reps):
        rng = np.random.Generator(np.random.Philox(key=[int(config.seed), rep]))
        z = sample_assignment(rng, x, config.rule, config.distribution,
                              config.scheme)
        y = simulate_outcomes(rng, features, z, baseline, interaction,
                              config.sigma)
        try:
            coefs[used] = ols_fit(features, z, y, gram=gram, jit=jit)
            used += 1
        except RankDeficientError:
            degenerate += 1
    if degenerate > DEGENERATE_FRACTION_LIMIT * config.reps:
        raise DegenerateDesignError(
            f"{degenerate} of {config.reps} replicates were rank deficient")
    empirical = empirical_covariance(coefs[:used], config.n)
    ref_mat = None
    if reference is not None:
        ref_mat = reference.matrix * config.sigma ** 2
    base = empirical if ref_mat is None else ref_mat
    se = np.sqrt((np.outer(np.diag(base), np.diag(base)) + base ** 2) / used)
    max_dev = None
    if ref_mat is not None:
        max_dev = float(np.max(np.abs(empirical - ref_mat) / se))
    return SimReport(config=config, labels=labels,
                     coef_mean=coefs[:used].mean(axis=0), empirical=empirical,
                     se=se, reference=ref_mat, max_dev_se=max_dev,
                     degenerate=degenerate, reps_used=used)
