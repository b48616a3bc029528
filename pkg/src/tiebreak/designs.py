"""Assignment distributions, treatment rules, and sliding allocation scales.

The analysis operates on a rank-transformed assignment variable: the N
subjects' scores are replaced by the equispaced grid x_i = (2i - N - 1)/N,
which is uniform on (-1, 1) in the large-N limit. Rules decide the
treatment arm z in {-1, +1} from x: deterministic arms outside a window,
randomization inside it, or a probability p(x) that slides with x.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from . import normal
from .errors import DomainError

UNIFORM_RANK = "uniform-rank"
STANDARD_GAUSSIAN = "standard-gaussian"
EMPIRICAL = "empirical"


def rank_transform(scores: Sequence[float]) -> np.ndarray:
    """Equispaced rank values for N scores, sorted ascending.

    Returns x_i = (2i - N - 1)/N for i = 1..N. The output depends on the
    scores only through N; see subject_ranks for the per-subject mapping.
    """
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("scores must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(arr)):
        raise DomainError("scores must all be finite")
    n = arr.size
    return (2.0 * np.arange(1, n + 1) - n - 1) / n


def subject_ranks(scores: Sequence[float]) -> np.ndarray:
    """Rank value per input subject, ties broken by original index (stable)."""
    arr = np.asarray(scores, dtype=float)
    grid = rank_transform(arr)
    order = np.argsort(arr, kind="stable")
    out = np.empty_like(grid)
    out[order] = grid
    return out


def load_scores(path) -> np.ndarray:
    """Read an empirical score file: plain text, one decimal value per line."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise DomainError(
                f"{path}: line {lineno} is not a decimal value: {text!r}") from None
    if not values:
        raise DomainError(f"{path}: no score values found")
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{path}: scores must all be finite")
    return arr


@dataclass(frozen=True)
class AssignmentDistribution:
    """Distribution of the assignment variable x.

    kind is one of "uniform-rank" (the default analysis scale),
    "standard-gaussian" (scores kept on their original N(0,1) scale), or
    "empirical" (a fixed set of scores, rank-transformed).
    """

    kind: str
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in (UNIFORM_RANK, STANDARD_GAUSSIAN, EMPIRICAL):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if self.kind == EMPIRICAL:
            if self.scores is None:
                raise DomainError("empirical distribution requires scores")
            arr = np.asarray(self.scores, dtype=float)
            if arr.size == 0 or not np.all(np.isfinite(arr)):
                raise DomainError("empirical scores must be non-empty and finite")
            object.__setattr__(self, "scores", tuple(float(v) for v in arr))
        elif self.scores is not None:
            raise DomainError("scores are only valid for the empirical kind")

    @classmethod
    def uniform_rank(cls) -> "AssignmentDistribution":
        return cls(UNIFORM_RANK)

    @classmethod
    def standard_gaussian(cls) -> "AssignmentDistribution":
        return cls(STANDARD_GAUSSIAN)

    @classmethod
    def empirical(cls, scores: Sequence[float]) -> "AssignmentDistribution":
        return cls(EMPIRICAL, tuple(float(v) for v in np.asarray(scores, dtype=float)))

    def points(self, n: int | None = None) -> np.ndarray:
        """Fixed design points for n subjects, sorted ascending.

        Uniform ranks use the equispaced grid; the Gaussian case uses the
        quantile midpoints Phi^-1((i - 1/2)/n); empirical distributions
        return the rank transform of their stored scores (n, if given,
        must match).
        """
        if self.kind == EMPIRICAL:
            pts = rank_transform(np.asarray(self.scores))
            if n is not None and n != pts.size:
                raise DomainError(
                    f"empirical distribution has {pts.size} scores, not {n}")
            return pts
        if n is None or n < 1:
            raise DomainError("n must be a positive integer")
        if self.kind == UNIFORM_RANK:
            return (2.0 * np.arange(1, n + 1) - n - 1) / n
        return normal.ppf((np.arange(1, n + 1) - 0.5) / n)

    def x2_mean(self) -> float:
        """Population second moment of x."""
        if self.kind == UNIFORM_RANK:
            return 1.0 / 3.0
        if self.kind == STANDARD_GAUSSIAN:
            return 1.0
        pts = self.points()
        return float(np.mean(pts * pts))

    def central_window(self, frac: float) -> tuple[float, float]:
        """Window (lo, hi) that randomizes the central fraction frac of mass."""
        if not 0.0 <= frac <= 1.0:
            raise DomainError("experimented fraction must lie in [0, 1]")
        if self.kind == STANDARD_GAUSSIAN:
            tau = normal.ppf((1.0 + frac) / 2.0)
            return (-tau, tau)
        return (-frac, frac)


@dataclass(frozen=True)
class TieBreaker:
    """Randomize the central fraction delta; treat the top, control the bottom.

    delta = 0 is the regression discontinuity design, delta = 1 the fully
    randomized trial. Subjects with x >= delta are treated, x <= -delta are
    controls, and the strict inside is randomized with treatment
    probability p.
    """

    delta: float
    p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError("delta must lie in [0, 1]")
        if not 0.0 < self.p < 1.0:
            raise DomainError("p must lie strictly inside (0, 1)")

    def as_interval(self) -> "IntervalRule":
        return IntervalRule(-self.delta, self.delta, self.p)


@dataclass(frozen=True)
class IntervalRule:
    """Randomize on (a, b) with probability p; treat x >= b, control x <= a."""

    a: float
    b: float
    p: float = 0.5

    def __post_init__(self):
        if not (-1.0 <= self.a <= self.b <= 1.0):
            raise DomainError("window must satisfy -1 <= a <= b <= 1")
        if not 0.0 < self.p < 1.0:
            raise DomainError("p must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class ThreeLevelRule:
    """Treatment probabilities epsilon / 0.5 / 1 - epsilon by region.

    The bottom region (x <= -delta) is treated with probability epsilon,
    the central window is a fair coin, and the top region is treated with
    probability 1 - epsilon.
    """

    delta: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError("delta must lie in [0, 1]")
        if not 0.0 <= self.epsilon < 0.5:
            raise DomainError("epsilon must lie in [0, 1/2)")


@dataclass(frozen=True)
class ScoreThresholdRule:
    """Tie-breaker on a linear score: randomize where |theta . F| < delta.

    Rows with theta . F >= delta are treated, rows with theta . F <= -delta
    are controls, and the strict inside is randomized with probability p.
    """

    theta: tuple[float, ...]
    delta: float
    p: float = 0.5

    def __post_init__(self):
        theta = tuple(float(v) for v in np.asarray(self.theta, dtype=float).ravel())
        if len(theta) == 0 or not all(np.isfinite(theta)):
            raise DomainError("theta must be a non-empty finite vector")
        if not any(v != 0.0 for v in theta):
            raise DomainError("theta must not be the zero vector")
        if not (np.isfinite(self.delta) and self.delta >= 0.0):
            raise DomainError("delta must be a finite non-negative real")
        if not 0.0 < self.p < 1.0:
            raise DomainError("p must lie strictly inside (0, 1)")
        object.__setattr__(self, "theta", theta)

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)


class SlidingScale:
    """Treatment probability p(x) on [-1, 1], analytic or tabulated.

    Tabulated scales are evaluated by linear interpolation between knots
    with constant extension beyond the first and last knot. Values must
    lie in [0, 1]; monotonicity is typical for real designs but not
    required (the |x| scale is a useful counterexample).
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray],
                 breakpoints: Sequence[float] = (),
                 table: tuple[np.ndarray, np.ndarray] | None = None):
        self._func = func
        self._breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self._table = table
        self._validate_range()

    def _validate_range(self):
        probe = np.union1d(np.linspace(-1.0, 1.0, 257),
                           np.asarray(self._breakpoints, dtype=float))
        probe = probe[(probe >= -1.0) & (probe <= 1.0)]
        vals = self(probe)
        if not np.all(np.isfinite(vals)):
            raise DomainError("scale produced non-finite probabilities")
        if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
            raise DomainError("scale values must lie in [0, 1]")

    @classmethod
    def from_callable(cls, func: Callable, breakpoints: Sequence[float] = ()) -> "SlidingScale":
        vec = np.vectorize(func, otypes=[float])
        return cls(lambda x: vec(x), breakpoints)

    @classmethod
    def from_table(cls, x: Sequence[float], p: Sequence[float]) -> "SlidingScale":
        xs = np.asarray(x, dtype=float)
        ps = np.asarray(p, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != ps.shape:
            raise DomainError("a tabulated scale needs matching x and p columns "
                              "with at least two knots")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
            raise DomainError("table entries must be finite")
        if np.any(np.diff(xs) <= 0.0):
            raise DomainError("table x values must be strictly increasing")
        if ps.min() < 0.0 or ps.max() > 1.0:
            raise DomainError("table p values must lie in [0, 1]")
        xs = xs.copy()
        ps = ps.copy()
        xs.setflags(write=False)
        ps.setflags(write=False)
        return cls(lambda t: np.interp(t, xs, ps), breakpoints=xs, table=(xs, ps))

    @classmethod
    def from_csv(cls, path) -> "SlidingScale":
        """Read a two-column CSV "x,p" with a header row."""
        rows = []
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or len(header) < 2:
                raise DomainError(f"{path}: expected a header row with two columns")
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 2:
                    raise DomainError(f"{path}: line {lineno} must have two columns")
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    raise DomainError(
                        f"{path}: line {lineno} is not numeric: {row!r}") from None
        if not rows:
            raise DomainError(f"{path}: no data rows")
        xs, ps = zip(*rows)
        return cls.from_table(xs, ps)

    @classmethod
    def from_rule(cls, rule) -> "SlidingScale":
        """Express a window rule as its (step) probability scale."""
        if isinstance(rule, TieBreaker):
            rule = rule.as_interval()
        if isinstance(rule, IntervalRule):
            lo, hi, mid = rule.a, rule.b, rule.p
            bottom, top = 0.0, 1.0
        elif isinstance(rule, ThreeLevelRule):
            lo, hi, mid = -rule.delta, rule.delta, 0.5
            bottom, top = rule.epsilon, 1.0 - rule.epsilon
        else:
            raise DomainError(f"cannot express {type(rule).__name__} as a scale")

        def step(x, lo=lo, hi=hi, mid=mid, bottom=bottom, top=top):
            x = np.asarray(x, dtype=float)
            return np.where(x >= hi, top, np.where(x <= lo, bottom, mid))

        return cls(step, breakpoints=(lo, hi))

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.asarray(self._func(arr), dtype=float)
        return float(out) if arr.ndim == 0 else out

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self._breakpoints

    @property
    def table(self) -> tuple[np.ndarray, np.ndarray] | None:
        return self._table

    def symmetrized(self) -> "SlidingScale":
        """The symmetric scale (p(x) + 1 - p(-x))/2.

        Satisfies p(x) + p(-x) = 1 pointwise, which zeroes the even moment
        of the allocation while preserving its mean and its x moment. For
        a tabulated scale the result is again a table, on the union of the
        knots and their reflections, and the identity is exact under
        linear interpolation.
        """
        if self._table is not None:
            xs, _ = self._table
            knots = np.union1d(xs, -xs)
            vals = 0.5 * (self(knots) + 1.0 - self(-knots))
            return SlidingScale.from_table(knots, np.clip(vals, 0.0, 1.0))
        func = self._func
        mirrored = tuple(-b for b in self._breakpoints)
        return SlidingScale(
            lambda x: 0.5 * (np.asarray(func(np.asarray(x, dtype=float)), dtype=float)
                             + 1.0 - np.asarray(func(-np.asarray(x, dtype=float)), dtype=float)),
            breakpoints=self._breakpoints + mirrored)


DesignRule = Union[TieBreaker, IntervalRule, ThreeLevelRule, SlidingScale, ScoreThresholdRule]


def treatment_probability(x, rule: DesignRule,
                          distribution: AssignmentDistribution | None = None):
    """Pr(z = +1 | x) under a rule, on the distribution's own x scale.

    The central window of a TieBreaker or ThreeLevelRule is a fraction of
    the population, so its x-space location depends on the distribution
    (plus or minus delta on the rank scale, quantiles of the Gaussian).
    IntervalRule and ScoreThresholdRule windows are literal x thresholds.
    """
    arr = np.asarray(x, dtype=float)
    if isinstance(rule, SlidingScale):
        out = rule(arr)
    elif isinstance(rule, (TieBreaker, ThreeLevelRule)):
        dist = distribution or AssignmentDistribution.uniform_rank()
        lo, hi = dist.central_window(rule.delta)
        if isinstance(rule, TieBreaker):
            bottom, mid, top = 0.0, rule.p, 1.0
        else:
            bottom, mid, top = rule.epsilon, 0.5, 1.0 - rule.epsilon
        out = np.where(arr >= hi, top, np.where(arr <= lo, bottom, mid))
    elif isinstance(rule, IntervalRule):
        out = np.where(arr >= rule.b, 1.0, np.where(arr <= rule.a, 0.0, rule.p))
    elif isinstance(rule, ScoreThresholdRule):
        out = np.where(arr >= rule.delta, 1.0,
                       np.where(arr <= -rule.delta, 0.0, rule.p))
    else:
        raise DomainError(f"unknown rule type {type(rule).__name__}")
    return float(out) if arr.ndim == 0 else np.asarray(out, dtype=float)
