"""Labeled coefficient covariance matrices.

Every analytic covariance in this package is reported on the N-scaled
convention: entries are N * Var(coefficient estimate) in units of sigma^2,
so they are finite limits independent of the sample size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDesignError, DomainError

TWOLINE_LABELS = ("beta0", "beta1", "beta2", "beta3")
QUADRATIC_LABELS = ("beta0", "beta1", "beta2", "beta3", "beta4", "beta5")

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class CoefCovariance:
    """Symmetric positive-definite N * Var matrix with coefficient labels."""

    labels: tuple[str, ...]
    matrix: np.ndarray
    n_scaled: bool = field(default=True)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        labels = tuple(str(s) for s in self.labels)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("covariance matrix must be square")
        if len(labels) != m.shape[0]:
            raise DomainError("label count must equal matrix dimension")
        if not np.all(np.isfinite(m)):
            raise DegenerateDesignError("covariance contains non-finite entries")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > _SYM_TOL * scale:
            raise DomainError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] <= 1e-14 * max(1.0, eigs[-1]):
            raise DegenerateDesignError(
                "covariance is not positive definite (degenerate design)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown coefficient label {label!r}") from None

    def var(self, label: str) -> float:
        i = self.index(label)
        return float(self.matrix[i, i])

    def cov(self, label_a: str, label_b: str) -> float:
        return float(self.matrix[self.index(label_a), self.index(label_b)])

    def quadratic_form(self, weights) -> float:
        """N * Var of the linear combination sum_j weights[j] * coef_j."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.dim,):
            raise DomainError("weight vector length must equal dimension")
        return float(w @ self.matrix @ w)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "n_scaled": self.n_scaled,
            "matrix": [[float(v) for v in row] for row in self.matrix],
        }
