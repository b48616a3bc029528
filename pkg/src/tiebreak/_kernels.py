"""Hot numeric kernels, with a compiled path and a plain numpy path.

The Monte Carlo loop and the design search spend nearly all their time
in three small dense operations. Each has two interchangeable
implementations: a numpy expression, and a compiled loop built on first
use (so importing this package never pays the compiler's import cost).
Set TIEBREAK_DISABLE_JIT=1 to force the numpy path; kernels(jit=...)
overrides the environment for benchmarks. Both paths are deterministic,
but they sum in different orders, so results agree to rounding, not bit
for bit across paths.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

DISABLE_ENV = "TIEBREAK_DISABLE_JIT"
_TRUTHY = ("1", "true", "yes", "on")


def _np_region_weights(scores: np.ndarray, delta: float, p: float) -> np.ndarray:
    """Expected arm E[z] per subject: +1 / -1 outside the window, 2p - 1 inside."""
    return np.where(scores >= delta, 1.0,
                    np.where(scores <= -delta, -1.0, 2.0 * p - 1.0))


def _np_weighted_gram(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sum of w_i F_i F_i^T."""
    return features.T @ (weights[:, None] * features)


def _np_z_gram_rhs(features: np.ndarray, z: np.ndarray, y: np.ndarray):
    """Per-replicate pieces of the normal equations.

    Returns (sum z_i F_i F_i^T, F^T y, (zF)^T y); the z-free Gram block
    is constant across replicates and computed elsewhere.
    """
    zf = z[:, None] * features
    return features.T @ zf, features.T @ y, zf.T @ y


def _py_region_weights(scores, delta, p):
    n = scores.shape[0]
    out = np.empty(n)
    inside = 2.0 * p - 1.0
    for i in range(n):
        if scores[i] >= delta:
            out[i] = 1.0
        elif scores[i] <= -delta:
            out[i] = -1.0
        else:
            out[i] = inside
    return out


def _py_weighted_gram(features, weights):
    n, d = features.shape
    out = np.zeros((d, d))
    for i in range(n):
        for a in range(d):
            fa = weights[i] * features[i, a]
            for b in range(d):
                out[a, b] += fa * features[i, b]
    return out


def _py_z_gram_rhs(features, z, y):
    n, d = features.shape
    bz = np.zeros((d, d))
    cf = np.zeros(d)
    cz = np.zeros(d)
    for i in range(n):
        zi = z[i]
        yi = y[i]
        for a in range(d):
            fa = features[i, a]
            cf[a] += fa * yi
            cz[a] += zi * fa * yi
            zfa = zi * fa
            for b in range(d):
                bz[a, b] += zfa * features[i, b]
    return bz, cf, cz


_NUMPY_PATH = SimpleNamespace(
    jitted=False,
    region_weights=_np_region_weights,
    weighted_gram=_np_weighted_gram,
    z_gram_rhs=_np_z_gram_rhs,
)

_jit_path = None
_jit_error: Exception | None = None


def _build_jit_path():
    global _jit_path, _jit_error
    if _jit_path is not None or _jit_error is not None:
        return _jit_path
    try:
        from numba import njit
        _jit_path = SimpleNamespace(
            jitted=True,
            region_weights=njit(cache=True)(_py_region_weights),
            weighted_gram=njit(cache=True)(_py_weighted_gram),
            z_gram_rhs=njit(cache=True)(_py_z_gram_rhs),
        )
    except Exception as exc:  # numba missing or broken: numpy still works
        _jit_error = exc
        _jit_path = None
    return _jit_path


def jit_enabled_by_default() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in _TRUTHY


def kernels(jit: bool | None = None) -> SimpleNamespace:
    """Resolve the kernel namespace for the requested path.

    jit=None follows the environment; True asks for the compiled path
    (falling back to numpy if the compiler is unavailable); False forces
    numpy. The returned namespace exposes region_weights, weighted_gram,
    z_gram_rhs, and a jitted flag saying which path you actually got.
    """
    if jit is None:
        jit = jit_enabled_by_default()
    if jit:
        path = _build_jit_path()
        if path is not None:
            return path
    return _NUMPY_PATH
