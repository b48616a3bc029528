"""Deterministic one-dimensional quadrature for design moments.

Adaptive Simpson with subdivision at caller-supplied breakpoints. The
integrands here are piecewise polynomial (step scales, interpolated
tables), so once the interval is split at the breakpoints each piece is
exact after at most one refinement. Outer segment endpoints are sampled
a relative 1e-12 inside the segment so that a jump sitting exactly on a
breakpoint never leaks the neighboring region's value into the panel.
"""

from __future__ import annotations

from typing import Callable, Iterable

ABS_TOL = 1e-10
_EDGE = 1e-12
_MAX_DEPTH = 48


def _panel(fa: float, fm: float, fb: float, h: float) -> float:
    return h * (fa + 4.0 * fm + fb) / 6.0


def _refine(f, lo, hi, fa, fm, fb, whole, tol, depth):
    mid = 0.5 * (lo + hi)
    lm = 0.5 * (lo + mid)
    rm = 0.5 * (mid + hi)
    flm = f(lm)
    frm = f(rm)
    left = _panel(fa, flm, fm, mid - lo)
    right = _panel(fm, frm, fb, hi - mid)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return (_refine(f, lo, mid, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _refine(f, mid, hi, fm, frm, fb, right, 0.5 * tol, depth - 1))


def integrate(f: Callable[[float], float], lo: float, hi: float,
              breakpoints: Iterable[float] = (), tol: float = ABS_TOL) -> float:
    """Integrate f over [lo, hi] to absolute tolerance tol.

    breakpoints inside (lo, hi) become segment boundaries; points outside
    are ignored.
    """
    if hi <= lo:
        return 0.0
    cuts = sorted({float(b) for b in breakpoints if lo < b < hi})
    edges = [lo, *cuts, hi]
    seg_tol = tol / max(1, len(edges) - 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        eps = (b - a) * _EDGE
        fa = f(a + eps)
        fb = f(b - eps)
        mid = 0.5 * (a + b)
        fm = f(mid)
        whole = _panel(fa, fm, fb, b - a)
        total += _refine(f, a, b, fa, fm, fb, whole, seg_tol, _MAX_DEPTH)
    return total
