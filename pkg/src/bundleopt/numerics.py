"""Shared scalar-search helpers: bracketed maximization and peak counting."""

from __future__ import annotations

import warnings
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

INVPHI = (np.sqrt(5.0) - 1.0) / 2.0  # 1/golden ratio


class MultiplePeaksWarning(UserWarning):
    """Raised when a scan finds several near-tied local maxima."""


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section maximization of a unimodal f on [lo, hi]; returns argmax."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def bracketed_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    coarse: int = 1001,
    tol: float = 1e-10,
    tie_tol: float = 1e-12,
    slope: Optional[Callable[[float], float]] = None,
    warn_label: str = "",
) -> float:
    """Argmax of f on [lo, hi]: coarse scan, golden-section refinement, slope polish.

    The coarse grid brackets the peak; golden section shrinks the bracket to
    ``tol``.  Golden section alone stalls at ~sqrt(eps) accuracy because the
    objective is flat at the peak, so when an analytic ``slope`` is supplied
    and changes sign across the final bracket, the stationary point is
    re-solved to near machine precision.  Non-adjacent grid maxima within
    ``tie_tol`` of the best trigger MultiplePeaksWarning and the smallest
    argmax is kept.
    """
    if hi <= lo:
        return lo
    xs = np.linspace(lo, hi, coarse)
    ys = np.array([f(x) for x in xs])
    best = np.max(ys)
    near = np.flatnonzero(ys >= best - tie_tol)
    # a 2-point adjacent tie is a peak sitting on a cell midpoint, not a
    # uniqueness violation; larger or disconnected tie sets are
    if np.any(np.diff(near) > 1) or near.size >= 3:
        warnings.warn(
            f"multiple near-tied maxima{' for ' + warn_label if warn_label else ''}; "
            "keeping the smallest argument",
            MultiplePeaksWarning,
            stacklevel=2,
        )
    k = int(near[0])
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, coarse - 1)]
    x = golden_max(f, a, b, tol=tol) if b > a else xs[k]
    if slope is not None:
        # golden section is function-value limited to ~sqrt(eps); when the
        # analytic slope changes sign across the coarse bracket, the
        # stationary point is recovered to near machine precision instead
        try:
            sa, sb = slope(a), slope(b)
            if np.isfinite(sa) and np.isfinite(sb) and sa > 0.0 > sb:
                r = brentq(slope, a, b, xtol=1e-14)
                if f(r) >= f(x) - 1e-12:
                    x = r
        except ValueError:
            pass
    return float(min(max(x, lo), hi))


def count_descents_to_ascents(y: np.ndarray, noise: Optional[float] = None) -> int:
    """Number of strict fall-then-rise turns in y; 0 means single-peaked on the grid."""
    y = np.asarray(y, dtype=float)
    if noise is None:
        spread = float(np.max(y) - np.min(y)) if y.size else 0.0
        noise = max(1e-12, 1e-14 * spread)
    d = np.diff(y)
    sign = np.zeros_like(d, dtype=int)
    sign[d > noise] = 1
    sign[d < -noise] = -1
    sign = sign[sign != 0]
    if sign.size == 0:
        return 0
    turns = 0
    for prev, cur in zip(sign[:-1], sign[1:]):
        if prev == -1 and cur == 1:
            turns += 1
    return turns


def first_sign_change_from_top(t: np.ndarray, delta: np.ndarray) -> Optional[int]:
    """Largest index k with delta[k] <= 0, ignoring non-finite entries; None if all positive."""
    finite = np.isfinite(delta)
    nonpos = finite & (delta <= 0.0)
    idx = np.flatnonzero(nonpos)
    if idx.size == 0:
        return None
    return int(idx[-1])
