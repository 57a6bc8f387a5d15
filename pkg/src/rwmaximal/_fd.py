"""Centered finite differences on uniform grids.

Arrays carry component axes first and ``ndim`` grid axes last.  Results keep
the input shape; nodes without a full stencil are filled with NaN so margins
propagate through later arithmetic.
"""

import numpy as np


def _axis(F, k, ndim):
    return F.ndim - ndim + k


def _sl(F, axis, start, stop):
    idx = [slice(None)] * F.ndim
    idx[axis] = slice(start, stop)
    return tuple(idx)


def d1(F, k, h, ndim):
    """First derivative along grid axis ``k`` (margin +1)."""
    ax = _axis(F, k, ndim)
    m = F.shape[ax]
    out = np.full(F.shape, np.nan)
    out[_sl(F, ax, 1, m - 1)] = (F[_sl(F, ax, 2, m)] - F[_sl(F, ax, 0, m - 2)]) / (2.0 * h)
    return out


def d2(F, k, h, ndim):
    """Compact second derivative along grid axis ``k`` (margin +1)."""
    ax = _axis(F, k, ndim)
    m = F.shape[ax]
    out = np.full(F.shape, np.nan)
    out[_sl(F, ax, 1, m - 1)] = (
        F[_sl(F, ax, 2, m)] - 2.0 * F[_sl(F, ax, 1, m - 1)] + F[_sl(F, ax, 0, m - 2)]
    ) / (h * h)
    return out


def dmixed(F, k, l, hk, hl, ndim):
    """Mixed derivative from the four-point cross stencil (margin +1)."""
    return d1(d1(F, k, hk, ndim), l, hl, ndim)


def mask(F, margin, ndim):
    """Return a copy of ``F`` with a NaN band of width ``margin`` on every grid face."""
    out = np.array(F, dtype=float, copy=True)
    if margin <= 0:
        return out
    for k in range(ndim):
        ax = _axis(out, k, ndim)
        m = out.shape[ax]
        out[_sl(out, ax, 0, margin)] = np.nan
        out[_sl(out, ax, max(m - margin, 0), m)] = np.nan
    return out


def crop(F, margin, ndim):
    idx = [slice(None)] * (F.ndim - ndim) + [slice(margin, s - margin) for s in F.shape[F.ndim - ndim:]]
    return F[tuple(idx)]
