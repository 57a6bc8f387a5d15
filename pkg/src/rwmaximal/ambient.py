"""Curvature of the ambient spacetime ``-dt^2 + f(t)^2 |dx|^2``.

Vectors are given by ambient components with the time component first, so an
array of shape ``(n + 1, ...)`` holds one vector per trailing index.  With
``h = f'/f`` and ``q = (log f)''`` the curvature tensor of the flat-fiber
model is

    g(R(X,Y)Z, W) = h^2 (<Y,Z><X,W> - <X,Z><Y,W>)
                    - q (w(Y)w(Z)<X,W> - w(X)w(Z)<Y,W> + <Y,Z>w(X)w(W) - <X,Z>w(Y)w(W))

where ``w = <., d_t>`` and ``R(X,Y) = [D_X, D_Y] - D_[X,Y]``.
"""

from __future__ import annotations

import numpy as np

from .warp import Spacetime

__all__ = [
    "inner",
    "ambient_ricci",
    "ambient_riemann",
    "christoffel",
    "riemann_components",
]


def _fh(st: Spacetime, t):
    j = st.jet(t)
    h = j.d1 / j.v
    return j, h, j.d2 / j.v - h * h


def inner(st: Spacetime, t, X, Y):
    """Lorentzian product of two ambient vectors at time(s) ``t``."""
    f = st.f(t)
    return -X[0] * Y[0] + f * f * np.sum(X[1:] * Y[1:], axis=0)


def ambient_ricci(st: Spacetime, t, X, Y):
    """Ricci tensor of the spacetime applied to ``(X, Y)``.

    Ric(d_t, d_t) = -n f''/f, Ric(d_i, d_j) = (f f'' + (n-1) f'^2) delta_ij,
    mixed components vanish.
    """
    n = st.n
    j = st.jet(t)
    r_tt = -n * j.d2 / j.v
    r_ss = j.v * j.d2 + (n - 1) * j.d1 * j.d1
    return r_tt * X[0] * Y[0] + r_ss * np.sum(X[1:] * Y[1:], axis=0)


def ambient_riemann(st: Spacetime, t, X, Y, Z, W):
    """``g(R(X,Y)Z, W)`` from the closed form in the module docstring."""
    _, h, q = _fh(st, t)
    f = st.f(t)

    def ip(a, b):
        return -a[0] * b[0] + f * f * np.sum(a[1:] * b[1:], axis=0)

    wX, wY, wZ, wW = -X[0], -Y[0], -Z[0], -W[0]
    yz, xw, xz, yw = ip(Y, Z), ip(X, W), ip(X, Z), ip(Y, W)
    return (h * h * (yz * xw - xz * yw)
            - q * (wY * wZ * xw - wX * wZ * yw + yz * wX * wW - xz * wY * wW))


def christoffel(st: Spacetime, t: float):
    """Christoffel symbols ``G[a, b, c]`` = Gamma^a_{bc} and their t-derivatives."""
    n = st.n
    j = st.jet(t)
    f, f1, f2 = j.v, j.d1, j.d2
    G = np.zeros((n + 1,) * 3)
    dG = np.zeros((n + 1,) * 3)
    for i in range(1, n + 1):
        G[0, i, i] = f * f1
        dG[0, i, i] = f1 * f1 + f * f2
        G[i, 0, i] = G[i, i, 0] = f1 / f
        dG[i, 0, i] = dG[i, i, 0] = f2 / f - (f1 / f) ** 2
    return G, dG


def riemann_components(st: Spacetime, t: float):
    """``R[a, b, c, d]`` with R(d_c, d_d) d_b = R^a_{bcd} d_a, built from the Christoffels.

    Independent of :func:`ambient_riemann`; used to validate it.
    """
    n1 = st.n + 1
    G, dG = christoffel(st, t)
    # only d/dt of Gamma is nonzero
    dGam = np.zeros((n1,) * 4)  # dGam[c, a, d, b] = d_c Gamma^a_{db}
    dGam[0] = dG
    R = (np.einsum("cadb->abcd", dGam) - np.einsum("dacb->abcd", dGam)
         + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))
    return R
