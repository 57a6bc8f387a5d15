"""Rotationally symmetric maximal graphs ``t = u(|x|)``.

Setting the mean curvature to zero in the Laplacian identity for tau and
writing ``W^2 = f(u)^2 - u'^2`` gives

    u'' = f' u'^2 / f - n f' W^2 / f - (n - 1) W^2 u' / (r f^2)

with the regular limit ``u''(0) = -f f'`` when ``u'(0) = 0``.  In Minkowski
space this is ``(r^(n-1) u' / sqrt(1 - u'^2))' = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .hypersurface import GraphHypersurface, HypersurfaceError, make_graph
from .warp import Spacetime

__all__ = [
    "RadialIntegrationError",
    "RadialProfile",
    "radial_rhs",
    "integrate_radial",
    "radial_maximal_graph",
]


class RadialIntegrationError(HypersurfaceError):
    def __init__(self, status: str, r_stop: float, message: str):
        self.status, self.r_stop = status, r_stop
        super().__init__(f"radial integration stopped at r = {r_stop:.6g} ({status}): {message}")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Outcome of one radial integration.

    ``status`` is ``"completed"``, ``"left-interval"``, ``"lost-spacelike"``
    or ``"failed"`` (step budget or solver failure).
    """

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    status: str
    r_stop: float
    message: str
    solution: object = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def __call__(self, r):
        """``(u(r), u'(r))`` from the dense output."""
        y = self.solution(np.asarray(r, dtype=float))
        return y[0], y[1]


def radial_rhs(st: Spacetime, n: int):
    def rhs(r, y):
        u, p = y
        j = st.jet(u)
        f, f1 = j.v, j.d1
        w2 = f * f - p * p
        if r == 0.0:
            return [p, -f * f1]
        return [p, f1 * p * p / f - n * f1 * w2 / f - (n - 1) * w2 * p / (r * f * f)]
    return rhs


def integrate_radial(st: Spacetime, n: int, r_max: float, u0: float, *, r_start: float = 0.0,
                     slope_start: float = 0.0, rtol: float = 1e-11, atol: float = 1e-13,
                     eps: float = 1e-10, max_steps: int = 100_000) -> RadialProfile:
    """Integrate the radial maximal equation from ``r_start`` to ``r_max``.

    Uses an adaptive 4/5 Runge-Kutta pair with terminal events for ``u``
    reaching the ends of the interval and for ``f(u)^2 - u'^2 <= eps``.
    Starting at ``r_start = 0`` requires ``slope_start = 0``.
    """
    if r_start == 0.0 and slope_start != 0.0:
        raise ValueError("a nonzero initial slope needs r_start > 0")
    if not r_max > r_start:
        raise ValueError("r_max must exceed r_start")
    iv = st.interval
    if u0 not in iv:
        raise ValueError(f"u0 = {u0} lies outside {iv}")

    events = []
    names = []

    def spacelike(r, y):
        return float(st.f(y[0])) ** 2 - y[1] ** 2 - eps
    spacelike.terminal = True
    events.append(spacelike)
    names.append("lost-spacelike")
    for end, sgn in ((iv.lo, 1.0), (iv.hi, -1.0)):
        if math.isfinite(end):
            def edge(r, y, end=end, sgn=sgn):
                return sgn * (y[0] - end)
            edge.terminal = True
            events.append(edge)
            names.append("left-interval")

    rhs = radial_rhs(st, n)
    steps = [0]

    def counted(r, y):
        steps[0] += 1
        if steps[0] > max_steps:
            raise _Budget()
        if not np.all(np.isfinite(y)):
            raise _Budget()
        # trial stages may overshoot an interval end; the edge event catches it
        with np.errstate(all="ignore"):
            out = rhs(r, y)
        if not np.all(np.isfinite(out)):
            raise _Budget()
        return out

    try:
        sol = solve_ivp(counted, (r_start, r_max), [u0, slope_start], method="RK45",
                        rtol=rtol, atol=atol, events=events, dense_output=True)
    except _Budget:
        return RadialProfile(np.array([r_start]), np.array([u0]), np.array([slope_start]),
                             "failed", r_start, "step budget exceeded or state left the domain")
    except Exception as exc:  # evaluation failure inside the solver
        return RadialProfile(np.array([r_start]), np.array([u0]), np.array([slope_start]),
                             "failed", r_start, str(exc))

    status, message = "completed", sol.message
    if sol.status == 1:
        for name, te in zip(names, sol.t_events):
            if len(te):
                status, message = name, f"event at r = {te[0]:.6g}"
                break
    elif sol.status != 0:
        status = "failed"
    return RadialProfile(sol.t, sol.y[0], sol.y[1], status, float(sol.t[-1]), message, sol.sol)


class _Budget(Exception):
    pass


def radial_maximal_graph(st: Spacetime, n: int, r_max: float, u0: float, resolution, *,
                         box=None, center=None, r_start: float = 0.0, slope_start: float = 0.0,
                         **kwargs) -> GraphHypersurface:
    """Maximal graph with ``u(r_start) = u0`` resampled onto a box grid.

    ``r`` is the distance to ``center`` (the origin by default).  The default
    box is the cube ``[-r_max/sqrt(n), r_max/sqrt(n)]^n`` so every node lies
    within ``r_max`` of the center.  With ``r_start > 0`` (catenoid-type
    profiles) the box must keep every node at distance at least ``r_start``.
    Raises :class:`RadialIntegrationError` if the integration stops early.
    """
    st = st.with_n(n) if st.n != n else st
    if box is None:
        half = r_max / math.sqrt(n)
        box = [(-half, half)] * n
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    prof = integrate_radial(st, n, r_max, u0, r_start=r_start, slope_start=slope_start, **kwargs)
    if not prof.completed:
        raise RadialIntegrationError(prof.status, prof.r_stop, prof.message)

    probe = make_graph(st, box, resolution, np.full(_res(resolution, n), float(u0)))
    X = probe.coords - center.reshape((n,) + (1,) * n)
    r = np.sqrt(np.sum(X ** 2, axis=0))
    if np.max(r) > r_max * (1 + 1e-12):
        raise HypersurfaceError(f"box reaches r = {np.max(r):.6g} beyond r_max = {r_max:.6g}")
    if np.min(r) < r_start * (1 - 1e-12):
        raise HypersurfaceError(f"box reaches r = {np.min(r):.6g} below r_start = {r_start:.6g}")
    r = np.clip(r, r_start, r_max)
    u, p = prof(r.ravel())
    u, p = u.reshape(r.shape), p.reshape(r.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r > 0, X / np.where(r > 0, r, 1.0), 0.0)
    gh = make_graph(st, box, resolution, u)
    return GraphHypersurface(gh.st, gh.box, gh.res, gh.u, p * unit)


def _res(resolution, n):
    return (int(resolution),) * n if np.ndim(resolution) == 0 else tuple(resolution)
