"""Spacelike graphs ``t = u(x)`` over a box in the flat fiber.

Everything is discretized with centered second-order differences on a
uniform grid.  Derived fields keep the full grid shape and carry NaN on the
boundary band their stencils cannot reach; :class:`DiscreteField` records
the band width so reductions only ever see interior nodes.

Sign conventions: the unit normal ``N`` is future pointing, the shape
operator is ``A X = -D_X N`` and ``H = -trace(A)/n``.  With these choices a
slice ``t = t0`` has ``H = f'(t0)/f(t0)`` and the upper hyperboloid
``t = sqrt(a^2 + |x|^2)`` in Minkowski space has ``H = +1/a``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import _fd
from .ambient import ambient_ricci, ambient_riemann
from .expr import WarpExpr, eval_jet2, evaluate, parse, EvalError
from .warp import Interval, SamplerConfig, Spacetime, check_ncc, criterion_value

__all__ = [
    "HypersurfaceError",
    "NotSpacelikeError",
    "OutsideIntervalError",
    "StencilError",
    "NotMaximalError",
    "NCCViolatedError",
    "DiscreteField",
    "FrameData",
    "GraphHypersurface",
    "MeanCurvature",
    "IdentityCheck",
    "Lemma1Check",
    "parse_box",
    "graph_variables",
    "make_graph",
    "hyperbolic_angle",
    "gradient_norm2",
    "laplace_beltrami",
    "shape_operator",
    "mean_curvature",
    "ambient_ricci",
    "ricci_kt_n",
    "covariant_hessian",
    "verify_hessian_identity",
    "verify_lemma1",
    "intrinsic_ricci",
    "ricci_tensor",
    "ricci_tensor_from_metric",
    "ricci_bound_slack",
    "tangent_norm2",
    "tau_range",
]

MIN_RES = 5


class HypersurfaceError(ValueError):
    pass


class NotSpacelikeError(HypersurfaceError):
    def __init__(self, index, point, margin):
        self.index, self.point, self.margin = index, point, margin
        super().__init__(
            f"graph is not spacelike at node {index} (x = {point}): f(u)^2 - |Du|^2 = {margin:.6g}")


class OutsideIntervalError(HypersurfaceError):
    def __init__(self, index, point, value, interval):
        self.index, self.point, self.value = index, point, value
        super().__init__(f"u = {value:.6g} at node {index} (x = {point}) lies outside {interval}")


class StencilError(HypersurfaceError):
    pass


class NotMaximalError(HypersurfaceError):
    def __init__(self, max_abs_h, tol):
        self.max_abs_h, self.tol = max_abs_h, tol
        super().__init__(f"graph is not maximal: max |H| = {max_abs_h:.6g} exceeds {tol:.6g}")


class NCCViolatedError(HypersurfaceError):
    def __init__(self, verdict, region):
        self.verdict, self.region = verdict, region
        super().__init__(
            f"null convergence condition is {verdict.status} on the graph's range {region}"
            f" (worst (log f)'' = {verdict.margin:.6g} at t = {verdict.witness})")


# --------------------------------------------------------------------------
# Containers
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Grid data with a NaN boundary band of width ``margin``.

    ``data`` may carry leading component axes; the last ``len(spacing)``
    axes are the grid.
    """

    data: np.ndarray
    margin: int
    spacing: tuple

    @property
    def ndim(self) -> int:
        return len(self.spacing)

    @property
    def values(self) -> np.ndarray:
        """Values at the nodes that have a full stencil."""
        return _fd.crop(self.data, self.margin, self.ndim)

    def max(self) -> float:
        return float(np.max(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def argmax_abs(self):
        v = np.abs(self.values)
        idx = np.unravel_index(int(np.argmax(v)), v.shape)
        return tuple(int(i) + self.margin for i in idx[-self.ndim:])

    def __sub__(self, other: "DiscreteField") -> "DiscreteField":
        return DiscreteField(self.data - other.data, max(self.margin, other.margin), self.spacing)

    def abs(self) -> "DiscreteField":
        return DiscreteField(np.abs(self.data), self.margin, self.spacing)


@dataclass(frozen=True, eq=False)
class FrameData:
    """Per-node frame of the graph (margin 1, from the centered gradient).

    ``tangent[i]`` holds the ambient components of ``e_i = d_i + u_i d_t``
    and ``normal`` those of the future unit normal, time component first.
    """

    tangent: np.ndarray   # (n, n+1, *grid)
    normal: np.ndarray    # (n+1, *grid)
    metric: np.ndarray    # (n, n, *grid)
    metric_inv: np.ndarray
    sqrt_det: np.ndarray
    cosh: np.ndarray


@dataclass(frozen=True, eq=False)
class GraphHypersurface:
    """The graph of ``u`` over ``box`` with ``res[i]`` nodes along axis ``i``.

    Build instances with :func:`make_graph`, which validates the invariants.
    ``exact_du`` optionally holds an analytic gradient used as an
    independent reference by :func:`ricci_kt_n`.
    """

    st: Spacetime
    box: tuple
    res: tuple
    u: np.ndarray
    exact_du: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.res)

    @cached_property
    def spacing(self) -> tuple:
        return tuple((b - a) / (m - 1) for (a, b), m in zip(self.box, self.res))

    @property
    def h(self) -> float:
        return max(self.spacing)

    @cached_property
    def axes(self) -> list:
        return [np.linspace(a, b, m) for (a, b), m in zip(self.box, self.res)]

    @cached_property
    def coords(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes, indexing="ij"))

    def field(self, data, margin) -> DiscreteField:
        return DiscreteField(data, margin, self.spacing)

    @cached_property
    def jet(self):
        return self.st.jet(self.u)

    @cached_property
    def du(self) -> np.ndarray:
        return np.stack([_fd.d1(self.u, k, hk, self.n) for k, hk in enumerate(self.spacing)])

    @cached_property
    def du2(self) -> np.ndarray:
        return np.sum(self.du ** 2, axis=0)

    @cached_property
    def spacelike_margin(self) -> DiscreteField:
        """``f(u)^2 - |Du|^2`` in the flat fiber norm."""
        return self.field(self.jet.v ** 2 - self.du2, 1)

    @cached_property
    def frame(self) -> FrameData:
        n, f, D = self.n, self.jet.v, self.du
        f2 = f * f
        w2 = f2 - self.du2
        eye = np.eye(n).reshape((n, n) + (1,) * n)
        DD = D[:, None] * D[None, :]
        metric = f2 * eye - DD
        metric_inv = (eye + DD / w2) / f2
        cosh = f / np.sqrt(w2)
        normal = np.concatenate([cosh[None], cosh * D / f2])
        tangent = np.concatenate([D[:, None], np.broadcast_to(eye, (n, n) + self.u.shape)], axis=1)
        return FrameData(tangent, normal, metric, metric_inv, f ** (n - 1) * np.sqrt(w2), cosh)

    @cached_property
    def sinh2(self) -> np.ndarray:
        return self.du2 / (self.jet.v ** 2 - self.du2)

    def grad_tau(self) -> np.ndarray:
        """Tangent components of the intrinsic gradient of ``tau = u``."""
        return np.einsum("ij...,j...->i...", self.frame.metric_inv, self.du)


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------

_BOX_RE = re.compile(r"\s*[x×]\s*(?=[\[(])")


def parse_box(text: str) -> tuple:
    """Parse ``"[a1,b1]x[a2,b2]x..."`` into a tuple of ``(a, b)`` pairs."""
    from .warp import parse_interval

    parts = _BOX_RE.split(text.strip())
    box = []
    for part in parts:
        iv = parse_interval(part)
        if not (np.isfinite(iv.lo) and np.isfinite(iv.hi)) or iv.hi <= iv.lo:
            raise HypersurfaceError(f"box side {part!r} must be a finite interval with a < b")
        box.append((iv.lo, iv.hi))
    return tuple(box)


def graph_variables(n: int) -> tuple:
    return tuple(f"x_{i + 1}" for i in range(n))


def _node_point(coords, idx):
    return tuple(float(c[idx]) for c in coords)


def _exact_gradient(expr: WarpExpr, coords, bindings):
    names = graph_variables(len(coords))
    env = {**bindings, **dict(zip(names, coords))}
    out = []
    for k, name in enumerate(names):
        others = {key: v for key, v in env.items() if key != name}
        out.append(np.broadcast_to(eval_jet2(expr, coords[k], others, wrt=name).d1, coords[k].shape))
    return np.stack(out)


def make_graph(st: Spacetime, box, res, u_source) -> GraphHypersurface:
    """Build and validate the graph of ``u_source`` over ``box``.

    ``box`` is a sequence of ``(a, b)`` pairs (or a string accepted by
    :func:`parse_box`); its length must equal ``st.n``.  ``res`` is an int or
    one int per axis, each at least 5.  ``u_source`` is an expression in
    ``x_1..x_n`` (string or parsed) or an array of node values.

    Raises :class:`OutsideIntervalError` if some node value leaves the
    interval of ``st`` and :class:`NotSpacelikeError` (worst node and
    margin) if ``|Du| < f(u)`` fails at an interior node.
    """
    if isinstance(box, str):
        box = parse_box(box)
    box = tuple((float(a), float(b)) for a, b in box)
    n = len(box)
    if n != st.n:
        raise HypersurfaceError(f"box has {n} axes but the spacetime has n = {st.n}")
    if any(not b > a for a, b in box):
        raise HypersurfaceError("every box side needs a < b")
    res = (int(res),) * n if np.ndim(res) == 0 else tuple(int(r) for r in res)
    if len(res) != n:
        raise HypersurfaceError(f"need {n} resolutions, got {len(res)}")
    if min(res) < MIN_RES:
        raise StencilError(f"resolution must be at least {MIN_RES} nodes per axis, got {res}")

    probe = GraphHypersurface(st, box, res, np.zeros(res))
    coords = probe.coords
    exact = None
    if isinstance(u_source, (str, WarpExpr)):
        expr = u_source if isinstance(u_source, WarpExpr) else parse(
            u_source, variables=graph_variables(n), params=st.bindings.keys())
        env = {**st.bindings, **dict(zip(graph_variables(n), coords))}
        u = np.broadcast_to(np.asarray(evaluate(expr, env), dtype=float), res).copy()
        try:
            exact = _exact_gradient(expr, coords, st.bindings)
        except EvalError:
            exact = None
    else:
        u = np.asarray(u_source, dtype=float)
        if u.shape != res:
            raise HypersurfaceError(f"node array has shape {u.shape}, expected {res}")
        u = u.copy()
    if not np.all(np.isfinite(u)):
        raise HypersurfaceError("graph values must be finite")

    iv = st.interval
    inside = np.vectorize(lambda v: v in iv)(u) if u.size else np.ones(0, bool)
    if not np.all(inside):
        idx = np.unravel_index(int(np.flatnonzero(~inside)[0]), res)
        raise OutsideIntervalError(idx, _node_point(coords, idx), float(u[idx]), iv)
    st.check_positive(u)

    gh = GraphHypersurface(st, box, res, u, exact)
    margin = gh.spacelike_margin
    vals = margin.values
    worst = np.unravel_index(int(np.argmin(vals)), vals.shape)
    if not vals[worst] > 0:
        idx = tuple(int(i) + 1 for i in worst)
        raise NotSpacelikeError(idx, _node_point(coords, idx), float(vals[worst]))
    return gh


# --------------------------------------------------------------------------
# First-order quantities
# --------------------------------------------------------------------------


def hyperbolic_angle(gh: GraphHypersurface):
    """``(cosh(phi), sinh(phi)^2)`` with ``cosh = -<N, d_t>``."""
    return gh.field(gh.frame.cosh, 1), gh.field(gh.sinh2, 1)


def gradient_norm2(gh: GraphHypersurface) -> DiscreteField:
    """``g^{ij} u_i u_j``, the squared length of the intrinsic gradient of tau."""
    return gh.field(np.einsum("ij...,i...,j...->...", gh.frame.metric_inv, gh.du, gh.du), 1)


def _as_field(gh, field) -> DiscreteField:
    if isinstance(field, DiscreteField):
        return field
    arr = np.broadcast_to(np.asarray(field, dtype=float), gh.res)
    return gh.field(np.array(arr), 0)


def laplace_beltrami(gh: GraphHypersurface, field) -> DiscreteField:
    """``|g|^{-1/2} d_i(|g|^{1/2} g^{ij} d_j phi)`` by nested centered differences.

    ``field`` is a :class:`DiscreteField` or an array of node values.  The
    result loses two more nodes on each face.
    """
    fld = _as_field(gh, field)
    margin = max(fld.margin, 0) + 2
    if 2 * margin >= min(gh.res):
        raise StencilError(f"grid {gh.res} too small for a Laplacian at margin {margin}")
    n, sp, fr = gh.n, gh.spacing, gh.frame
    grad = np.stack([_fd.d1(fld.data, k, sp[k], n) for k in range(n)])
    flux = fr.sqrt_det * np.einsum("ij...,j...->i...", fr.metric_inv, grad)
    div = sum(_fd.d1(flux[i], i, sp[i], n) for i in range(n))
    return gh.field(_fd.mask(div / fr.sqrt_det, margin, n), margin)


# --------------------------------------------------------------------------
# Second fundamental form
# --------------------------------------------------------------------------


def _shape_matrix(gh: GraphHypersurface) -> np.ndarray:
    """``A[j, i]``: component ``j`` of ``A(e_i)`` (margin 2)."""
    n, sp, fr = gh.n, gh.spacing, gh.frame
    j = gh.jet
    f, f1 = j.v, j.d1
    hub = f1 / f
    N = fr.normal
    D = gh.du
    W = np.stack([np.stack([_fd.d1(N[a], i, sp[i], n) for a in range(n + 1)]) for i in range(n)])
    # W[i, a]: ambient component a of the covariant derivative of N along e_i
    W[:, 0] += f * f1 * N[1:]
    for i in range(n):
        W[i, 1:] += hub * D[i] * N[1:]
        W[i, 1 + i] += hub * N[0]
    # tangential projection V + <V, N> N
    vn = -W[:, 0] * N[0] + f * f * np.sum(W[:, 1:] * N[1:], axis=1)
    P = W + vn[:, None] * N[None]
    return -np.moveaxis(P[:, 1:], 0, 1)


def shape_operator(gh: GraphHypersurface) -> DiscreteField:
    """Matrix of the shape operator in the coordinate frame, ``A[j, i] = (A e_i)^j``."""
    return gh.field(_shape_matrix(gh), 2)


@dataclass(frozen=True, eq=False)
class MeanCurvature:
    H: DiscreteField
    H_laplacian: DiscreteField
    residual: DiscreteField

    def max_abs(self) -> float:
        return self.H.max_abs()


def mean_curvature(gh: GraphHypersurface) -> MeanCurvature:
    """Mean curvature from the trace of ``A`` and, independently, from the Laplacian of tau.

    The second route uses ``n H cosh = Lap(tau) + (f'/f)(n + |grad tau|^2)``.
    The residual is ``|H - H_laplacian|`` on the nodes where both exist.
    """
    n = gh.n
    A = _shape_matrix(gh)
    H = -np.trace(A, axis1=0, axis2=1) / n
    lap = laplace_beltrami(gh, gh.u)
    hub = gh.jet.d1 / gh.jet.v
    H_lap = (lap.data + hub * (n + gh.sinh2)) / (n * gh.frame.cosh)
    res = np.abs(_fd.mask(H, 2, n) - H_lap)
    return MeanCurvature(gh.field(_fd.mask(H, 2, n), 2), gh.field(H_lap, 2), gh.field(res, 2))


# --------------------------------------------------------------------------
# Identity checks
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IdentityCheck:
    lhs: DiscreteField
    rhs: DiscreteField
    residual: DiscreteField

    def max_residual(self) -> float:
        return self.residual.max_abs()


def _check(gh, lhs, rhs, margin) -> IdentityCheck:
    lhs = _fd.mask(lhs, margin, gh.n)
    rhs = _fd.mask(rhs, margin, gh.n)
    return IdentityCheck(gh.field(lhs, margin), gh.field(rhs, margin), gh.field(np.abs(lhs - rhs), margin))


def _tangent_to_ambient(gh, c):
    """Ambient components of the tangent vector ``sum c_i e_i``."""
    return np.concatenate([np.sum(c * gh.du, axis=0)[None], c])


def ricci_kt_n(gh: GraphHypersurface) -> IdentityCheck:
    """``Ric(K^T, N)`` for ``K = f d_t`` against ``(n-1) f cosh sinh^2 (log f)''``.

    The left side contracts the ambient Ricci tensor with the discrete frame
    (``K^T = -f grad tau``).  The right side uses the analytic gradient when
    the graph came from an expression, so the residual measures the
    discretization error of the frame.
    """
    n, j = gh.n, gh.jet
    f = j.v
    kt = _tangent_to_ambient(gh, -f * gh.grad_tau())
    lhs = ambient_ricci(gh.st, gh.u, kt, gh.frame.normal)
    D = gh.du if gh.exact_du is None else gh.exact_du
    s = np.sum(D ** 2, axis=0)
    w2 = f * f - s
    cosh, sinh2 = f / np.sqrt(w2), s / w2
    q = j.d2 / f - (j.d1 / f) ** 2
    rhs = (n - 1) * f * cosh * sinh2 * q
    return _check(gh, lhs, rhs, 1)


def _metric_christoffel(gh) -> np.ndarray:
    """``G[k, i, j]`` = Gamma^k_ij of the induced metric, from differences of ``g`` (margin 2)."""
    n, sp, g = gh.n, gh.spacing, gh.frame.metric
    dg = np.stack([_fd.d1(g, l, sp[l], n) for l in range(n)])  # dg[l, i, j] = d_l g_ij
    low = 0.5 * (np.einsum("ijl...->lij...", dg) + np.einsum("jil...->lij...", dg) - dg)
    # low[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return np.einsum("kl...,lij...->kij...", gh.frame.metric_inv, low)


def covariant_hessian(gh: GraphHypersurface) -> DiscreteField:
    """``u_ij - Gamma^k_ij u_k`` (margin 2)."""
    n, sp, u = gh.n, gh.spacing, gh.u
    hess = np.empty((n, n) + u.shape)
    for i in range(n):
        hess[i, i] = _fd.d2(u, i, sp[i], n)
        for k in range(i + 1, n):
            hess[i, k] = hess[k, i] = _fd.dmixed(u, i, k, sp[i], sp[k], n)
    G = _metric_christoffel(gh)
    return gh.field(hess - np.einsum("kij...,k...->ij...", G, gh.du), 2)


def verify_hessian_identity(gh: GraphHypersurface) -> IdentityCheck:
    """Trace norm of the Hessian of tau against its expression through ``A``.

    |Hess tau|^2 = h^2 (n - 1 + cosh^4) + cosh^2 tr(A^2) + 2 h cosh (g(AT, T) + tr A)

    with ``h = f'/f`` and ``T = grad tau``.  The ``tr A`` term vanishes on
    maximal graphs; keeping it makes the identity hold on any graph.
    """
    n, fr = gh.n, gh.frame
    gi = fr.metric_inv
    Hs = covariant_hessian(gh).data
    lhs = np.einsum("ia...,jb...,ij...,ab...->...", gi, gi, Hs, Hs)
    A = _shape_matrix(gh)
    T = gh.grad_tau()
    hub = gh.jet.d1 / gh.jet.v
    cosh = fr.cosh
    trA = np.trace(A, axis1=0, axis2=1)
    trA2 = np.einsum("ij...,ji...->...", A, A)
    AT = np.einsum("ji...,i...->j...", A, T)
    gATT = np.einsum("jk...,j...,k...->...", fr.metric, AT, T)
    rhs = hub ** 2 * (n - 1 + cosh ** 4) + cosh ** 2 * trA2 + 2 * hub * cosh * (gATT + trA)
    return _check(gh, lhs, rhs, 2)


# --------------------------------------------------------------------------
# Intrinsic curvature
# --------------------------------------------------------------------------


def _ambient_trace(gh) -> np.ndarray:
    """``S_ij = g^{kl} <R(e_i, e_k) e_l, e_j>`` from the ambient curvature tensor (margin 1)."""
    n, fr = gh.n, gh.frame
    E = fr.tangent
    S = np.zeros((n, n) + gh.u.shape)
    for i in range(n):
        for jj in range(i, n):
            acc = 0.0
            for k in range(n):
                for l in range(n):
                    acc = acc + fr.metric_inv[k, l] * ambient_riemann(gh.st, gh.u, E[i], E[k], E[l], E[jj])
            S[i, jj] = S[jj, i] = acc
    return S


def ricci_tensor(gh: GraphHypersurface, sign: int = 1) -> DiscreteField:
    """Ricci tensor ``Ric_ij`` of the induced metric through the Gauss equation (margin 2).

    Ric(X, Y) = S(X, Y) - tr(A) g(AX, Y) + g(AX, AY), where ``S`` is the
    tangential trace of the ambient curvature.  ``sign=-1`` flips the sign of
    the second fundamental form terms; it exists only as a negative control.
    """
    fr = gh.frame
    A = _shape_matrix(gh)
    g = fr.metric
    trA = np.trace(A, axis1=0, axis2=1)
    gA = np.einsum("kj...,ki...->ij...", g, A)          # g(A e_i, e_j)
    gAA = np.einsum("kl...,ki...,lj...->ij...", g, A, A)  # g(A e_i, A e_j)
    ric = _ambient_trace(gh) + sign * (-trA * gA + gAA)
    return gh.field(_fd.mask(ric, 2, gh.n), 2)


def _tangent_field(gh, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape == (gh.n,):
        Y = Y.reshape((gh.n,) + (1,) * gh.n)
    return np.broadcast_to(Y, (gh.n,) + gh.res)


def intrinsic_ricci(gh: GraphHypersurface, Y, sign: int = 1) -> DiscreteField:
    """``Ric(Y, Y)`` for a tangent field with coordinate components ``Y`` (shape ``(n,)`` or ``(n, *res)``)."""
    Y = _tangent_field(gh, Y)
    ric = ricci_tensor(gh, sign)
    return gh.field(np.einsum("ij...,i...,j...->...", ric.data, Y, Y), 2)


def tangent_norm2(gh: GraphHypersurface, Y) -> np.ndarray:
    Y = _tangent_field(gh, Y)
    return np.einsum("ij...,i...,j...->...", gh.frame.metric, Y, Y)


def ricci_tensor_from_metric(gh: GraphHypersurface) -> DiscreteField:
    """Ricci tensor from differences of the induced metric alone (margin 3).

    Independent of the ambient geometry; used to cross-check :func:`ricci_tensor`.
    """
    n, sp = gh.n, gh.spacing
    G = _metric_christoffel(gh)
    dG = np.stack([_fd.d1(G, c, sp[c], n) for c in range(n)])  # dG[c, a, d, b] = d_c G^a_db
    ric = (np.einsum("aadb...->db...", dG) - np.einsum("daab...->db...", dG)
           + np.einsum("aae...,edb...->db...", G, G) - np.einsum("ade...,eab...->db...", G, G))
    return gh.field(_fd.mask(ric, 3, n), 3)


def ricci_bound_slack(gh: GraphHypersurface) -> DiscreteField:
    """Smallest eigenvalue of ``Ric - (n-1) h^2 g`` relative to ``g`` at each node.

    Nonnegative exactly when ``Ric(Y, Y) >= (n-1)/n^2 div(d_t)^2 |Y|^2`` for all ``Y``.
    """
    n = gh.n
    hub = gh.jet.d1 / gh.jet.v
    ric = ricci_tensor(gh).data
    M = np.einsum("ik...,kj...->ij...", gh.frame.metric_inv, ric - (n - 1) * hub ** 2 * gh.frame.metric)
    Mv = np.moveaxis(M, (0, 1), (-2, -1))
    out = np.full(gh.res, np.nan)
    inner = tuple(slice(2, m - 2) for m in gh.res)
    out[inner] = np.min(np.linalg.eigvals(Mv[inner]).real, axis=-1)
    return gh.field(out, 2)


# --------------------------------------------------------------------------
# sinh^2 subharmonicity inequality
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Lemma1Check:
    lhs: DiscreteField
    rhs: DiscreteField
    min_slack: float
    max_abs_h: float


def tau_range(gh: GraphHypersurface) -> Interval:
    return Interval(float(np.min(gh.u)), float(np.max(gh.u)), False, False)


def verify_lemma1(gh: GraphHypersurface, maximality_tol: Optional[float] = None,
                  config: Optional[SamplerConfig] = None) -> Lemma1Check:
    """Check ``1/2 Lap(sinh^2) >= criterion(tau) sinh^4`` on a maximal graph.

    ``maximality_tol`` defaults to ``10 h^2``.  Raises
    :class:`NotMaximalError` when ``max |H|`` exceeds it and
    :class:`NCCViolatedError` unless ``(log f)'' <= 0`` is certified on the
    range of tau.
    """
    tol = 10.0 * gh.h ** 2 if maximality_tol is None else maximality_tol
    max_h = mean_curvature(gh).max_abs()
    if not max_h <= tol:
        raise NotMaximalError(max_h, tol)
    region = tau_range(gh)
    verdict = check_ncc(gh.st, region, config)
    if verdict.status != "holds":
        raise NCCViolatedError(verdict, region)
    s2 = gh.field(gh.sinh2, 1)
    lap = laplace_beltrami(gh, s2)
    lhs = 0.5 * lap.data
    rhs = _fd.mask(criterion_value(gh.st, gh.u) * gh.sinh2 ** 2, lap.margin, gh.n)
    slack = gh.field(lhs - rhs, lap.margin)
    return Lemma1Check(gh.field(lhs, lap.margin), gh.field(rhs, lap.margin), slack.min(), max_h)
