"""Robertson-Walker spacetimes ``I x_f R^n`` and everything derived from ``f`` alone.

All quantities here are functions of the 2-jet ``(f, f', f'')``.  Infima and
condition checks are certified by adaptive sampling with recursive refinement
around extrema.  That certification assumes the sampled function is smooth on
the scale of the initial grid; it is not interval arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .expr import EvalError, Jet2, ParseError, WarpExpr, eval_jet2, evaluate, parse

__all__ = [
    "Interval",
    "parse_interval",
    "SamplerConfig",
    "Spacetime",
    "PositivityError",
    "RegionError",
    "ConditionVerdict",
    "IntervalBound",
    "FluidState",
    "MaximalSlice",
    "ClassificationReport",
    "hubble",
    "log_f_second",
    "criterion_value",
    "fluid_state",
    "criterion_fluid_form",
    "infimum",
    "check_ncc",
    "energy_conditions",
    "maximal_slices",
    "classify",
]

EIGHT_PI = 8.0 * math.pi


class PositivityError(EvalError):
    """The warping function is not positive at a sampled time."""

    def __init__(self, t, value):
        self.t = t
        self.value = value
        super().__init__(f"warping function is not positive: f({t!r}) = {value!r}")


class RegionError(ValueError):
    """Malformed interval, or a region that does not fit inside the spacetime."""


# --------------------------------------------------------------------------
# Intervals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Real interval; ``lo_open``/``hi_open`` record bracket type."""

    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise RegionError(f"empty interval ({self.lo}, {self.hi})")
        if self.lo == self.hi and (self.lo_open or self.hi_open):
            raise RegionError("a single-point interval must be closed")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, t) -> bool:
        above = t > self.lo if self.lo_open else t >= self.lo
        below = t < self.hi if self.hi_open else t <= self.hi
        return bool(above and below)

    def contains_region(self, region: "Interval") -> bool:
        """True if ``region`` lies in the closure of self and avoids its open ends."""
        if region.lo < self.lo or region.hi > self.hi:
            return False
        if region.lo == self.lo and self.lo_open and not region.lo_open:
            return False
        if region.hi == self.hi and self.hi_open and not region.hi_open:
            return False
        return True

    def __str__(self) -> str:
        def fmt(v):
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return repr(float(v))

        return (("(" if self.lo_open else "[") + fmt(self.lo) + "," + fmt(self.hi)
                + (")" if self.hi_open else "]"))


def _split_top_level(text: str) -> list:
    depth, parts, start = 0, [], 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _endpoint(text: str, bindings: Mapping) -> float:
    s = text.strip()
    if s in ("inf", "+inf", "oo", "+oo"):
        return math.inf
    if s in ("-inf", "-oo"):
        return -math.inf
    expr = parse(s, variables=())
    try:
        return float(evaluate(expr, {k: float(v) for k, v in bindings.items()}))
    except EvalError as exc:
        raise RegionError(f"cannot evaluate interval endpoint {s!r}: {exc}") from None


def parse_interval(text: str, bindings: Mapping | None = None) -> Interval:
    """Parse ``"(-inf,inf)"``, ``"[a,b]"``, ``"(0,5]"`` and friends.

    Endpoints may be expressions in the spacetime parameters, e.g. ``"(-a,a)"``.
    """
    s = text.strip()
    if len(s) < 2 or s[0] not in "([" or s[-1] not in ")]":
        raise RegionError(f"interval {text!r} must look like '[a,b]' or '(a,b)'")
    parts = _split_top_level(s[1:-1])
    if len(parts) != 2:
        raise RegionError(f"interval {text!r} needs exactly two endpoints")
    bindings = bindings or {}
    lo, hi = (_endpoint(p, bindings) for p in parts)
    lo_open, hi_open = s[0] == "(", s[-1] == ")"
    if math.isinf(lo):
        lo_open = True
    if math.isinf(hi):
        hi_open = True
    return Interval(lo, hi, lo_open, hi_open)


# --------------------------------------------------------------------------
# Configuration and result types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling and tolerance knobs shared by every certified search."""

    samples: int = 401  # initial grid size
    depth: int = 20  # refinement levels (each halves the bracket)
    candidates: int = 5  # local minima refined per search
    tol: float = 1e-9  # condition margin tolerance
    root_tol: float = 1e-12
    vanish_tol: float = 1e-6  # |f'/f|, |f''/f| below this count as vanishing
    decay_tol: float = 1e-6  # endpoint limits below this count as zero
    endpoint_steps: int = 12
    endpoint_ratio: float = 0.5
    truncate: Optional[float] = None  # |t| bound replacing infinite region ends

    def __post_init__(self):
        if self.samples < 3:
            raise ValueError("samples must be at least 3")
        if self.endpoint_steps < 3:
            raise ValueError("endpoint_steps must be at least 3")
        if not 0 < self.endpoint_ratio < 1:
            raise ValueError("endpoint_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class IntervalBound:
    """Bracket ``[lower, upper]`` for the infimum of a sampled function.

    ``upper`` is an attained sample value.  ``lower`` subtracts the curvature
    based refinement estimate and folds in endpoint limits; the infimum is
    claimed to lie in ``[lower - tol, upper]``.
    ``endpoint_limits`` holds ``None`` where an endpoint is closed (not probed).
    """

    lower: float
    upper: float
    refined_to: float
    endpoint_limits: tuple = (None, None)
    argmin: Optional[float] = None
    converged: bool = True
    tol: float = 0.0

    @property
    def certified_positive(self) -> bool:
        return self.converged and self.lower - self.tol > 0


@dataclass(frozen=True)
class ConditionVerdict:
    status: str  # holds | fails | unknown
    witness: Optional[float]
    margin: float  # largest sampled value of the expression required to be <= 0


@dataclass(frozen=True)
class FluidState:
    rho: object
    p: object


@dataclass(frozen=True)
class MaximalSlice:
    t0: float
    kind: str  # max | min | degenerate


@dataclass
class ClassificationReport:
    ncc: ConditionVerdict
    wec: ConditionVerdict
    sec: ConditionVerdict
    dec: ConditionVerdict
    criterion_inf: IntervalBound
    div_abs_inf: IntervalBound
    maximal_slices: list
    verdict: str  # unique-slices | non-existence | inconclusive
    failure_mode: Optional[str] = None  # simultaneous-vanishing | endpoint-decay | other
    notes: list = field(default_factory=list)


# --------------------------------------------------------------------------
# Spacetime
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Spacetime:
    """The model ``I x_f R^n`` with warping function ``warp``."""

    warp: WarpExpr
    n: int = 3
    interval: Interval = Interval(-math.inf, math.inf)
    bindings: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"spatial dimension must be an integer >= 2, got {self.n}")
        extra = self.warp.free_variables() - {"t"}
        if extra:
            raise ValueError(f"warping function may only depend on t, found {sorted(extra)}")
        missing = set(self.warp.params) - set(self.bindings)
        if missing:
            raise ValueError(f"unbound parameters: {sorted(missing)}")
        object.__setattr__(self, "bindings", {k: float(v) for k, v in self.bindings.items()})

    @classmethod
    def from_strings(cls, f: str, interval: str = "(-inf,inf)", n: int = 3,
                     params: Mapping | None = None) -> "Spacetime":
        params = dict(params or {})
        return cls(parse(f), n, parse_interval(interval, params), params)

    def with_n(self, n: int) -> "Spacetime":
        return replace(self, n=n)

    def jet(self, t) -> Jet2:
        return eval_jet2(self.warp, t, self.bindings)

    def f(self, t):
        return self.jet(t).v

    def check_positive(self, t) -> None:
        """Raise :class:`PositivityError` unless f > 0 at every given time."""
        v = np.asarray(self.f(t))
        bad = ~(v > 0)
        if np.any(bad):
            ts = np.broadcast_to(np.asarray(t, dtype=float), v.shape)
            i = np.flatnonzero(bad)[0]
            raise PositivityError(float(ts.flat[i]), float(v.flat[i]))


# --------------------------------------------------------------------------
# Pointwise quantities (scalars or arrays)
# --------------------------------------------------------------------------


def _ratios(st: Spacetime, t):
    j = st.jet(t)
    return j.d1 / j.v, j.d2 / j.v


def hubble(st: Spacetime, t):
    """f'/f; the divergence of the comoving frame is ``n * hubble``."""
    return _ratios(st, t)[0]


def log_f_second(st: Spacetime, t):
    """(log f)'' = f''/f - (f'/f)^2."""
    h, q = _ratios(st, t)
    return q - h * h


def criterion_value(st: Spacetime, t):
    """(n+1)(f'/f)^2 - n f''/f."""
    h, q = _ratios(st, t)
    return (st.n + 1) * h * h - st.n * q


def fluid_state(st: Spacetime, t) -> FluidState:
    """Perfect-fluid density and pressure in geometrized units."""
    n = st.n
    h, q = _ratios(st, t)
    rho = 0.5 * n * (n - 1) * h * h / EIGHT_PI
    p = (-(n - 1) * q - 0.5 * (n - 1) * (n - 2) * h * h) / EIGHT_PI
    return FluidState(rho, p)


def criterion_fluid_form(st: Spacetime, t):
    """The criterion rebuilt from density and pressure."""
    n = st.n
    fl = fluid_state(st, t)
    return EIGHT_PI / (n - 1) * ((n * n + 2) / n * fl.rho + n * fl.p)


# --------------------------------------------------------------------------
# Sampling machinery
# --------------------------------------------------------------------------


def _span(region: Interval, cfg: SamplerConfig):
    lo, hi = region.lo, region.hi
    if math.isinf(lo) or math.isinf(hi):
        if cfg.truncate is None:
            raise RegionError(f"region {region} is unbounded; give an explicit truncation bound")
        T = float(cfg.truncate)
        lo = -T if math.isinf(lo) else lo
        hi = T if math.isinf(hi) else hi
        if not lo < hi:
            raise RegionError(f"truncation {T} leaves an empty region")
    return lo, hi


def _grid(region: Interval, lo: float, hi: float, samples: int) -> np.ndarray:
    if region.degenerate:
        return np.array([lo])
    ts = np.linspace(lo, hi, samples)
    keep = np.ones(samples, bool)
    keep[0] = not (region.lo_open and not math.isinf(region.lo))
    keep[-1] = not (region.hi_open and not math.isinf(region.hi))
    return ts[keep]


def _probes(region: Interval, lo: float, hi: float, cfg: SamplerConfig):
    """Geometric sequences approaching each open or infinite endpoint."""
    k = np.arange(1, cfg.endpoint_steps + 1)
    r = cfg.endpoint_ratio ** k
    out = [None, None]
    if region.degenerate:
        return out
    half = 0.5 * (hi - lo)
    if math.isinf(region.lo):
        out[0] = lo - max(abs(lo), 1.0) * (1.0 / r - 1.0)
    elif region.lo_open:
        out[0] = lo + half * r
    if math.isinf(region.hi):
        out[1] = hi + max(abs(hi), 1.0) * (1.0 / r - 1.0)
    elif region.hi_open:
        out[1] = hi - half * r
    return out


def _limit(values: np.ndarray) -> float:
    """Estimate the limit of a sequence sampled along a geometric approach."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        bad = v[~np.isfinite(v)][0]
        return float(bad) if not math.isnan(bad) else math.nan
    v1, v2, v3 = v[-3:]
    d1, d2 = v2 - v1, v3 - v2
    if abs(d2) <= 1e-14 * max(1.0, abs(v3)):
        return float(v3)
    if d1 == 0:
        return float(v3)
    r = d2 / d1
    if abs(r) >= 0.95:
        return math.copysign(math.inf, d2)
    # Aitken delta-squared extrapolation
    return float(v3 - d2 * d2 / (d2 - d1))


def _evaluate(fn, ts):
    vals = np.asarray(fn(ts), dtype=float)
    vals = np.broadcast_to(vals, np.shape(ts)).copy()
    if np.any(np.isnan(vals)):
        i = int(np.flatnonzero(np.isnan(vals))[0])
        raise EvalError(f"function is undefined at t = {float(ts[i])!r}")
    return vals


def _local_minima(vals: np.ndarray) -> np.ndarray:
    m = len(vals)
    if m == 1:
        return np.array([0])
    left = np.r_[np.inf, vals[:-1]]
    right = np.r_[vals[1:], np.inf]
    idx = np.flatnonzero((vals <= left) & (vals <= right))
    return idx[np.argsort(vals[idx], kind="stable")]


def _refine(fn, ts, vals, i, region_lo, region_hi, cfg, tol):
    """Zoom in on the discrete minimum at index ``i``.

    Returns (t, value, error estimate, spacing, converged).
    """
    m = len(ts)
    a, b = ts[max(i - 1, 0)], ts[min(i + 1, m - 1)]
    best_t, best_v = float(ts[i]), float(vals[i])
    spacing = (b - a) / 2 if m > 1 else 0.0
    est = 0.0
    for _ in range(cfg.depth):
        if b - a <= 4 * np.spacing(max(abs(a), abs(b), 1e-300)):
            break
        pts = np.linspace(a, b, 5)
        vs = _evaluate(fn, pts)
        j = int(np.argmin(vs))
        if vs[j] < best_v:
            best_t, best_v = float(pts[j]), float(vs[j])
        spacing = (b - a) / 4
        if 0 < j < 4:
            est = abs(vs[j - 1] - 2 * vs[j] + vs[j + 1]) / 8
        elif pts[j] in (region_lo, region_hi):
            est = 0.0  # minimum sits on a closed end of the region
        else:
            est = abs(vs[1] - vs[0]) if j == 0 else abs(vs[4] - vs[3])
        a, b = pts[max(j - 1, 0)], pts[min(j + 1, 4)]
        if est <= tol * 1e-3:
            break
    return best_t, best_v, est, spacing, est <= tol


def infimum(st: Spacetime, fn: Callable, region: Interval, tol: float | None = None,
            config: SamplerConfig | None = None) -> IntervalBound:
    """Certify the infimum of ``fn`` over ``region``.

    ``fn`` maps an array of times to an array of values.  Open endpoints are
    probed along a geometric sequence and the limit is extrapolated; an
    infinite endpoint needs ``config.truncate`` and is probed beyond it.
    The positivity of f is checked at every sampled time.
    """
    cfg = config or SamplerConfig()
    tol = cfg.tol if tol is None else tol
    if not st.interval.contains_region(region):
        raise RegionError(f"region {region} is not inside the interval {st.interval}")
    lo, hi = _span(region, cfg)
    ts = _grid(region, lo, hi, cfg.samples)
    st.check_positive(ts)
    vals = _evaluate(fn, ts)

    closed_lo = lo if not region.lo_open else None
    closed_hi = hi if not region.hi_open else None
    best = None
    converged = True
    lower = math.inf
    for i in _local_minima(vals)[: cfg.candidates]:
        t_c, v_c, est, spacing, ok = _refine(fn, ts, vals, int(i), closed_lo, closed_hi, cfg, tol)
        lower = min(lower, v_c - est)
        if best is None or v_c < best[1]:
            best = (t_c, v_c, spacing, ok)
    argmin, upper, refined_to, converged = best
    if region.degenerate:
        refined_to, converged = 0.0, True

    limits = [None, None]
    for side, probe in enumerate(_probes(region, lo, hi, cfg)):
        if probe is None:
            continue
        st.check_positive(probe)
        pv = _evaluate(fn, probe)
        k = int(np.argmin(pv))
        if pv[k] < upper:
            argmin, upper = float(probe[k]), float(pv[k])
        limits[side] = _limit(pv)
        if not math.isnan(limits[side]):
            lower = min(lower, limits[side])
    lower = min(lower, upper)
    return IntervalBound(float(lower), float(upper), float(refined_to), tuple(limits),
                         argmin, bool(converged), float(tol))


def _supremum_check(st, g, region, cfg) -> ConditionVerdict:
    """Verdict for the condition ``g <= tol`` everywhere on ``region``."""
    bound = infimum(st, lambda t: -g(t), region, cfg.tol, cfg)
    worst = -bound.upper
    worst_bound = -bound.lower
    if worst > cfg.tol:
        return ConditionVerdict("fails", bound.argmin, worst)
    if bound.converged and worst_bound <= cfg.tol:
        return ConditionVerdict("holds", bound.argmin, worst)
    return ConditionVerdict("unknown", bound.argmin, worst)


def check_ncc(st: Spacetime, region: Interval, config: SamplerConfig | None = None) -> ConditionVerdict:
    """Null convergence condition, i.e. (log f)'' <= 0 on the region."""
    cfg = config or SamplerConfig()
    return _supremum_check(st, lambda t: log_f_second(st, t), region, cfg)


def energy_conditions(st: Spacetime, region: Interval, config: SamplerConfig | None = None):
    """Weak, strong and dominant energy conditions of the perfect fluid.

    Returns ``(wec, sec, dec)``.  Each margin is in units of the density.
    """
    cfg = config or SamplerConfig()
    n = st.n

    def wec(t):
        fl = fluid_state(st, t)
        return np.maximum(-fl.rho, -(fl.rho + fl.p))

    def sec(t):
        fl = fluid_state(st, t)
        return np.maximum(-(fl.rho + fl.p), -(fl.rho + n * fl.p))

    def dec(t):
        fl = fluid_state(st, t)
        return np.abs(fl.p) - fl.rho

    return tuple(_supremum_check(st, g, region, cfg) for g in (wec, sec, dec))


def _bisect(g, a, b, ga, tol):
    for _ in range(200):
        m = 0.5 * (a + b)
        gm = float(g(m))
        if abs(gm) <= tol or m in (a, b):
            return m, gm
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return m, gm


def maximal_slices(st: Spacetime, region: Interval, tol: float | None = None,
                   config: SamplerConfig | None = None) -> list:
    """Times t0 in the region with f'(t0) = 0, found by bisection of grid sign changes.

    Roots are resolved to ``|f'(t0)/f(t0)| <= tol``.  A run of grid points
    where f' vanishes identically is reported once, as a ``degenerate`` slice
    at the start of the run.
    """
    cfg = config or SamplerConfig()
    tol = cfg.root_tol if tol is None else tol
    lo, hi = _span(region, cfg)
    ts = _grid(region, lo, hi, cfg.samples)
    st.check_positive(ts)

    # f'/f has the sign of f' and does not underflow where f decays
    def d1(t):
        return hubble(st, t)

    g = np.asarray(d1(ts), dtype=float)
    zero = np.abs(g) <= tol
    roots = []
    i = 0
    m = len(ts)
    while i < m:
        if zero[i]:
            j = i
            while j + 1 < m and zero[j + 1]:
                j += 1
            roots.append((float(ts[i]), j > i))
            i = j + 1
            continue
        if i + 1 < m and not zero[i + 1] and g[i] * g[i + 1] < 0:
            t0, g0 = _bisect(d1, ts[i], ts[i + 1], g[i], tol)
            if abs(g0) <= tol:
                roots.append((float(t0), False))
        i += 1

    out = []
    for t0, run in roots:
        jet = st.jet(t0)
        if run or abs(jet.d2 / jet.v) <= cfg.vanish_tol:
            kind = "degenerate"
        else:
            kind = "max" if jet.d2 < 0 else "min"
        out.append(MaximalSlice(t0, kind))
    return out


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------


def _simultaneous_vanishing(st, ts, cfg) -> Optional[float]:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    jet = st.jet(ts)
    h = np.abs(np.atleast_1d(jet.d1 / jet.v))
    q = np.abs(np.atleast_1d(jet.d2 / jet.v))
    hit = np.flatnonzero((h <= cfg.vanish_tol) & (q <= cfg.vanish_tol))
    return float(ts[hit[0]]) if len(hit) else None


def _endpoint_decay(st, region, cfg) -> list:
    """Endpoints where both (f'/f)^2 and (log f)'' tend to zero."""
    lo, hi = _span(region, cfg)
    found = []
    for side, probe in enumerate(_probes(region, lo, hi, cfg)):
        if probe is None:
            continue
        h2 = _limit(hubble(st, probe) ** 2)
        lf = _limit(log_f_second(st, probe))
        if abs(h2) <= cfg.decay_tol and abs(lf) <= cfg.decay_tol:
            found.append("lower" if side == 0 else "upper")
    return found


def classify(st: Spacetime, region: Interval, config: SamplerConfig | None = None) -> ClassificationReport:
    """Apply the non-existence and uniqueness criteria on ``region``.

    Non-existence needs the null convergence condition and a certified
    positive infimum of |div d_t| = n|f'/f|.  Otherwise uniqueness of slices
    needs the null convergence condition and a certified positive infimum of
    the criterion (n+1)(f'/f)^2 - n f''/f.  Both statements concern maximal
    hypersurfaces whose time range lies inside ``region``.
    """
    cfg = config or SamplerConfig()
    n = st.n
    ncc = check_ncc(st, region, cfg)
    wec, sec, dec = energy_conditions(st, region, cfg)
    div_inf = infimum(st, lambda t: np.abs(n * hubble(st, t)), region, cfg.tol, cfg)
    crit_inf = infimum(st, lambda t: criterion_value(st, t), region, cfg.tol, cfg)
    slices = maximal_slices(st, region, cfg.root_tol, cfg)

    notes = [f"verdicts apply to maximal hypersurfaces whose time range lies in {region}"]
    failure = None
    if ncc.status == "holds" and div_inf.certified_positive:
        verdict = "non-existence"
    elif ncc.status == "holds" and crit_inf.certified_positive:
        verdict = "unique-slices"
    else:
        verdict = "inconclusive"
        if ncc.status != "holds":
            notes.append(f"null convergence condition {ncc.status} (worst (log f)'' = {ncc.margin!r})")
        for name, bound in (("|div d_t|", div_inf), ("criterion", crit_inf)):
            if not bound.converged and bound.upper > 0:
                notes.append(f"infimum of {name} not resolved within the refinement budget")
        lo, hi = _span(region, cfg)
        candidates = list(_grid(region, lo, hi, cfg.samples))
        candidates += [s.t0 for s in slices]
        if div_inf.argmin is not None and lo <= div_inf.argmin <= hi:
            candidates.append(div_inf.argmin)
        vanish_at = _simultaneous_vanishing(st, candidates, cfg)
        decay = _endpoint_decay(st, region, cfg)
        if vanish_at is not None:
            failure = "simultaneous-vanishing"
            notes.append(f"f' and f'' vanish together at t = {vanish_at!r}")
        elif decay:
            failure = "endpoint-decay"
            notes.append("(f'/f)^2 and (log f)'' both tend to 0 at the " + " and ".join(decay) + " end")
        else:
            failure = "other"
    if any(s.kind == "degenerate" for s in slices):
        notes.append("f' vanishes on a whole stretch of the sampling grid")
    return ClassificationReport(ncc, wec, sec, dec, crit_inf, div_inf, slices, verdict, failure, notes)
