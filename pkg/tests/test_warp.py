import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwmaximal.catalog import list_presets
from rwmaximal.expr import DomainError, parse
from rwmaximal.warp import (
    EIGHT_PI, Interval, PositivityError, RegionError, SamplerConfig, Spacetime, check_ncc,
    classify, criterion_fluid_form, criterion_value, energy_conditions, fluid_state, hubble,
    infimum, log_f_second, maximal_slices, parse_interval,
)

from conftest import make


# --- intervals ---------------------------------------------------------------

@pytest.mark.parametrize("text, lo, hi, lo_open, hi_open", [
    ("(-inf,inf)", -math.inf, math.inf, True, True),
    ("[0.1, 5]", 0.1, 5.0, False, False),
    ("(0,5]", 0.0, 5.0, True, False),
    ("[1,1]", 1.0, 1.0, False, False),
    ("[-0.9*a, 0.9*a]", -1.8, 1.8, False, False),
])
def test_parse_interval(text, lo, hi, lo_open, hi_open):
    iv = parse_interval(text, {"a": 2.0})
    assert (iv.lo, iv.hi, iv.lo_open, iv.hi_open) == pytest.approx((lo, hi, lo_open, hi_open))


@pytest.mark.parametrize("text", ["[1,0]", "(1,1]", "1,2", "[1,2", "[a,2]", "[1,2,3]"])
def test_bad_intervals(text):
    with pytest.raises((RegionError, ValueError)):
        parse_interval(text)


def test_spacetime_validation():
    with pytest.raises(ValueError):
        make("exp(t)", n=1)
    with pytest.raises(ValueError):
        Spacetime.from_strings("a*t", "(0,1)", 3, {})
    with pytest.raises(ValueError):
        Spacetime(parse("x_1*t", variables=("t", "x_1")), 3)


# --- pointwise closed forms ---------------------------------------------------

@pytest.mark.parametrize("f, t, want", [
    ("exp(t)", -3.0, 1.0),
    ("exp(t)", 7.5, 1.0),
    ("1", 0.4, 0.0),
    ("t^(2/3)", 1.0, 2 / 3),
])
def test_hubble(f, t, want):
    assert hubble(make(f), t) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("f, t, want, params", [
    ("exp(-t^2)", 3.3, -2.0, {}),
    ("sqrt(a^2-t^2)", 0.0, -1.0, {"a": 1.0}),
    ("exp(t)", 2.0, 0.0, {}),
])
def test_log_f_second(f, t, want, params):
    st = make(f, **params)
    assert log_f_second(st, t) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_criterion_gaussian(n):
    ts = np.linspace(-10, 10, 101)
    np.testing.assert_allclose(criterion_value(make("exp(-t^2)", n=n), ts), 2 * n + 4 * ts ** 2,
                               rtol=1e-9)


@pytest.mark.parametrize("n, a", [(2, 1.0), (3, 1.0), (3, 2.5)])
def test_criterion_friedmann_like(n, a):
    ts = np.linspace(-0.9 * a, 0.9 * a, 101)
    st = make("sqrt(a^2-t^2)", f"(-{a},{a})", n, a=a)
    want = (n * (a * a + ts ** 2) + ts ** 2) / (a * a - ts ** 2) ** 2
    np.testing.assert_allclose(criterion_value(st, ts), want, rtol=1e-9)


def test_criterion_minkowski(minkowski):
    assert criterion_value(minkowski, 3.0) == 0.0


def test_fluid_eds():
    fl = fluid_state(make("t^(2/3)", "(0,inf)"), 1.0)
    assert fl.rho == pytest.approx(1 / (6 * math.pi), rel=1e-14)
    assert abs(fl.p) <= 1e-15


def test_fluid_steady_state():
    fl = fluid_state(make("exp(t)"), 0.3)
    assert EIGHT_PI * fl.rho == pytest.approx(3.0)
    assert EIGHT_PI * fl.p == pytest.approx(-3.0)


def test_fluid_minkowski(minkowski):
    fl = fluid_state(minkowski, 1.0)
    assert fl.rho == 0.0 and fl.p == 0.0


def test_fluid_form_eds():
    st = make("t^(2/3)", "(0,inf)")
    assert criterion_value(st, 1.0) == pytest.approx(22 / 9, rel=1e-14)
    assert criterion_fluid_form(st, 1.0) == pytest.approx(22 / 9, rel=1e-12)


@pytest.mark.parametrize("preset", list_presets(), ids=lambda p: p.name)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_fluid_form_matches_criterion(preset, n, rng):
    st = preset.spacetime(n=n)
    reg = preset.default_region()
    ts = rng.uniform(reg.lo, reg.hi, 1000)
    c = criterion_value(st, ts)
    assert np.all(np.abs(criterion_fluid_form(st, ts) - c) <= 1e-10 * (1 + np.abs(c)))


@pytest.mark.parametrize("preset", list_presets(), ids=lambda p: p.name)
def test_density_formula(preset, rng):
    st = preset.spacetime()
    reg = preset.default_region()
    ts = rng.uniform(reg.lo, reg.hi, 50)
    h = hubble(st, ts)
    np.testing.assert_allclose(EIGHT_PI * fluid_state(st, ts).rho, 3 * h * h, rtol=1e-12, atol=1e-300)


# --- NCC and energy conditions ----------------------------------------------

def test_ncc_gaussian():
    v = check_ncc(make("exp(-t^2)"), Interval(-5, 5, False, False))
    assert v.status == "holds"
    assert v.margin == pytest.approx(-2.0)


def test_ncc_cosh_fails():
    v = check_ncc(make("cosh(t)"), Interval(-1, 1, False, False))
    assert v.status == "fails"
    assert v.witness == pytest.approx(0.0, abs=1e-9)
    assert v.margin == pytest.approx(1.0)
    assert log_f_second(make("cosh(t)"), v.witness) > 0


def test_ncc_minkowski(minkowski):
    v = check_ncc(minkowski, Interval(-10, 10, False, False))
    assert v.status == "holds" and v.margin == 0.0


@pytest.mark.parametrize("f, interval, region, want", [
    ("t^(2/3)", "(0,inf)", "[0.1,10]", ("holds", "holds", "holds")),
    ("exp(t)", "(-inf,inf)", "[-10,10]", ("holds", "fails", "holds")),
    ("1", "(-inf,inf)", "[-10,10]", ("holds", "holds", "holds")),
])
def test_energy_conditions(f, interval, region, want):
    st = make(f, interval)
    got = energy_conditions(st, parse_interval(region))
    assert tuple(v.status for v in got) == want


def test_steady_state_sec_margin():
    _, sec, _ = energy_conditions(make("exp(t)"), Interval(-10, 10, False, False))
    # SEC is checked as max(-(rho+p), -(rho+3p)) <= 0; here -(rho+3p) = 6/(8 pi)
    assert sec.margin == pytest.approx(6 / EIGHT_PI)


def ncc_agrees_with_sign(st, region):
    v = check_ncc(st, region)
    ts = np.linspace(region.lo, region.hi, 401)
    direct = np.max(log_f_second(st, ts))
    if v.status == "holds":
        assert direct <= 1e-9
    elif v.status == "fails":
        assert direct > 1e-9 or log_f_second(st, v.witness) > 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1))
def test_ncc_matches_direct_sign(c1, c2, c3):
    # f = exp(c1 t + c2 t^2 - c3 t^4 / 4) has (log f)'' = 2 c2 - 3 c3 t^2
    st_ = make(f"exp({c1}*t + ({c2})*t^2 - {c3}*t^4/4)")
    ncc_agrees_with_sign(st_, Interval(-2, 2, False, False))


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(0.05, 2), st.floats(-3, 3))
def test_criterion_nonnegative_under_ncc(c1, c2, t):
    s = make(f"exp({c1}*t - {c2}*t^2)")
    if log_f_second(s, t) <= 0:
        assert criterion_value(s, t) >= hubble(s, t) ** 2 - 1e-9


# --- infimum -----------------------------------------------------------------

def test_infimum_gaussian():
    st = make("exp(-t^2)")
    b = infimum(st, lambda t: criterion_value(st, t), Interval(-10, 10, False, False))
    assert b.lower >= 6 - b.tol
    assert b.lower <= b.upper
    assert b.argmin == pytest.approx(0.0, abs=1e-3)


def test_infimum_steady_state():
    st = make("exp(t)")
    b = infimum(st, lambda t: np.abs(3 * hubble(st, t)), Interval(-10, 10, False, False))
    assert b.lower == pytest.approx(3.0, abs=1e-8)


def test_infimum_zero(minkowski):
    tol = 1e-9
    b = infimum(minkowski, lambda t: criterion_value(minkowski, t), Interval(-1, 1, False, False), tol)
    assert -tol <= b.lower - b.tol and b.lower <= 0 <= b.upper <= tol


def test_infimum_refines_off_grid_minimum():
    st = make("1")
    b = infimum(st, lambda t: (t - 0.123456789) ** 2 + 1.0, Interval(-1, 1, False, False))
    assert b.converged
    assert b.argmin == pytest.approx(0.123456789, abs=1e-5)
    assert b.lower <= 1.0 <= b.upper + 1e-12


def test_infimum_degenerate_region():
    st = make("exp(t)")
    b = infimum(st, lambda t: 2.0 + t, Interval(1.0, 1.0, False, False))
    assert b.upper == 3.0


def test_infimum_open_endpoint_limit():
    st = make("t^(2/3)", "(0,inf)")
    b = infimum(st, lambda t: 1.0 / t, Interval(0, 5, True, False))
    assert b.endpoint_limits[0] == math.inf and b.endpoint_limits[1] is None
    assert b.lower == pytest.approx(0.2, abs=1e-8)


def test_probe_overflow_is_a_typed_error():
    st = make("exp(t)")
    with pytest.raises(DomainError):
        infimum(st, lambda t: t * 0 + 1, Interval(0, math.inf, False, True),
                config=SamplerConfig(truncate=50))


def test_infinite_region_needs_truncation():
    st = make("exp(t)")
    with pytest.raises(RegionError):
        infimum(st, lambda t: t * 0 + 1, Interval(0, math.inf, False, True))
    flat = make("1")
    b = infimum(flat, lambda t: np.exp(-t), Interval(0, math.inf, False, True),
                config=SamplerConfig(truncate=50))
    assert b.endpoint_limits[1] == pytest.approx(0.0, abs=1e-12)


def test_region_outside_interval():
    st = make("t^(2/3)", "(0,inf)")
    with pytest.raises(RegionError):
        infimum(st, lambda t: t, Interval(-1, 1, False, False))


def test_positivity_is_checked():
    st = make("t", "(-inf,inf)")
    with pytest.raises(PositivityError):
        infimum(st, lambda t: t, Interval(-1, 1, False, False))


def test_domain_error_propagates():
    st = make("sqrt(t)", "(-inf,inf)")
    with pytest.raises(DomainError):
        check_ncc(st, Interval(-1, 1, False, False))


# --- maximal slices ----------------------------------------------------------

@pytest.mark.parametrize("f, interval, region, want", [
    ("exp(-t^2)", "(-inf,inf)", "[-10,10]", [(0.0, "max")]),
    ("sqrt(1-t^2)", "(-1,1)", "[-0.9,0.9]", [(0.0, "max")]),
    ("exp(t)", "(-inf,inf)", "[-10,10]", []),
    ("cosh(t)", "(-inf,inf)", "[-3,2]", [(0.0, "min")]),
    ("2 + sin(t)", "(-inf,inf)", "[0,7]", [(math.pi / 2, "max"), (3 * math.pi / 2, "min")]),
])
def test_maximal_slices(f, interval, region, want):
    st = make(f, interval)
    got = maximal_slices(st, parse_interval(region))
    assert [s.kind for s in got] == [k for _, k in want]
    for s, (t0, _) in zip(got, want):
        assert s.t0 == pytest.approx(t0, abs=1e-10)
        assert abs(hubble(st, s.t0)) <= 1e-12


def test_maximal_slices_degenerate(minkowski):
    got = maximal_slices(minkowski, Interval(-1, 1, False, False))
    assert len(got) == 1 and got[0].kind == "degenerate"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=3, unique=True))
def test_every_bracketed_root_found_once(roots):
    roots = sorted(roots)
    if min(np.diff(roots), default=1.0) < 0.05:
        return
    # f = exp(integral of prod(t - r_i)) has f'/f = prod(t - r_i)
    from numpy.polynomial import polynomial as P
    coeffs = P.polyint(P.polyfromroots(roots))
    terms = "+".join(f"({c:.17f})*t^{k}" for k, c in enumerate(coeffs))
    st_ = make(f"exp({terms})")
    got = maximal_slices(st_, Interval(-1, 1, False, False))
    assert [s.t0 for s in got] == pytest.approx(roots, abs=1e-9)


# --- classification ----------------------------------------------------------

@pytest.mark.parametrize("f, interval, region, params, verdict, failure", [
    ("exp(t)", "(-inf,inf)", "[-10,10]", {}, "non-existence", None),
    ("t^(2/3)", "(0,inf)", "(0,5]", {}, "non-existence", None),
    ("sqrt(2*a*t)", "(0,inf)", "(0,5]", {"a": 1.0}, "non-existence", None),
    ("exp(-t^2)", "(-inf,inf)", "[-10,10]", {}, "unique-slices", None),
    ("sqrt(a^2-t^2)", "(-a,a)", "[-0.9*a,0.9*a]", {"a": 1.0}, "unique-slices", None),
    ("1", "(-inf,inf)", "[-10,10]", {}, "inconclusive", "simultaneous-vanishing"),
    ("cosh(t)", "(-inf,inf)", "[-1,1]", {}, "inconclusive", "other"),
])
def test_classify(f, interval, region, params, verdict, failure):
    st = Spacetime.from_strings(f, interval, 3, params)
    r = classify(st, parse_interval(region, params))
    assert r.verdict == verdict
    assert r.failure_mode == failure
    check_report_invariants(st, r)


def test_classify_gaussian_slice():
    r = classify(make("exp(-t^2)"), Interval(-10, 10, False, False))
    assert [s.t0 for s in r.maximal_slices] == pytest.approx([0.0], abs=1e-12)


def test_classify_endpoint_decay():
    st = make("t^(2/3)", "(0,inf)")
    r = classify(st, parse_interval("[0.1,inf)"), SamplerConfig(truncate=1000))
    assert r.verdict == "inconclusive"
    assert r.failure_mode == "endpoint-decay"
    assert r.div_abs_inf.endpoint_limits[1] == pytest.approx(0.0, abs=1e-6)


def test_eds_div_infimum_matches_closed_form():
    # inf |div| on (0, b] is 2n/(3b)
    st = make("t^(2/3)", "(0,inf)")
    r = classify(st, parse_interval("(0,5]"))
    assert r.div_abs_inf.upper == pytest.approx(2 * 3 / 15, rel=1e-12)


def check_report_invariants(st, r):
    if r.verdict == "unique-slices":
        assert r.ncc.status == "holds" and r.criterion_inf.lower - r.criterion_inf.tol > 0
    if r.verdict == "non-existence":
        assert r.div_abs_inf.lower - r.div_abs_inf.tol > 0
    for s in r.maximal_slices:
        if s.kind != "degenerate":
            assert abs(hubble(st, s.t0)) <= 1e-12
    for v in (r.ncc, r.wec, r.sec, r.dec):
        if v.status == "fails":
            assert v.witness is not None and v.margin > 0
    assert r.criterion_inf.lower <= r.criterion_inf.upper
    assert r.div_abs_inf.lower <= r.div_abs_inf.upper


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.5))
def test_classification_soundness(c1, c2, c3):
    s = make(f"exp({c1}*t + ({c2})*t^2 + ({c3})*t^3)")
    check_report_invariants(s, classify(s, Interval(-2, 2, False, False)))
