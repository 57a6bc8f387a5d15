import numpy as np
import pytest

from rwmaximal.ambient import inner
from rwmaximal.hypersurface import (
    DiscreteField, HypersurfaceError, NCCViolatedError, NotMaximalError, NotSpacelikeError,
    OutsideIntervalError, StencilError, covariant_hessian, gradient_norm2, hyperbolic_angle,
    intrinsic_ricci, laplace_beltrami, make_graph, mean_curvature, parse_box, ricci_bound_slack,
    ricci_kt_n, ricci_tensor, ricci_tensor_from_metric, shape_operator, tangent_norm2,
    verify_hessian_identity, verify_lemma1,
)
from rwmaximal.radial import radial_maximal_graph
from rwmaximal.warp import hubble

from conftest import make

BOX2 = [(-1.0, 1.0), (-1.0, 1.0)]
WAVY = "0.3*sin(x_1)*cos(0.7*x_2) + 0.2*x_1*x_2 + 0.1"


def gauss(n=2):
    return make("exp(-t^2)", n=n)


def flat(n=2):
    return make("1", n=n)


def ratio(build, fn, coarse=33, fine=65):
    a, b = fn(build(coarse)), fn(build(fine))
    return a, b, a / b


# --- construction ------------------------------------------------------------

@pytest.mark.parametrize("spacetime", [gauss(), flat(), make("t^(2/3)", "(0,inf)", 2)],
                         ids=["gaussian", "minkowski", "eds"])
def test_slice_is_valid(spacetime):
    gh = make_graph(spacetime, BOX2, 9, "0.5")
    assert np.all(gh.u == 0.5)


def test_tilted_plane_is_valid():
    gh = make_graph(flat(), BOX2, 9, "0.5*x_1")
    assert gh.spacelike_margin.min() == pytest.approx(0.75)


def test_steep_plane_is_rejected():
    with pytest.raises(NotSpacelikeError) as info:
        make_graph(flat(), BOX2, 9, "2*x_1")
    assert info.value.margin == pytest.approx(-3.0)
    assert all(1 <= i <= 7 for i in info.value.index)


def test_worst_node_is_reported():
    # |Du| = |2 x_1 + 1| peaks on the last interior column
    with pytest.raises(NotSpacelikeError) as info:
        make_graph(flat(), BOX2, 9, "x_1^2 + x_1")
    assert info.value.index[0] == 7
    assert info.value.point[0] == pytest.approx(0.75)


def test_graph_leaving_interval():
    with pytest.raises(OutsideIntervalError):
        make_graph(make("t^(2/3)", "(0,inf)", 2), BOX2, 9, "0.1*x_1")


@pytest.mark.parametrize("res", [3, 4, (9, 4)])
def test_resolution_floor(res):
    with pytest.raises(StencilError):
        make_graph(flat(), BOX2, res, "0")


def test_dimension_mismatch():
    with pytest.raises(HypersurfaceError):
        make_graph(flat(3), BOX2, 9, "0")


def test_node_array_input():
    u = np.full((9, 11), 0.25)
    gh = make_graph(gauss(), BOX2, (9, 11), u)
    assert gh.res == (9, 11) and gh.exact_du is None
    with pytest.raises(HypersurfaceError):
        make_graph(gauss(), BOX2, (9, 9), u)


def test_parameters_in_graph_expression():
    st = make("sqrt(a^2-t^2)", "(-a,a)", 2, a=2.0)
    gh = make_graph(st, BOX2, 9, "0.1*a*x_1")
    assert gh.u.max() == pytest.approx(0.2)


def test_parse_box():
    assert parse_box("[-1,1]x[0,2]") == ((-1.0, 1.0), (0.0, 2.0))
    assert parse_box("[-1,1] x [0,2] x [1,3]") == ((-1.0, 1.0), (0.0, 2.0), (1.0, 3.0))
    with pytest.raises(ValueError):
        parse_box("[1,-1]x[0,1]")


def test_discrete_field_margins():
    gh = make_graph(gauss(), BOX2, 9, WAVY)
    lap = laplace_beltrami(gh, gh.u)
    assert lap.margin == 2 and lap.values.shape == (5, 5)
    assert np.all(np.isfinite(lap.values))
    assert np.all(np.isnan(lap.data[:2])) and np.all(np.isnan(lap.data[:, -2:]))


# --- frame -------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_frame_orthonormality(n):
    src = WAVY if n == 2 else WAVY + " + 0.1*sin(x_3)"
    box = [(-1.0, 1.0)] * n
    gh = make_graph(gauss(n), box, 9, src)
    fr = gh.frame
    sl = (slice(None),) + (slice(1, -1),) * n
    u = gh.u[sl[1:]]
    N = fr.normal[sl]
    assert np.max(np.abs(inner(gh.st, u, N, N) + 1)) <= 1e-12
    for i in range(n):
        assert np.max(np.abs(inner(gh.st, u, N, fr.tangent[i][sl]))) <= 1e-12
    dt = np.zeros_like(N)
    dt[0] = 1.0
    cosh = -inner(gh.st, u, N, dt)
    np.testing.assert_allclose(cosh, fr.cosh[sl[1:]], rtol=1e-14)
    assert np.all(cosh >= 1.0)


def test_hyperbolic_angle_slice():
    c, s2 = hyperbolic_angle(make_graph(gauss(), BOX2, 9, "0.4"))
    assert np.all(c.values == 1.0) and np.all(s2.values == 0.0)


def test_hyperbolic_angle_tilted_plane():
    c, s2 = hyperbolic_angle(make_graph(flat(), BOX2, 9, "0.5*x_1"))
    np.testing.assert_allclose(c.values, 1 / np.sqrt(0.75), rtol=1e-14)
    np.testing.assert_allclose(s2.values, 1 / 0.75 - 1, rtol=1e-12)


@pytest.mark.parametrize("src", [WAVY, "0.4*exp(-x_1^2)*x_2", "0.2*x_1 - 0.3*x_2"])
def test_gradient_norm_is_sinh2(src):
    gh = make_graph(gauss(), BOX2, 17, src)
    c, s2 = hyperbolic_angle(gh)
    np.testing.assert_allclose(gradient_norm2(gh).values, s2.values, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(s2.values, c.values ** 2 - 1, rtol=1e-9, atol=1e-12)


# --- Laplace-Beltrami --------------------------------------------------------

def test_laplacian_of_constant():
    gh = make_graph(gauss(), BOX2, 17, WAVY)
    assert laplace_beltrami(gh, np.full(gh.res, 3.7)).max_abs() <= 1e-12


def test_laplacian_flat_slice():
    gh = make_graph(flat(), BOX2, 17, "0")
    np.testing.assert_allclose(laplace_beltrami(gh, gh.coords[0] ** 2).values, 2.0, rtol=1e-12)


@pytest.mark.parametrize("t0", [-0.5, 0.0, 0.8])
def test_laplacian_scaled_slice(t0):
    st = gauss()
    gh = make_graph(st, BOX2, 17, str(t0))
    want = 2 / st.f(t0) ** 2
    np.testing.assert_allclose(laplace_beltrami(gh, gh.coords[0] ** 2).values, want, rtol=1e-12)


def test_laplacian_converges_on_slice():
    st = gauss()

    def err(res):
        gh = make_graph(st, BOX2, res, "0.3")
        x, y = gh.coords
        lap = laplace_beltrami(gh, np.sin(x) * np.cos(y))
        return np.max(np.abs(lap.values - (-2 * np.sin(x) * np.cos(y) / st.f(0.3) ** 2)[2:-2, 2:-2]))

    a, b = err(33), err(65)
    assert 3 <= a / b <= 5


def test_laplacian_stencil_room():
    gh = make_graph(gauss(), BOX2, 5, "0")
    with pytest.raises(StencilError):
        laplace_beltrami(gh, DiscreteField(gh.u, 1, gh.spacing))


# --- shape operator and mean curvature ---------------------------------------

@pytest.mark.parametrize("t0", [-0.7, 0.0, 0.5])
def test_slice_shape_operator(t0):
    st = gauss()
    gh = make_graph(st, BOX2, 17, str(t0))
    A = shape_operator(gh).values
    h = hubble(st, t0)
    np.testing.assert_allclose(A[0, 0], -h, atol=1e-12)
    np.testing.assert_allclose(A[1, 1], -h, atol=1e-12)
    np.testing.assert_allclose(A[0, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(mean_curvature(gh).H.values, h, atol=1e-12)


def test_plane_is_totally_geodesic():
    gh = make_graph(flat(), BOX2, 17, "0.5*x_1 - 0.2*x_2")
    assert shape_operator(gh).max_abs() <= 1e-12
    assert mean_curvature(gh).max_abs() <= 1e-12


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_hyperboloid_mean_curvature(a):
    # future normal, A = -D N: the upper hyperboloid has H = +1/a
    gh = make_graph(flat(), BOX2, 129, f"sqrt({a * a} + x_1^2 + x_2^2)")
    H = mean_curvature(gh).H.values
    np.testing.assert_allclose(H, 1 / a, atol=1e-3)


def test_shape_operator_self_adjoint():
    def asym(res):
        gh = make_graph(gauss(), BOX2, res, WAVY)
        A = shape_operator(gh).data
        gA = np.einsum("kj...,ki...->ij...", gh.frame.metric, A)
        return np.nanmax(np.abs(gA - np.swapaxes(gA, 0, 1)))

    a, b = asym(33), asym(65)
    assert b < 1e-3 and 3 <= a / b <= 5


def test_mean_curvature_routes_converge():
    build = lambda res: make_graph(gauss(), BOX2, res, WAVY)
    a, b, r = ratio(build, lambda gh: mean_curvature(gh).residual.max_abs())
    assert 3 <= r <= 5


# --- identities --------------------------------------------------------------

def test_hessian_identity_on_slice():
    gh = make_graph(gauss(), BOX2, 17, "0.5")
    chk = verify_hessian_identity(gh)
    # the Hessian of a constant vanishes, and so does the right side
    assert chk.lhs.max_abs() <= 1e-12
    assert chk.rhs.max_abs() <= 1e-12
    assert chk.max_residual() <= 1e-12


def test_hessian_identity_on_plane():
    chk = verify_hessian_identity(make_graph(flat(), BOX2, 17, "0.5*x_1"))
    assert chk.lhs.max_abs() <= 1e-12 and chk.rhs.max_abs() <= 1e-12


@pytest.mark.parametrize("src", [WAVY, "0.4*exp(-x_1^2-x_2^2)"])
def test_hessian_identity_converges(src):
    build = lambda res: make_graph(gauss(), BOX2, res, src)
    a, b, r = ratio(build, lambda gh: verify_hessian_identity(gh).max_residual())
    assert 3 <= r <= 5


def test_hessian_identity_needs_trace_term():
    # without the tr(A) term the identity fails on non-maximal graphs by O(1)
    gh = make_graph(gauss(), BOX2, 65, WAVY)
    A = shape_operator(gh).data
    trA = np.trace(A, axis1=0, axis2=1)
    h = gh.jet.d1 / gh.jet.v
    chk = verify_hessian_identity(gh)
    dropped = np.abs(chk.rhs.data - 2 * h * gh.frame.cosh * trA - chk.lhs.data)
    assert np.nanmax(dropped) > 100 * chk.max_residual()


def test_covariant_hessian_symmetric():
    gh = make_graph(gauss(), BOX2, 17, WAVY)
    H = covariant_hessian(gh).values
    np.testing.assert_allclose(H[0, 1], H[1, 0], atol=1e-14)


def test_ricci_kt_n_converges(rng):
    build = lambda res: make_graph(gauss(), BOX2, res, WAVY)
    a, b, r = ratio(build, lambda gh: ricci_kt_n(gh).max_residual())
    assert 3 <= r <= 5
    gh = build(65)
    chk = ricci_kt_n(gh)
    # random interior nodes
    for _ in range(10):
        i, j = rng.integers(1, 64, 2)
        assert chk.lhs.data[i, j] == pytest.approx(chk.rhs.data[i, j], abs=1e-3)


def test_ricci_kt_n_consistent_on_node_arrays():
    gh = make_graph(gauss(), BOX2, 33, WAVY)
    arr = make_graph(gauss(), BOX2, 33, gh.u)
    assert ricci_kt_n(arr).max_residual() <= 1e-12


def test_ricci_kt_n_vanishes_on_slices_and_in_minkowski():
    assert ricci_kt_n(make_graph(gauss(), BOX2, 9, "0.2")).max_residual() == 0.0
    chk = ricci_kt_n(make_graph(flat(), BOX2, 9, "0.3*x_1"))
    assert chk.lhs.max_abs() <= 1e-15


# --- intrinsic Ricci ---------------------------------------------------------

@pytest.mark.parametrize("f, iv, t0", [("exp(-t^2)", "(-inf,inf)", 0.5),
                                       ("t^(2/3)", "(0,inf)", 1.0),
                                       ("exp(t)", "(-inf,inf)", -0.3)])
@pytest.mark.parametrize("n", [2, 3])
def test_slices_are_flat(f, iv, t0, n, rng):
    gh = make_graph(make(f, iv, n), [(-1, 1)] * n, 9, str(t0))
    for _ in range(3):
        Y = rng.normal(size=n)
        assert intrinsic_ricci(gh, Y).max_abs() <= 1e-12


def test_sign_flipped_gauss_equation_fails_on_slices(rng):
    st = gauss()
    t0 = 0.5
    gh = make_graph(st, BOX2, 9, str(t0))
    Y = rng.normal(size=2)
    h = hubble(st, t0)
    want = 2 * (2 - 1) * h * h * tangent_norm2(gh, Y)
    np.testing.assert_allclose(intrinsic_ricci(gh, Y, sign=-1).values, want[2:-2, 2:-2], rtol=1e-12)


def test_ambient_trace_matches_closed_sum(rng):
    from rwmaximal.hypersurface import _ambient_trace
    st = gauss(3)
    gh = make_graph(st, [(-1, 1)] * 3, 9, "0.2*sin(x_1) + 0.1*x_2*x_3")
    S = _ambient_trace(gh)
    Y = rng.normal(size=(3,) + gh.res)
    T = gh.grad_tau()
    g = gh.frame.metric
    Y2 = np.einsum("ij...,i...,j...->...", g, Y, Y)
    YT = np.einsum("ij...,i...,j...->...", g, Y, T)
    h = gh.jet.d1 / gh.jet.v
    q = gh.jet.d2 / gh.jet.v - h * h
    n = 3
    want = (n - 1) * h * h * Y2 - (n - 2) * q * YT ** 2 - q * gh.sinh2 * Y2
    got = np.einsum("ij...,i...,j...->...", S, Y, Y)
    sl = (slice(1, -1),) * 3
    np.testing.assert_allclose(got[sl], want[sl], rtol=1e-10, atol=1e-12)


def test_gauss_route_matches_metric_route():
    def err(res):
        gh = make_graph(gauss(), BOX2, res, WAVY)
        a = ricci_tensor(gh).data
        b = ricci_tensor_from_metric(gh).data
        return np.nanmax(np.abs(a - b))

    a, b = err(33), err(65)
    assert b < 1e-3 and 3 <= a / b <= 5


def maximal_patch(res=65, n=2):
    return radial_maximal_graph(gauss(n), n, 1.0, 0.3, res)


@pytest.mark.parametrize("seed", range(10))
def test_ricci_nonnegative_on_maximal_patch(seed):
    gh = maximal_patch(65)
    rng = np.random.default_rng(seed)
    x, y = gh.coords
    c = rng.normal(size=(2, 3))
    Y = np.stack([c[0, 0] + c[0, 1] * np.sin(x) + c[0, 2] * y, c[1, 0] + c[1, 1] * x * y + c[1, 2] * np.cos(y)])
    ric = intrinsic_ricci(gh, Y).values
    assert ric.min() >= -1e-3
    h = gh.jet.d1 / gh.jet.v
    bound = (2 - 1) * h * h * tangent_norm2(gh, Y)
    assert np.min(ric - bound[2:-2, 2:-2]) >= -1e-3


def test_ricci_bound_slack_on_maximal_patch():
    assert ricci_bound_slack(maximal_patch(33)).min() >= -1e-3


# --- sinh^2 subharmonicity inequality ----------------------------------------

def test_lemma1_on_maximal_slice():
    chk = verify_lemma1(make_graph(gauss(), BOX2, 17, "0"))
    assert chk.lhs.max_abs() == 0.0 and chk.rhs.max_abs() == 0.0 and chk.min_slack == 0.0


def test_lemma1_on_tilted_plane():
    chk = verify_lemma1(make_graph(flat(), BOX2, 17, "0.5*x_1"))
    assert chk.lhs.max_abs() <= 1e-12 and chk.rhs.max_abs() == 0.0
    assert abs(chk.min_slack) <= 1e-12


def test_lemma1_not_maximal():
    gh = make_graph(flat(), BOX2, 33, "sqrt(1 + x_1^2 + x_2^2)")
    with pytest.raises(NotMaximalError) as info:
        verify_lemma1(gh)
    assert info.value.max_abs_h == pytest.approx(1.0, abs=1e-2)


def test_lemma1_ncc_violated():
    # cosh has a maximal slice at 0 but (log f)'' = 1/cosh^2 > 0
    gh = make_graph(make("cosh(t)", n=2), BOX2, 9, "0")
    with pytest.raises(NCCViolatedError):
        verify_lemma1(gh)


def test_lemma1_on_radial_patch():
    for res in (33, 65):
        gh = maximal_patch(res)
        chk = verify_lemma1(gh)
        assert chk.min_slack >= -1e-6 * gh.h ** 2
