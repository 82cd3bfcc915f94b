import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rieszlab import riesz, subeq
from rieszlab.errors import DomainError, NumericalError, SolverError

INF = math.inf


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def test_log_kernel_at_e():
    assert riesz.kernel(riesz.KernelSpec(p=2.0), math.e) == pytest.approx(1.0, abs=1e-15)


def test_standard_kernel_p3():
    spec = riesz.KernelSpec(p=3.0)
    assert riesz.kernel(spec, 2.0) == pytest.approx(-0.5, abs=1e-15)


def test_kernel_monotone_increasing():
    for p in (1.0, 1.5, 2.0, 3.0, 4.5):
        spec = riesz.KernelSpec(p=p)
        t = np.geomspace(0.01, 100.0, 64)
        vals = np.asarray(riesz.kernel(spec, t))
        assert np.all(np.diff(vals) > 0.0)
        assert np.all(np.asarray(riesz.kernel_deriv1(spec, t)) > 0.0)


def test_barred_kernel_derivative_exact():
    for p in (1.3, 2.0, 2.5, 4.0):
        spec = riesz.KernelSpec(p=p, normalization="barred")
        for t in (0.1, 1.0, 7.5):
            assert riesz.kernel_deriv1(spec, t) == pytest.approx(t ** (1.0 - p), rel=1e-15)


def test_kernel_derivatives_match_finite_differences():
    for p in (1.4, 2.0, 3.2):
        for norm in ("standard", "barred"):
            spec = riesz.KernelSpec(p=p, normalization=norm)
            for t in (0.3, 1.7):
                h = 1e-6 * t
                fd1 = (riesz.kernel(spec, t + h) - riesz.kernel(spec, t - h)) / (2 * h)
                assert riesz.kernel_deriv1(spec, t) == pytest.approx(fd1, rel=1e-7)
                fd2 = (
                    riesz.kernel(spec, t + h)
                    - 2 * riesz.kernel(spec, t)
                    + riesz.kernel(spec, t - h)
                ) / h**2
                assert riesz.kernel_deriv2(spec, t) == pytest.approx(fd2, rel=1e-3)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0]),
       st.floats(min_value=-4.0, max_value=4.0))
def test_kernel_inverse_round_trip(p, log10_t):
    t = 10.0**log10_t
    for norm in ("standard", "barred"):
        spec = riesz.KernelSpec(p=p, normalization=norm)
        back = riesz.kernel_inverse(spec, riesz.kernel(spec, t))
        assert back == pytest.approx(t, rel=1e-12)


def test_kernel_domain_errors():
    spec = riesz.KernelSpec(p=3.0)
    with pytest.raises(DomainError):
        riesz.kernel(spec, 0.0)
    with pytest.raises(DomainError):
        riesz.kernel(spec, -1.0)
    with pytest.raises(DomainError):
        riesz.kernel_inverse(spec, 1.0)  # p > 2 range is (-inf, 0)
    with pytest.raises(DomainError):
        riesz.kernel_inverse(riesz.KernelSpec(p=1.5), -1.0)
    with pytest.raises(DomainError):
        riesz.KernelSpec(p=0.5)


# ---------------------------------------------------------------------------
# increasing characteristic: closed forms
# ---------------------------------------------------------------------------

CLOSED_FORMS = [
    ("sigma-k", {"k": 2}, 4, 2.0),
    ("sigma-k", {"k": 3}, 6, 2.0),
    ("pdelta", {"delta": 1.0}, 3, 1.5),
    ("trace-power", {"k": 4, "q": 3.0}, 4, 1.0 + 3.0 ** (1.0 / 3.0)),
    ("p-convex", {"p": 2.5}, 5, 2.5),
    ("min-max", {"p": 3.0}, 4, 3.0),
    ("min-2", {"p": 3.0}, 4, 3.0),
    ("largest-convex", {"p": 2.0}, 4, 2.0),
]


@pytest.mark.parametrize("family,params,n,expected", CLOSED_FORMS)
def test_increasing_characteristic_closed_forms(family, params, n, expected):
    f = subeq.builtin(family, n, **params)
    p, bracket = riesz.increasing_characteristic(f)
    assert p == pytest.approx(expected, abs=1e-6)
    assert bracket <= 1e-8


def test_subaffine_has_infinite_characteristic():
    p, bracket = riesz.increasing_characteristic(subeq.builtin("subaffine", 4))
    assert p == INF and bracket == 0.0


def test_direction_independence():
    f = subeq.builtin("sigma-k", 4, k=2)
    p, _ = riesz.increasing_characteristic(f, check_directions=8, seed=5)
    assert p == pytest.approx(2.0, abs=1e-6)


def test_characteristic_certificate():
    f = subeq.builtin("pdelta", 3, delta=1.0)
    p, _ = riesz.increasing_characteristic(f)
    cert = riesz.bisection_certificate(f, p)
    assert cert["ok"]
    assert cert["margin_below"] >= -cert["band"]
    assert cert["margin_above"] <= cert["band"]


def test_garding_pdelta_branches_share_characteristic():
    n, delta = 3, 1.0
    expected = n * (1.0 + 1.0 / delta)
    for k in (2, 3):
        branch = subeq.garding_branch("pdelta", k, n, delta=delta)
        p, _ = riesz.increasing_characteristic(branch)
        assert p == pytest.approx(expected, abs=1e-6)


def test_garding_fold_sum_branches():
    # the first C(n-1, p-1) branches share characteristic p; the rest are infinite
    n, p = 4, 2
    for k in (1, 2, 3):
        branch = subeq.garding_branch("p-fold-sum", k, n, p=p)
        val, _ = riesz.increasing_characteristic(branch)
        assert val == pytest.approx(2.0, abs=1e-6)
    branch = subeq.garding_branch("p-fold-sum", 4, n, p=p)
    val, _ = riesz.increasing_characteristic(branch)
    assert val == INF


# ---------------------------------------------------------------------------
# decreasing characteristic and duality
# ---------------------------------------------------------------------------


def test_laplacian_decreasing_characteristic():
    q, _ = riesz.decreasing_characteristic(subeq.builtin("laplacian", 5))
    assert q == pytest.approx(5.0, abs=1e-6)


def test_psd_cone_decreasing_is_infinite():
    q, _ = riesz.decreasing_characteristic(subeq.builtin("p", 3))
    assert q == INF


def test_min_max_decreasing_characteristic():
    q, _ = riesz.decreasing_characteristic(subeq.builtin("min-max", 4, p=3.0))
    assert q == pytest.approx(1.5, abs=1e-6)


CATALOG = [
    ("p", {}, 3),
    ("p-convex", {"p": 2.5}, 4),
    ("laplacian", {}, 4),
    ("sigma-k", {"k": 2}, 4),
    ("pdelta", {"delta": 1.0}, 3),
    ("min-max", {"p": 3.0}, 4),
    ("min-2", {"p": 3.0}, 4),
    ("dual-min-max", {"p": 3.0}, 4),
    ("dual-min-2", {"p": 3.0}, 4),
    ("trace-power", {"k": 4, "q": 3.0}, 4),
    ("subaffine", {}, 3),
    ("largest-convex", {"p": 2.0}, 4),
]


@pytest.mark.parametrize("family,params,n", CATALOG)
def test_dual_route_agreement(family, params, n):
    f = subeq.builtin(family, n, **params)
    q, _ = riesz.decreasing_characteristic(f)          # cross-checks internally
    p_dual, _ = riesz.increasing_characteristic(subeq.dual(f))
    if math.isinf(q):
        assert math.isinf(p_dual)
    else:
        assert q == pytest.approx(p_dual, abs=1e-6)


@pytest.mark.parametrize("family,params,n", CATALOG)
def test_pair_constraint(family, params, n):
    pair = riesz.characteristic_pair(subeq.builtin(family, n, **params))
    if math.isfinite(pair.p) and math.isfinite(pair.q):
        assert (pair.p - 1.0) * (pair.q - 1.0) >= 1.0 - 1e-6


def test_min_max_pair_equality():
    pair = riesz.characteristic_pair(subeq.builtin("min-max", 4, p=3.0))
    assert (pair.p - 1.0) * (pair.q - 1.0) == pytest.approx(1.0, abs=1e-6)


def test_pair_constraint_violation_raises():
    with pytest.raises(NumericalError):
        riesz.CharacteristicPair(p=1.5, q=1.5, p_bracket=0.0, q_bracket=0.0)


def test_lift_scaling():
    for family, params, n, base in [("p-convex", {"p": 1.5}, 3, 1.5),
                                    ("sigma-k", {"k": 2}, 4, 2.0),
                                    ("pdelta", {"delta": 1.0}, 3, 1.5)]:
        pc, _ = riesz.increasing_characteristic(subeq.complex_lift(family, n, **params))
        assert pc == pytest.approx(2.0 * base, abs=1e-5)
    pq, _ = riesz.increasing_characteristic(subeq.quaternionic_lift("p-convex", 2, p=1.5))
    assert pq == pytest.approx(6.0, abs=1e-5)


def test_regularization_characteristic_map():
    n, p0, delta = 4, 2.0, 1.0
    f = subeq.uniform_elliptic_regularization(subeq.builtin("p-convex", n, p=p0), delta)
    p, _ = riesz.increasing_characteristic(f)
    assert p == pytest.approx(p0 * n * (1.0 + delta) / (n + delta * p0), abs=1e-6)


def test_geometric_characteristic_from_plane_direction():
    gs = subeq.sample_grassmannian(4, 2, count=128, seed=5)
    f = subeq.geometric(gs)
    p, _ = riesz.increasing_characteristic(f)
    assert p == pytest.approx(2.0, abs=1e-6)


def test_full_space_direction_tests_agree():
    # -P_e is a member, so the characteristic is infinite via both routes
    p, _ = riesz.increasing_characteristic(subeq.builtin("full-space", 3))
    assert p == INF


# ---------------------------------------------------------------------------
# radial harmonic and sandwich checks
# ---------------------------------------------------------------------------

RADII = (0.1, 1.0, 10.0)


def test_radial_harmonic_laplacian_exact():
    f = subeq.builtin("laplacian", 4)
    rep = riesz.radial_harmonic_check(f, theta=1.0, p=4.0, radii=RADII, seed=0)
    assert rep.passed
    # the trace of the kernel Hessian vanishes identically
    h = riesz.kernel_hessian(1.0, 4.0, np.array([0.3, 0.2, -0.7, 0.1]))
    assert np.trace(h) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("family,params,n,p", [
    ("p-convex", {"p": 2.5}, 4, 2.5),
    ("sigma-k", {"k": 2}, 4, 2.0),
    ("pdelta", {"delta": 1.0}, 3, 1.5),
    ("min-max", {"p": 3.0}, 4, 3.0),
])
def test_radial_harmonic_on_boundary(family, params, n, p):
    f = subeq.builtin(family, n, **params)
    rep = riesz.radial_harmonic_check(f, theta=1.0, p=p, radii=RADII, seed=1)
    assert rep.passed, rep.worst_violation
    rep2 = riesz.radial_harmonic_check(f, theta=2.0, p=p, radii=RADII, seed=2)
    assert rep2.passed


def test_radial_harmonic_zero_multiple():
    f = subeq.builtin("sigma-k", 4, k=2)
    rep = riesz.radial_harmonic_check(f, theta=0.0, p=2.0, radii=(1.0,), seed=0)
    assert rep.passed and rep.worst_violation == 0.0


def test_sandwich_for_p_convex_itself():
    f = subeq.builtin("p-convex", 4, p=2.5)
    assert riesz.sandwich_check(f, 2.5, sample_count=400, seed=0).passed


def test_sandwich_for_sigma_k():
    f = subeq.builtin("sigma-k", 4, k=2)
    assert riesz.sandwich_check(f, 2.0, sample_count=400, seed=1).passed


def test_sandwich_detects_wrong_characteristic():
    # claiming characteristic 2 for the min-max family with p = 3 breaks
    # the upper inclusion on boundary samples
    f = subeq.builtin("min-max", 4, p=3.0)
    rep = riesz.sandwich_check(f, 2.0, sample_count=400, seed=2)
    assert not rep.passed


def test_characteristic_rejects_bad_tolerance():
    with pytest.raises(DomainError):
        riesz.increasing_characteristic(subeq.builtin("p", 3), tol=0.0)


def test_no_crossing_inside_bracket_is_a_solver_error():
    # the min-max family with p = 200 crosses the boundary far beyond the
    # widened bracket, so the solve must fail loudly
    f = subeq.builtin("min-max", 3, p=200.0)
    with pytest.raises(SolverError):
        riesz.increasing_characteristic(f)
