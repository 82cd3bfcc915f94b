import math

import numpy as np
import pytest

from rieszlab import flow, linalg, riesz, subeq
from rieszlab.errors import DomainError, NumericalError


@pytest.fixture(scope="module")
def quad3():
    return flow.sphere_quad(3, 2048, seed=0)


@pytest.fixture(scope="module")
def quad4():
    return flow.sphere_quad(4, 4096, seed=0)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def test_sphere_quad_deterministic():
    a = flow.SphereQuad(4, 512, seed=9)
    b = flow.SphereQuad(4, 512, seed=9)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, flow.SphereQuad(4, 512, seed=10).points)


def test_sphere_quad_unit_norms(quad4):
    norms = np.linalg.norm(quad4.points, axis=1)
    assert np.abs(norms - 1.0).max() <= 1e-12


def test_sphere_quad_doubling_self_consistency(quad4):
    # averaging a smooth non-radial function with the half sample moves the
    # result by less than a conservative noise bound
    u = flow.quadratic_field(np.diag([1.0, -0.5, 2.0, 0.25]))
    full = flow.spherical_average(u, np.zeros(4), 1.0, quad4)
    half = flow.spherical_average(u, np.zeros(4), 1.0, quad4.half())
    assert abs(full - half) <= 5e-3


# ---------------------------------------------------------------------------
# averages
# ---------------------------------------------------------------------------


def test_constant_field_averages(quad3):
    c = 2.5
    u = flow.ScalarField(n=3, values=lambda pts: np.full(np.asarray(pts).shape[0], c),
                         reference_value=c)
    for fn in (flow.spherical_max, flow.spherical_average, flow.volume_average):
        assert fn(u, np.zeros(3), 0.7, quad3) == pytest.approx(c, abs=1e-12)


def test_kernel_averages_match_radial_reduction(quad4):
    # u = K_3 on R^4: S(r) = K_3(r) exactly, V(r) = (4/3) K_3(r)
    u = flow.riesz_kernel_field(1.0, 3.0, 4)
    spec = riesz.KernelSpec(p=3.0)
    for r in (0.25, 1.0, 2.0):
        assert flow.spherical_average(u, np.zeros(4), r, quad4) == pytest.approx(
            riesz.kernel(spec, r), rel=1e-12
        )
        assert flow.volume_average(u, np.zeros(4), r, quad4) == pytest.approx(
            4.0 / 3.0 * riesz.kernel(spec, r), rel=1e-6
        )


def test_log_modulus_max_is_exact(quad4):
    u = flow.log_modulus_coordinate_field(2)
    for r in (0.3, 1.0, 5.0):
        assert flow.spherical_max(u, np.zeros(4), r, quad4) == pytest.approx(math.log(r))


def test_log_modulus_spherical_constant(quad4):
    # mean of log|z_1| over the unit 3-sphere is -1/2
    u = flow.log_modulus_coordinate_field(2)
    assert flow.spherical_average(u, np.zeros(4), 1.0, quad4) == pytest.approx(-0.5, abs=2e-3)


def test_sampled_max_inflation_covers_supremum(quad3):
    # non-radial smooth field: sampled max plus inflation must reach the
    # true supremum on the sphere
    a = np.diag([3.0, -1.0, 0.5])
    u = flow.quadratic_field(a)
    m = flow.spherical_max(u, np.zeros(3), 1.0, quad3)
    assert m >= 1.5   # true sup is lam_max / 2; inflation must cover it
    assert m <= 2.0   # without being wildly conservative


def test_average_requires_positive_radius(quad3):
    u = flow.zero_field(3)
    with pytest.raises(DomainError):
        flow.spherical_average(u, np.zeros(3), 0.0, quad3)


def test_average_rejects_domain_overflow(quad3):
    u = flow.ScalarField(n=3, values=lambda pts: np.zeros(np.asarray(pts).shape[0]),
                         domain_radius=1.0)
    with pytest.raises(DomainError):
        flow.spherical_average(u, np.zeros(3), 2.0, quad3)


# ---------------------------------------------------------------------------
# tangential flow
# ---------------------------------------------------------------------------


def test_kernel_flow_invariance():
    for p in (1.5, 3.0):
        u = flow.riesz_kernel_field(2.0, p, 3)
        assert flow.flow_invariance_defect(u, p) <= 1e-12


def test_log_flow_invariance():
    u = flow.log_modulus_coordinate_field(2)
    assert flow.flow_invariance_defect(u, 2.0) <= 1e-12


def test_partial_kernel_flow_invariance_pointwise():
    u = flow.partial_kernel_field(3.0, 2, 4)
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((64, 4))
    for r in (0.3, 1.0, 4.0):
        flowed = flow.tangent_flow(u, 3.0, r)
        assert np.abs(flowed.values(pts) - u.values(pts)).max() <= 1e-12


def test_flow_semigroup_power_case():
    u = flow.catalog_field("plus_quadratic", flow.riesz_kernel_field(1.0, 3.0, 3), 1.0)
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((50, 3))
    r, s = 0.5, 0.25
    once = flow.tangent_flow(flow.tangent_flow(u, 3.0, r), 3.0, s)
    direct = flow.tangent_flow(u, 3.0, r * s)
    assert np.abs(once.values(pts) - direct.values(pts)).max() <= 1e-12


def test_flow_semigroup_log_case(quad4):
    # for p = 2 the two routes differ by M(u_r, s) - (M(u, rs) - M(u, r)),
    # which vanishes because the maxima nest exactly
    u = flow.log_modulus_coordinate_field(2)
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((50, 4))
    r, s = 0.5, 0.25
    once = flow.tangent_flow(flow.tangent_flow(u, 2.0, r, quad4), 2.0, s, quad4)
    direct = flow.tangent_flow(u, 2.0, r * s, quad4)
    assert np.abs(once.values(pts) - direct.values(pts)).max() <= 1e-9


def test_flow_needs_finite_origin_value_below_two():
    u = flow.log_modulus_coordinate_field(2)  # -inf at the origin
    with pytest.raises(DomainError):
        flow.tangent_flow(u, 1.5, 0.5)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("theta,p,n", [(3.0, 3.0, 4), (1.0, 2.5, 5), (2.0, 1.5, 3)])
def test_kernel_density_suite(theta, p, n):
    u = flow.riesz_kernel_field(theta, p, n)
    rep = flow.densities(u, np.zeros(n), p)
    assert rep.theta["M"] == pytest.approx(theta, abs=1e-3)
    assert rep.theta["S"] == pytest.approx(theta, abs=1e-3)
    assert rep.theta["V"] == pytest.approx(theta * n / (n - p + 2.0), rel=1e-2)
    assert rep.residuals["spherical_vs_volume"] <= 1e-2
    assert rep.monotone_ok


def test_log_modulus_density_relations(quad4):
    u = flow.log_modulus_coordinate_field(2)
    rep = flow.densities(u, np.zeros(4), 2.0, quad=quad4)
    for kind in ("M", "S", "V"):
        assert rep.theta[kind] == pytest.approx(1.0, rel=1e-2)
    assert rep.residuals["max_vs_spherical"] <= 1e-2
    assert rep.residuals["spherical_vs_volume"] <= 1e-2
    assert rep.monotone_ok


def test_smooth_field_zero_density(quad3):
    u = flow.quadratic_field(np.diag([1.0, 2.0, 0.5]))
    rep = flow.densities(u, np.zeros(3), 3.0, quad=quad3)
    for kind in ("M", "S", "V"):
        assert abs(rep.theta[kind]) <= 1e-6 + rep.noise_bound


def test_density_quotients_monotone_across_scales():
    u = flow.riesz_kernel_field(1.0, 3.0, 4)
    rep = flow.densities(u, np.zeros(4), 3.0)
    for kind in ("M", "S", "V"):
        q = rep.quotients[kind]
        assert np.all(np.diff(q) <= 1e-6 + rep.noise_bound)


def test_density_rejects_heavy_clipping(quad3):
    u = flow.ScalarField(
        n=3,
        values=lambda pts: np.where(np.asarray(pts)[:, 0] > 0.0, -np.inf, 0.0),
    )
    with pytest.raises(NumericalError):
        flow.densities(u, np.zeros(3), 3.0, quad=quad3)


def test_density_rejects_infinite_p(quad3):
    with pytest.raises(DomainError):
        flow.densities(flow.zero_field(3), np.zeros(3), math.inf, quad=quad3)


def test_harnack_constants():
    assert flow.harnack_constant(2) == pytest.approx((math.e + 1.0) / (math.e - 1.0), abs=1e-12)
    assert flow.harnack_constant(2) == pytest.approx(2.1640, abs=1e-4)
    assert flow.harnack_constant(4) > flow.harnack_constant(3) > 1.0


# ---------------------------------------------------------------------------
# mass density
# ---------------------------------------------------------------------------


def test_newtonian_mass_density(quad3):
    u = flow.newtonian_potential_field(3.0, [(1.0, np.zeros(3))], 3)
    rep = flow.mass_density(u, np.zeros(3), 3.0, radii=0.5 ** np.arange(1, 7), quad=quad3)
    four_pi = 4.0 * math.pi
    assert np.abs(rep.ball_masses / four_pi - 1.0).max() <= 0.02
    assert rep.theta_mass == pytest.approx(four_pi, rel=0.02)
    assert rep.spherical_residual <= 0.02


def test_harmonic_field_has_no_mass(quad3):
    # a coordinate function is harmonic: the flux vanishes
    u = flow.ScalarField(n=3, values=lambda pts: np.asarray(pts)[:, 0], reference_value=0.0)
    rep = flow.mass_density(u, np.zeros(3), 3.0, radii=0.5 ** np.arange(1, 5), quad=quad3)
    assert np.abs(rep.ball_masses).max() <= 5e-3  # pure quadrature bias


def test_mass_density_requires_n_at_least_three():
    u = flow.zero_field(2)
    with pytest.raises(DomainError):
        flow.mass_density(u, np.zeros(2), 2.0)


# ---------------------------------------------------------------------------
# tangent experiments
# ---------------------------------------------------------------------------


def test_radial_perturbed_flows_to_kernel():
    u = flow.plus_quadratic_field(flow.riesz_kernel_field(1.0, 3.0, 4), 2.0)
    cand = flow.riesz_kernel_field(1.0, 3.0, 4)
    rec = flow.tangent_experiment(u, flow.FlowSpec(p=3.0), cand, metric="sup", tol=1e-3)
    assert rec.converged
    assert np.all(np.diff(rec.distances) < 0.0)


def test_two_mass_potential_flows_to_kernel():
    masses = [(2.0, np.zeros(4)), (1.0, np.array([0.9, 0.0, 0.0, 0.0]))]
    u = flow.newtonian_potential_field(3.0, masses, 4)
    cand = flow.riesz_kernel_field(2.0, 3.0, 4)
    rec = flow.tangent_experiment(u, flow.FlowSpec(p=3.0), cand, metric="l1", tol=1e-2)
    assert rec.converged


def test_smooth_field_flows_to_zero():
    u = flow.quadratic_field(1.0, 4)
    rec = flow.tangent_experiment(u, flow.FlowSpec(p=3.0), flow.zero_field(4),
                                  metric="sup", tol=1e-3)
    assert rec.converged


def test_average_stability_along_flow(quad4):
    # averages of the flowed fields converge to the averages of the limit
    u = flow.plus_quadratic_field(flow.riesz_kernel_field(1.0, 3.0, 4), 2.0)
    limit = flow.riesz_kernel_field(1.0, 3.0, 4)
    gaps = []
    for r in (0.25, 0.0625, 0.015625):
        flowed = flow.tangent_flow(u, 3.0, r)
        gap = 0.0
        for kind, fn in (("M", flow.spherical_max), ("S", flow.spherical_average),
                         ("V", flow.volume_average)):
            gap = max(gap, abs(fn(flowed, np.zeros(4), 1.0, quad4)
                               - fn(limit, np.zeros(4), 1.0, quad4)))
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] <= 1e-4


def test_tangent_density_matches_source_density(quad4):
    # theta of every computed tangent equals theta of the source field
    u = flow.plus_quadratic_field(flow.riesz_kernel_field(1.0, 3.0, 4), 2.0)
    limit = flow.riesz_kernel_field(1.0, 3.0, 4)
    rep_u = flow.densities(u, np.zeros(4), 3.0, quad=quad4)
    rep_t = flow.densities(limit, np.zeros(4), 3.0, quad=quad4)
    for kind in ("M", "S", "V"):
        combined = rep_u.bracket[kind] + rep_t.bracket[kind] + 1e-6
        assert abs(rep_u.theta[kind] - rep_t.theta[kind]) <= combined


def test_averages_of_tangent_kernel():
    rep = flow.averages_of_tangent_check(flow.riesz_kernel_field(3.0, 3.0, 4), 3.0)
    assert rep.passed and rep.worst_violation <= 1e-9


def test_averages_of_tangent_log_modulus(quad4):
    rep = flow.averages_of_tangent_check(flow.log_modulus_coordinate_field(2), 2.0,
                                         quad=quad4)
    assert rep.passed
    assert "S-const" in rep.note


def test_averages_of_tangent_partial_kernel():
    u = flow.partial_kernel_field(3.0, 2, 4)
    rep = flow.averages_of_tangent_check(u, 3.0, kinds=("M",))
    assert rep.passed


# ---------------------------------------------------------------------------
# catalog fields
# ---------------------------------------------------------------------------


def test_partial_kernel_hessian_on_min_max_boundary():
    p, m, n = 3.0, 2, 4
    u = flow.partial_kernel_field(p, m, n)
    f = subeq.builtin("min-max", n, p=p)
    rng = np.random.default_rng(8)
    for _ in range(25):
        x = rng.standard_normal(n)
        exact = flow.partial_kernel_hessian(p, m, x)
        # margin vanishes identically off the singular slice
        assert abs(f.margin(exact)) <= 1e-8
        vals = linalg.ordered_eigenvalues(exact)
        r = np.linalg.norm(x[:m])
        expected = np.sort(np.r_[-(p - 1.0), np.zeros(n - m), np.ones(m - 1)] / r**p)
        assert np.allclose(vals, expected, atol=1e-10)
    # finite differences agree with the closed form
    x = np.array([0.8, -0.5, 0.3, 1.1])
    fd = linalg.finite_diff_hessian(u, x)
    exact = flow.partial_kernel_hessian(p, m, x)
    assert np.linalg.norm(fd - exact) <= 1e-6 * (1.0 + np.linalg.norm(exact))


def test_max_of_kernels_certification_and_values():
    a = np.array([1.0, 0.0, 0.0])
    k0 = flow.riesz_kernel_field(1.0, 1.5, 3)
    k1 = flow.riesz_kernel_field(1.0, 1.5, 3, center=a)
    u = flow.max_of_fields(k0, k1)
    assert set(u.certified_for) == set(k0.certified_for) & set(k1.certified_for)
    pts = np.array([[0.2, 0.0, 0.0], [0.9, 0.0, 0.0]])
    expected = np.maximum(k0.values(pts), k1.values(pts))
    assert np.allclose(u.values(pts), expected)


def test_newtonian_single_mass_equals_kernel():
    u = flow.newtonian_potential_field(3.0, [(2.0, np.zeros(3))], 3)
    k = flow.riesz_kernel_field(2.0, 3.0, 3)
    pts = np.random.default_rng(0).standard_normal((40, 3))
    assert np.allclose(u.values(pts), k.values(pts), atol=1e-12)


def test_catalog_lookup_errors():
    with pytest.raises(DomainError):
        flow.catalog_field("no-such-field")


# ---------------------------------------------------------------------------
# density decay and upper semicontinuity
# ---------------------------------------------------------------------------


def test_density_decay_along_ray(quad3):
    a = np.array([1.0, 0.0, 0.0])
    u = flow.newtonian_potential_field(2.0, [(1.0, np.zeros(3)), (1.0, a)], 3)
    path = [np.array([0.0, 0.0, 1.0]) * 2.0 ** (-k) for k in range(2, 10)]
    rep = flow.density_decay_check(u, np.zeros(3), path, 2.0, quad=quad3)
    assert rep.center_theta == pytest.approx(1.0, rel=0.01)
    assert np.all(rep.path_thetas[rep.path_norms <= 2.0**-8] <= 1e-3)
    assert rep.usc_ok


def test_decay_rejects_singular_path_point(quad3):
    u = flow.riesz_kernel_field(1.0, 2.0, 3)
    with pytest.raises(DomainError):
        flow.density_decay_check(u, np.zeros(3), [np.zeros(3)], 2.0, quad=quad3)


# ---------------------------------------------------------------------------
# Hoelder machinery
# ---------------------------------------------------------------------------


def test_holder_estimate_constant_field(quad3):
    u = flow.ScalarField(n=3, values=lambda pts: np.full(np.asarray(pts).shape[0], 3.0),
                         reference_value=3.0, analytic_max=lambda x0, r: 3.0)
    assert flow.holder_estimate(u, np.zeros(3), 0.2, 1.0, 1.5, quad3) == pytest.approx(0.0)


def test_infinitesimal_holder_of_kernel():
    u = flow.riesz_kernel_field(1.0, 1.5, 3)
    got = flow.infinitesimal_holder(u, np.zeros(3), 1.5, radii=0.5 ** np.arange(9))
    assert got == pytest.approx(1.0, abs=1e-12)


def test_holder_bound_dominates_sampled_quotients(quad3):
    p, alpha = 1.5, 0.5
    u = flow.riesz_kernel_field(1.0, p, 3)
    rho, big_r = 0.3, 1.0
    bound = flow.holder_estimate(u, np.zeros(3), rho, big_r, p, quad3)
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((1000, 3))
    pts = rho * pts / np.linalg.norm(pts, axis=1)[:, None]
    pts *= rng.uniform(0.0, 1.0, 1000)[:, None] ** (1.0 / 3.0)
    vals = u.values(pts)
    ii = rng.integers(0, 1000, 2000)
    jj = rng.integers(0, 1000, 2000)
    keep = ii != jj
    quot = np.abs(vals[ii[keep]] - vals[jj[keep]]) / np.linalg.norm(
        pts[ii[keep]] - pts[jj[keep]], axis=1
    ) ** alpha
    assert quot.max() <= bound


def test_holder_flow_seminorm_bound():
    p = 1.5
    u = flow.riesz_kernel_field(1.0, p, 3)
    rec = flow.tangent_experiment(u, flow.FlowSpec(p=p), flow.riesz_kernel_field(1.0, p, 3),
                                  metric="sup", tol=1e-3)
    assert rec.converged
    assert rec.holder_bound_ok
    assert rec.holder_seminorms.max() <= rec.holder_bound * (1.0 + 1e-6)


def test_holder_metric_distance():
    p = 1.5
    u = flow.riesz_kernel_field(1.0, p, 3)
    rec = flow.tangent_experiment(u, flow.FlowSpec(p=p), flow.riesz_kernel_field(1.0, p, 3),
                                  metric="holder", beta=0.3, tol=1e-6)
    assert rec.converged


def test_holder_parameter_validation(quad3):
    u = flow.riesz_kernel_field(1.0, 1.5, 3)
    with pytest.raises(DomainError):
        flow.holder_estimate(u, np.zeros(3), 0.5, 1.0, 1.5, quad3)  # 3 rho > R
    with pytest.raises(DomainError):
        flow.holder_estimate(u, np.zeros(3), 0.2, 1.0, 3.0, quad3)  # p >= 2


def test_ray_limit_equivalence():
    # (u(y) - u(0)) / |y|^alpha approaches the max-density along rays
    p, alpha = 1.5, 0.5
    u = flow.riesz_kernel_field(1.0, p, 3)
    rng = np.random.default_rng(9)
    rays = rng.standard_normal((20, 3))
    rays /= np.linalg.norm(rays, axis=1)[:, None]
    vals = (u.values(1e-6 * rays) - u.at(np.zeros(3))) / 1e-6**alpha
    assert np.abs(vals - 1.0).max() <= 1e-3


def test_holder_metric_validates_beta():
    u = flow.riesz_kernel_field(1.0, 1.5, 3)
    with pytest.raises(DomainError):
        flow.tangent_experiment(u, flow.FlowSpec(p=1.5), u, metric="holder", beta=0.9)
    with pytest.raises(DomainError):
        flow.tangent_experiment(u, flow.FlowSpec(p=3.0), u, metric="holder", beta=0.1)


def test_average_of_fully_singular_sphere_rejected(quad3):
    u = flow.ScalarField(n=3, values=lambda pts: np.full(np.asarray(pts).shape[0], -np.inf))
    with pytest.raises(DomainError):
        flow.spherical_average(u, np.zeros(3), 1.0, quad3)


def test_max_curve_nondecreasing_for_subharmonic_fields(quad4):
    # on a ball, the spherical maximum coincides with the ball supremum
    # and must grow with the radius
    radii_up = np.array([2.0, 1.0, 0.5, 0.25, 0.125])
    for u in (flow.riesz_kernel_field(1.0, 3.0, 4),
              flow.log_modulus_coordinate_field(2),
              flow.partial_kernel_field(3.0, 2, 4)):
        curve = flow.average_curve(u, "M", np.zeros(4), radii_up, quad4)
        assert np.all(np.diff(curve.values) <= 1e-12)  # radii descend, so M descends


def test_density_at_p_equal_one(quad3):
    # p = 1 has no two-sided max/spherical comparison constant; only the
    # one-sided inequality is reported
    u = flow.riesz_kernel_field(1.0, 1.0, 3)
    rep = flow.densities(u, np.zeros(3), 1.0, quad=quad3)
    assert rep.theta["M"] == pytest.approx(1.0, abs=1e-3)
    assert "comparison_upper" not in rep.residuals
    assert rep.residuals["comparison_lower"] <= 1e-9


def test_decay_along_smooth_ray_of_pure_kernel(quad3):
    # the kernel is smooth away from its pole, so path densities vanish
    u = flow.riesz_kernel_field(1.0, 2.0, 3)
    path = [np.array([1.0, 0.0, 0.0]) * 2.0 ** (-k) for k in range(1, 6)]
    rep = flow.density_decay_check(u, np.zeros(3), path, 2.0, quad=quad3, levels=10)
    assert np.all(rep.path_thetas <= 1e-6)
    assert rep.center_theta == pytest.approx(1.0, rel=1e-6)


def test_partial_kernel_max_quotients_monotone(quad4):
    # the max average obeys the double monotonicity even for the
    # non-convex certification of the partial kernel
    u = flow.partial_kernel_field(3.0, 2, 4)
    rep = flow.densities(u, np.zeros(4), 3.0, quad=quad4, kinds=("M",))
    assert rep.monotone_ok
