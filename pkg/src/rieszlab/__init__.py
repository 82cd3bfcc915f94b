"""Numerical toolkit for fully nonlinear degenerate-elliptic cone
subequations: membership algebra, Riesz characteristics and kernels,
radial one-variable theory, tangential flows and density estimation."""

from ._accel import backend_name, worker_count
from .errors import (
    DomainError,
    InvariantError,
    NumericalError,
    RieszlabError,
    SolverError,
)
from .linalg import (
    ComplexStructure,
    Frame,
    QuaternionStructure,
    SymMatrix,
    elementary_symmetric,
    finite_diff_hessian,
    hermitian_part,
    ordered_eigenvalues,
    projector_onto,
    projector_perp,
    radial_hessian,
    random_orthonormal_frame,
    random_psd,
    random_rotation,
    reduced_eigenvalues,
    trace_over_subspace,
)
from .subeq import (
    GrassmannSample,
    PropertyReport,
    Subequation,
    builtin,
    check_cone,
    check_maximum_principle,
    check_positivity,
    check_st_invariance,
    check_uniform_ellipticity,
    complex_lift,
    dual,
    garding_branch,
    geometric,
    quaternionic_lift,
    sample_grassmannian,
    transitivity_check,
    uniform_elliptic_regularization,
)
from .riesz import (
    CharacteristicPair,
    KernelSpec,
    characteristic_pair,
    decreasing_characteristic,
    increasing_characteristic,
    kernel,
    kernel_deriv1,
    kernel_deriv2,
    kernel_hessian,
    kernel_inverse,
    radial_harmonic_check,
    sandwich_check,
)
from .radial import (
    OneVarJet,
    RadialProfile,
    classify_profile,
    kernel_profile,
    kp_convexity_test,
    monotone_quotient,
    one_var_density,
    rf_membership,
    rp_up_membership,
    rq_down_membership,
)
from .flow import (
    DensityReport,
    FlowSpec,
    ScalarField,
    SphereQuad,
    averages_of_tangent_check,
    catalog_field,
    densities,
    density_decay_check,
    harnack_constant,
    holder_estimate,
    infinitesimal_holder,
    mass_density,
    spherical_average,
    spherical_max,
    sphere_quad,
    tangent_experiment,
    tangent_flow,
    volume_average,
)

__version__ = "0.1.0"
