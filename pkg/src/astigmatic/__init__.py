"""Critical curves of the energy int kappa*exp(mu/kappa) in 2-dimensional
space forms and the rotational constant astigmatism surfaces they generate."""

from .core import (
    AmbientPoint,
    DomainError,
    ModelParams,
    PhasePoint,
    embed_phi,
    kappa_from_x,
    metric_dot,
    quadric_residual,
    x_from_kappa,
)
from .euler_lagrange import (
    ConstantCurvatureSolution,
    constant_curvature_solutions,
    el_residual,
    energy_theta,
    first_integral,
    kappa_s_squared,
)
from .phase_plane import (
    OrbitTopology,
    OrbitTrace,
    SingularPoint,
    braid_window,
    orbit_x_intersections,
    singular_points,
    trace_orbit,
    vector_field_Q,
)
from .curves import (
    CurveSamples,
    arc_length_of_x,
    build_curve,
    dilation_check,
    euclidean_closed_form,
    psi_limit_at_zero,
    psi_of_x,
    solve_d_star,
)
from .classify import (
    ShapeClass,
    beta_crossings,
    classify,
    closed_curve_check,
    curvature_period,
)
from .surfaces import (
    SurfaceMesh,
    astigmatism_deviation,
    cylinder_surface,
    gauss_codazzi_residual,
    hopf_torus_radii,
    principal_curvatures,
    rotate_curve,
)
from .curves import curve_diagnostics

__version__ = "0.1.0"
