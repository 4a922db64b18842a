"""Pointwise dilation analysis for quasiconformal maps, the operators that
govern extremal stretching, and desk-scale solvers built on them.

The package splits into small layers: matrix kernels (tensor), the finite
and limiting operators with their ellipticity witnesses (operators), exact
model maps and composition (maps), flow-line tracing (flowlines), boundary
trace relations (traces), a grid gradient flow (gradientflow), and the
verification suites behind the command line (verify, cli).
"""

from .errors import (
    AllRowsDegenerate,
    AxisExcluded,
    ConfigError,
    DegenerateTangentImage,
    DeterminantCollapse,
    GuardViolation,
    HypothesisViolated,
    NonFiniteValue,
    NonPositiveDeterminant,
    OriginExcluded,
    QcflowError,
    RowSwitched,
    SeamExcluded,
    StepFailure,
    UnknownMap,
    UnknownSuite,
    UnsupportedRegime,
)
from .tensor import (
    DilationReport,
    ahlfors,
    analyze,
    cofactor,
    distortion_tensor,
    factoring_residual,
    hs_norm,
    trace_dilation,
)
from .operators import (
    ASYMPTOTIC_SIGN,
    EllipticityWitness,
    Jet2Sample,
    b_tensor,
    dilation_gradient,
    flux,
    flux_linearization,
    lh_witness,
    linfty_factored,
    linfty_flowform,
    lp_asymptotic_ratio,
    lp_divergence,
    lp_nondiv,
)
from .maps import (
    ConformalMap,
    SmoothMap,
    SphereBump,
    affine_map,
    bump_map,
    compose,
    competitor_perturbation,
    fd_map,
    identity_map,
    make_map,
    map_ids,
    moebius,
    polynomial_map,
    radial_ksq,
    radial_lp,
    radial_sg,
    radial_stretch,
    teichmuller_example,
    teichmuller_map,
    wedge_map,
    wedge_sector_constants,
)
from .flowlines import (
    FlowTrajectory,
    ball_domain,
    du_recovery_check,
    flow_field,
    path_integral_residual,
    select_row,
    trace_flowline,
)
from .traces import (
    AdaptedFrame,
    CriticalEqualityRecord,
    Hyperplane,
    Sphere,
    TraceInequalityRecord,
    adapted_frame,
    critical_equality_check,
    eigen_aligned_linear,
    tangential_dilation,
    trace_inequality_check,
)
from .gradientflow import (
    FlowRunStats,
    GridField,
    compatibility_check,
    dtmax,
    energy,
    explicit_step,
    interior_operator,
    make_grid,
    read_snapshot,
    run_flow,
    write_snapshot,
)
from .verify import random_jet, random_moebius, run_suite, suite_names

__version__ = "0.1.0"

__all__ = [
    "ASYMPTOTIC_SIGN",
    "AdaptedFrame",
    "AllRowsDegenerate",
    "AxisExcluded",
    "ConfigError",
    "ConformalMap",
    "CriticalEqualityRecord",
    "DegenerateTangentImage",
    "DeterminantCollapse",
    "DilationReport",
    "EllipticityWitness",
    "FlowRunStats",
    "FlowTrajectory",
    "GridField",
    "GuardViolation",
    "Hyperplane",
    "HypothesisViolated",
    "Jet2Sample",
    "NonFiniteValue",
    "NonPositiveDeterminant",
    "OriginExcluded",
    "QcflowError",
    "RowSwitched",
    "SeamExcluded",
    "SmoothMap",
    "Sphere",
    "SphereBump",
    "StepFailure",
    "TraceInequalityRecord",
    "UnknownMap",
    "UnknownSuite",
    "UnsupportedRegime",
    "adapted_frame",
    "affine_map",
    "ahlfors",
    "analyze",
    "b_tensor",
    "ball_domain",
    "bump_map",
    "cofactor",
    "compatibility_check",
    "compose",
    "competitor_perturbation",
    "critical_equality_check",
    "dilation_gradient",
    "distortion_tensor",
    "dtmax",
    "du_recovery_check",
    "eigen_aligned_linear",
    "energy",
    "explicit_step",
    "factoring_residual",
    "fd_map",
    "flow_field",
    "flux",
    "flux_linearization",
    "hs_norm",
    "identity_map",
    "interior_operator",
    "lh_witness",
    "linfty_factored",
    "linfty_flowform",
    "lp_asymptotic_ratio",
    "lp_divergence",
    "lp_nondiv",
    "make_grid",
    "make_map",
    "map_ids",
    "moebius",
    "path_integral_residual",
    "polynomial_map",
    "radial_ksq",
    "radial_lp",
    "radial_sg",
    "radial_stretch",
    "random_jet",
    "random_moebius",
    "read_snapshot",
    "run_flow",
    "run_suite",
    "select_row",
    "suite_names",
    "tangential_dilation",
    "teichmuller_example",
    "teichmuller_map",
    "trace_dilation",
    "trace_flowline",
    "trace_inequality_check",
    "wedge_map",
    "wedge_sector_constants",
    "write_snapshot",
]
