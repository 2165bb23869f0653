"""Entropic transport between node groups of latent-space random graphs.

The package estimates the transport cost between two groups of graph nodes
three ways: shortest-path geodesics on a connectivity graph, spectral
thresholding of the adjacency matrix, and the raw cross-group adjacency
block solved inside a box of dual potentials.  Stability ceilings tie every
estimate's transport error to the measurable cost or kernel perturbation.
"""

from .cost_estimators import (
    CostMap,
    Eigendecomposition,
    HopMatrix,
    UsvtParams,
    cost_from_distances,
    fast_kernel_block,
    geodesic_estimate,
    hop_counts,
    usvt,
    usvt_cost_block,
    usvt_from_eigen,
)
from .diagnostics import DiscrepancyReport, RateFit, discrepancy, fit_rate, operator_norm
from .errors import (
    ConfigError,
    DensityMisconfiguredError,
    InvalidParameterError,
    LatentOtError,
    NumericFailureError,
    TargetsDisconnectedError,
    UnboundedDualError,
)
from .latent_models import (
    Circle,
    Density,
    GaussianPowerKernel,
    Graph,
    LatentConfiguration,
    LocalKernel,
    Manifold,
    NonlocalKernel,
    Placement,
    Sphere,
    UnitSquare,
    dense_rho,
    eps_graph,
    h_schedule,
    make_manifold,
    sample_kernel_graph,
    sample_latents,
    sparse_log_rho,
    true_kernel_matrix,
)
from .ot_core import (
    BOUND_SLACK_TOLERANCE,
    BoundCheck,
    CostMatrix,
    DiscreteDistribution,
    DualPotentials,
    GibbsKernel,
    OtResult,
    SolverConfig,
    StabilityReport,
    TransportPlan,
    center_potentials,
    dual_ascent_boxed,
    dual_value,
    exact_ot_assignment,
    gibbs_kernel,
    kl_plans,
    min_box_radius,
    primal_value,
    sinkhorn,
    stability_report,
)
from .rng import RngSeed, Xoshiro256StarStar

__version__ = "0.1.0"

__all__ = [
    "BOUND_SLACK_TOLERANCE",
    "BoundCheck",
    "Circle",
    "ConfigError",
    "CostMap",
    "CostMatrix",
    "Density",
    "DensityMisconfiguredError",
    "DiscrepancyReport",
    "DiscreteDistribution",
    "DualPotentials",
    "Eigendecomposition",
    "GaussianPowerKernel",
    "GibbsKernel",
    "Graph",
    "HopMatrix",
    "InvalidParameterError",
    "LatentConfiguration",
    "LatentOtError",
    "LocalKernel",
    "Manifold",
    "NonlocalKernel",
    "NumericFailureError",
    "OtResult",
    "Placement",
    "RateFit",
    "RngSeed",
    "SolverConfig",
    "Sphere",
    "StabilityReport",
    "TargetsDisconnectedError",
    "TransportPlan",
    "UnboundedDualError",
    "UnitSquare",
    "UsvtParams",
    "Xoshiro256StarStar",
    "center_potentials",
    "cost_from_distances",
    "dense_rho",
    "discrepancy",
    "dual_ascent_boxed",
    "dual_value",
    "eps_graph",
    "exact_ot_assignment",
    "fast_kernel_block",
    "fit_rate",
    "geodesic_estimate",
    "gibbs_kernel",
    "h_schedule",
    "hop_counts",
    "kl_plans",
    "make_manifold",
    "min_box_radius",
    "operator_norm",
    "primal_value",
    "sample_kernel_graph",
    "sample_latents",
    "sinkhorn",
    "sparse_log_rho",
    "stability_report",
    "true_kernel_matrix",
    "usvt",
    "usvt_cost_block",
    "usvt_from_eigen",
    "__version__",
]
