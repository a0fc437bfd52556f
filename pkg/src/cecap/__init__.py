"""Capacity of constant-norm inputs over a two-branch Gaussian channel.

The package computes the capacity-achieving finite input distribution for a
diagonal 2x2 Gaussian channel driven by inputs of fixed Euclidean norm, plus
analytic companions: the norm threshold below which a two-point input is
optimal, the water-filling comparison, capacity bounds, small-radius
asymptotics, and Monte-Carlo degrees-of-freedom checks.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .analysis import (
    BoundsResult,
    BracketingError,
    MutualInformationEstimate,
    ThresholdComparisonRow,
    ThresholdResult,
    WaterfillingResult,
    asymptotic_capacity,
    capacity_bounds,
    norm_threshold,
    threshold_residual,
    threshold_residual_line,
    threshold_vs_waterfilling,
    uniform_sphere_mi,
    waterfilling,
)
from .channel import (
    LN_2PI,
    LN_2PIE,
    Channel,
    DiscreteCircularDistribution,
    EntropyReport,
    distribution_from_json,
    distribution_to_json,
    kernel_cartesian,
    kernel_polar,
    marginal_entropy_density,
    marginal_entropy_profile,
    monte_carlo_output_entropy,
    odd_symmetry_residual,
    output_entropy,
    output_entropy_cartesian,
    output_log_pdf_grid,
    output_pdf,
)
from .optimizer import (
    CapacityResult,
    KktReport,
    SolverConfig,
    SolverError,
    SweepEntry,
    capacity_result_to_dict,
    entropy_gradient,
    optimize_fixed_support,
    solve_capacity,
    sweep_radius,
    verify_conditions,
)
from .quadrature import (
    IntegralEstimate,
    QuadratureGrid,
    auto_node_counts,
    build_polar_grid,
    integrate_line,
    integrate_polar,
)

__all__ = [
    "__version__",
    "backend_name",
    "BoundsResult",
    "BracketingError",
    "MutualInformationEstimate",
    "ThresholdComparisonRow",
    "ThresholdResult",
    "WaterfillingResult",
    "asymptotic_capacity",
    "capacity_bounds",
    "norm_threshold",
    "threshold_residual",
    "threshold_residual_line",
    "threshold_vs_waterfilling",
    "uniform_sphere_mi",
    "waterfilling",
    "LN_2PI",
    "LN_2PIE",
    "Channel",
    "DiscreteCircularDistribution",
    "EntropyReport",
    "distribution_from_json",
    "distribution_to_json",
    "kernel_cartesian",
    "kernel_polar",
    "marginal_entropy_density",
    "marginal_entropy_profile",
    "monte_carlo_output_entropy",
    "odd_symmetry_residual",
    "output_entropy",
    "output_entropy_cartesian",
    "output_log_pdf_grid",
    "output_pdf",
    "CapacityResult",
    "KktReport",
    "SolverConfig",
    "SolverError",
    "SweepEntry",
    "capacity_result_to_dict",
    "entropy_gradient",
    "optimize_fixed_support",
    "solve_capacity",
    "sweep_radius",
    "verify_conditions",
    "IntegralEstimate",
    "QuadratureGrid",
    "auto_node_counts",
    "build_polar_grid",
    "integrate_line",
    "integrate_polar",
]
