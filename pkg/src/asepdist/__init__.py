"""Distribution of a tagged particle's position in the asymmetric simple
exclusion process with step initial data, computed three independent ways:
exact Fredholm-determinant contour formulas, direct stochastic simulation,
and the large-time limit laws (fixed-m tail, weak-asymmetry crossover,
Tracy-Widom GUE edge)."""

from .params import ASEPParams, ScalingConstants, make_params, scaling_constants
from .quadrature import (SUPPORTED_BITS, Contour, KernelMatrix, NystromGrid,
                         NonFiniteKernelError, SingularMatrixError,
                         circle_grid, current_precision, discretize,
                         fredholm_det, high_precision_mode, interval_grid,
                         trace_power)
from .kernels import (KernelContext, airy_Ai, airy_kernel, epsilon,
                      euler_product, f_mu, kernel_J, kernel_K, kernel_K0,
                      kernel_K1, kernel_K1_minus_K2, kernel_K2,
                      mehler_kernel, phi, phi_inf, phi_n, resolvent_R)
from .exactdist import (DistributionPoint, NumericsConfig, prob_gt_first,
                        prob_leq, verify_identities)
from .limitdist import (CDFTable, crossover_cdf, f2_cdf, gaussian_limit_cdf,
                        theorem1_tail, theorem3_map)
from .sim import (OracleResult, SimEstimate, ctmc_oracle, ctmc_oracle_multi,
                  empirical_scaled_cdf, estimate_prob, simulate_positions)

__version__ = "0.1.0"

__all__ = [
    "ASEPParams", "ScalingConstants", "make_params", "scaling_constants",
    "SUPPORTED_BITS", "Contour", "KernelMatrix", "NystromGrid",
    "NonFiniteKernelError", "SingularMatrixError", "circle_grid",
    "current_precision", "discretize", "fredholm_det", "high_precision_mode",
    "interval_grid", "trace_power",
    "KernelContext", "airy_Ai", "airy_kernel", "epsilon", "euler_product",
    "f_mu", "kernel_J", "kernel_K", "kernel_K0", "kernel_K1",
    "kernel_K1_minus_K2", "kernel_K2", "mehler_kernel", "phi", "phi_inf",
    "phi_n", "resolvent_R",
    "DistributionPoint", "NumericsConfig", "prob_gt_first", "prob_leq",
    "verify_identities",
    "CDFTable", "crossover_cdf", "f2_cdf", "gaussian_limit_cdf",
    "theorem1_tail", "theorem3_map",
    "OracleResult", "SimEstimate", "ctmc_oracle", "ctmc_oracle_multi", "empirical_scaled_cdf",
    "estimate_prob", "simulate_positions",
    "__version__",
]
