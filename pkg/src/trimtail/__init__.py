"""Trimmed L-statistics, their Winsorized approximation, and the Monte Carlo
experiments that probe the normal-tail behavior of the normalized statistic."""

from .bounds import (DeviationRange, deviation_range, hoeffding_binomial_bound,
                     mills_approx, normal_density, normal_tail, uniform_os_bound)
from .distributions import (DistributionModel, HolderInfo, SampleFrame, empirical_inverse,
                            exponential_model, make_model, normal_model, pareto_model,
                            quantile_eval, uniform_model)
from .engine import (RemainderLadder, SimulationConfig, TailRow, TailTable, VarianceLadder,
                     remainder_scaling, seed_stream, simulate_tail_table, variance_ratio,
                     wilson_interval)
from .errors import (AssumptionError, CapabilityError, ConfigError, DomainError,
                     NumericError, TrimtailError)
from .lstat import (NormalizedStatistic, asymptotic_sigma2, centering_mu, normalize,
                    step_weight_integral, trimmed_lstat)
from .quadrature import adaptive_gl, fixed_gl, signed_adaptive, stieltjes_1d, stieltjes_2d_kernel
from .weights import (TrimSpec, WeightFunction, WeightScheme, cell_integrals,
                      clamped_poly_weight, condition_iv_statistic, constant_weight,
                      extended_weight, generated_weights, linear_weight,
                      load_coefficients_csv, make_weight, quadratic_weight, verify_lipschitz)
from .winsor import (DecompositionContext, DecompositionReport, WinsorizedModel,
                     approx_centering, approx_lstat, case_ordering, clamp_counts,
                     decomposition_report, remainder_r1, remainder_r2,
                     weight_perturbation_vn, winsorize)

__version__ = "0.1.0"
