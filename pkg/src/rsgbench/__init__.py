"""Randomized stochastic gradient methods and their benchmark harness.

The package implements the randomized stochastic gradient method (rsg), its
two-phase large-deviation variant (two-rsg) and their gradient-free
counterparts (rsgf, two-rsgf), together with pure evaluators for every
convergence and deviation bound they carry and a statistical verification
harness (CLI and FastAPI service) that checks those bounds empirically.
"""

__version__ = "0.1.0"

from .bounds import (BoundReport, DeviationBound, budget_totals, compute_BN,
                     compute_BN_bar, compute_Df, compute_DN, compute_DX,
                     convex_expectation_bound, deviation_threshold_2rsg,
                     deviation_threshold_2rsg_light_tail,
                     deviation_threshold_2rsgf, markov_deviation,
                     martingale_deviation_check, plan_bound_fgap,
                     plan_bound_gradnorm, zeroth_convex_expectation_bound,
                     zeroth_plan_bound_fgap, zeroth_plan_bound_gradnorm)
from .config import ExperimentConfig, parse_config_file, parse_config_text
from .errors import (CapabilityError, ConfigError, DegenerateInputError,
                     DimensionMismatchError, DivergenceError, InputError,
                     RsgBenchError, ValidityError)
from .experiments import run_experiment
from .oracles import (FirstOrderOracle, NoiseModel, ZerothOrderOracle,
                      default_value_noise_sd, estimate_parameters,
                      light_tail_scale, reset_accounting)
from .problems import (LeastSquaresProblem, ProblemSpec, QuadraticProblem,
                       SigmoidSvmProblem, make_least_squares, make_quadratic,
                       make_sigmoid_svm, population_gradient_ls,
                       sample_loss_ls, sample_loss_svm, validate_smoothness)
from .rng import RngStream
from .rsg import (RunResult, min_gradnorm_diagnostic,
                  rsg_expected_sq_gradnorm, rsg_run)
from .rsgf import (RsgfConfig, choose_mu, fallback_D_f,
                   rsgf_expected_sq_gradnorm, rsgf_run)
from .smoothing import (SmoothedFunctionHandle, SmoothingConfig,
                        check_smoothing_bounds, estimate_smoothed,
                        gmu_estimator, second_moment_bound_check,
                        smoothed_gradient, smoothed_value)
from .stats import FrequencyEstimate, MonteCarloEstimate
from .stepsize import (StepsizePlan, TerminationDistribution,
                       constant_plan_first_order, constant_plan_zeroth_order,
                       decreasing_plan, increasing_plan, sample_R,
                       termination_distribution_first_order,
                       termination_distribution_zeroth_order)
from .two_phase import (TwoPhaseConfig, TwoPhaseResult, params_N_first_order,
                        params_N_zeroth_order, params_S,
                        params_T_first_order, params_T_light_tail,
                        params_T_zeroth_order, run_two_phase)
