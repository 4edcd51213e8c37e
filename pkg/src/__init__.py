# Cyclicity lab - Module Exports
from .config import Config
from .exceptions import LabError, ValidationError, ProfileResolutionError, NumericalInstabilityError
from .series_core import (SpaceParams, MultiIndex, PowerSeries, dalpha_norm, dalpha_inner, radial_derivative,
                          dilate, multiply, reciprocal, evaluate, evaluate_many, coefficients_from_evaluator,
                          bergman_norm_quadrature)
from .ball_geometry import (BallPoint, CurveChart, koranyi_distance, curve_point, curve_points,
                            koranyi_dist_to_set, adaptive_dist_to_set, distance_exponent_check, sphere_samples)
from .boundary_sets import (CantorSpec, IntervalSet, MeasureProfile, ProductBoundarySet, cantor_build,
                            cantor_preset, dissect, fat_cantor_build, neighborhood_measure, measure_profile,
                            covering_number, greedy_cover, kset_check, porosity_constant, product_set)
from .capacity import (RieszKernelParams, DiscreteMeasure, riesz_kernel, energy, energy_layer_cake,
                       natural_cantor_measure, product_measure, ball_measure_profile, critical_alpha_capacity,
                       energy_growth)
from .constructions import (BumpFunction, PsiSeries, bump_sum, surrogate_H, build_psi_series, psi_series,
                            psi_derivative_bound, f_exp, psi_exp_series, outer_surrogate)
from .cyclicity import (DilationSweep, quotient_norm_sweep, opt_approximant_distance, square_ordering,
                        multiplier_heuristic, chain_verify, implied_critical_alpha, chain_crosscheck_4d,
                        layer_cake_check, estimate_critical_index)

__all__ = [
    'Config',
    'LabError',
    'ValidationError',
    'ProfileResolutionError',
    'NumericalInstabilityError',
    'SpaceParams',
    'MultiIndex',
    'PowerSeries',
    'dalpha_norm',
    'dalpha_inner',
    'radial_derivative',
    'dilate',
    'multiply',
    'reciprocal',
    'evaluate',
    'evaluate_many',
    'coefficients_from_evaluator',
    'bergman_norm_quadrature',
    'BallPoint',
    'CurveChart',
    'koranyi_distance',
    'curve_point',
    'curve_points',
    'koranyi_dist_to_set',
    'adaptive_dist_to_set',
    'distance_exponent_check',
    'sphere_samples',
    'CantorSpec',
    'IntervalSet',
    'MeasureProfile',
    'ProductBoundarySet',
    'cantor_build',
    'cantor_preset',
    'dissect',
    'fat_cantor_build',
    'neighborhood_measure',
    'measure_profile',
    'covering_number',
    'greedy_cover',
    'kset_check',
    'porosity_constant',
    'product_set',
    'RieszKernelParams',
    'DiscreteMeasure',
    'riesz_kernel',
    'energy',
    'energy_layer_cake',
    'natural_cantor_measure',
    'product_measure',
    'ball_measure_profile',
    'critical_alpha_capacity',
    'energy_growth',
    'BumpFunction',
    'PsiSeries',
    'bump_sum',
    'surrogate_H',
    'build_psi_series',
    'psi_series',
    'psi_derivative_bound',
    'f_exp',
    'psi_exp_series',
    'outer_surrogate',
    'DilationSweep',
    'quotient_norm_sweep',
    'opt_approximant_distance',
    'square_ordering',
    'multiplier_heuristic',
    'chain_verify',
    'implied_critical_alpha',
    'chain_crosscheck_4d',
    'layer_cake_check',
    'estimate_critical_index',
]
