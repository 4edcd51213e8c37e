"""
Module to add high-level semantic return types for fits, set tests and verification reports via named tuples.
"""

from typing import NamedTuple, Optional, Tuple

import numpy as np


class FitResult(NamedTuple):
    exponent: float
    intercept: float
    residual: float
    n_points: int


class SetDistance(NamedTuple):
    value: float
    resolution: int
    n_samples: int


class KSetReport(NamedTuple):
    constant: float
    coarse_constant: float
    growth: float
    passed: bool
    worst_interval: Tuple[float, float]
    n_intervals: int
    floor: float


class CriticalAlphaResult(NamedTuple):
    case: str
    alpha_c: float
    bracket: Tuple[float, float]
    evaluations: int
    growth_at_bracket: Tuple[float, float]


class BandReport(NamedTuple):
    lower: float
    upper: float
    factor: float
    n_samples: int


class DerivativeBound(NamedTuple):
    derivative: float
    distance: float
    product: float


class HolderReport(NamedTuple):
    second_difference_sup: float
    holder_quotient: float
    grid_points: int


class SweepReport(NamedTuple):
    r: np.ndarray
    derivative_norms: np.ndarray
    quotient_norms: np.ndarray
    slope: float
    truncation_stable: bool
    nonvanishing_min: float
    flags: Tuple[str, ...]


class ApproximantResult(NamedTuple):
    degrees: np.ndarray
    distances: np.ndarray
    conditions: np.ndarray


class MultiplierReport(NamedTuple):
    deltas: np.ndarray
    sups: np.ndarray
    verdict: str


class ChainReport(NamedTuple):
    case: str
    d: float
    alpha: float
    u_grid: np.ndarray
    values: np.ndarray
    fit: FitResult
    predicted_slope: float
    flags: Tuple[str, ...]


class CrossCheckReport(NamedTuple):
    case: str
    alpha: float
    u: np.ndarray
    mc_values: np.ndarray
    mc_errors: np.ndarray
    reduced_values: np.ndarray
    ratios: np.ndarray
    band: float


class LayerCakeResult(NamedTuple):
    lhs: float
    rhs: float
    relative_error: float


class CriticalIndexReport(NamedTuple):
    case: str
    d: float
    predicted: float
    alpha_c_cyclic: float
    alpha_c_capacity: float
    gap: float
    capacity_detail: Optional[CriticalAlphaResult] = None


class SquareOrderingReport(NamedTuple):
    degrees: np.ndarray
    square_distances: np.ndarray
    shifted_distances: np.ndarray
    holds: bool
