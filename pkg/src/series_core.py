"""
Truncated bivariate power series and the D_alpha(B_2) calculus on them.

Coefficients live in a dense (N+1) x (N+1) table indexed by (k1, k2);
entries with k1 + k2 > N are kept at zero and never read.
"""
from dataclasses import dataclass
from functools import lru_cache
import json
import logging
import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from .config import Config
from .exceptions import ValidationError

logger = logging.getLogger('SeriesCore')

# factorials above this total degree go through log-gamma
_EXACT_FACTORIAL_MAX = 20
_BALL_TOL = 1e-12


@dataclass(frozen=True)
class SpaceParams:
    """Space index alpha and complex dimension n of D_alpha(B_n)."""

    alpha: float
    dimension: int = 2

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dimension}")
        if not math.isfinite(self.alpha):
            raise ValidationError(f"alpha must be finite, got {self.alpha}")


class MultiIndex(NamedTuple):
    k1: int
    k2: int

    @property
    def total(self) -> int:
        return self.k1 + self.k2

    @property
    def factorial(self) -> int:
        return math.factorial(self.k1) * math.factorial(self.k2)


@lru_cache(maxsize=None)
def _layer_index(d: int):
    k1 = np.arange(d + 1)
    return k1, d - k1


@lru_cache(maxsize=None)
def _graded_order(degree: int):
    """(k1, k2) index arrays in graded lexicographic order."""
    k1 = []
    k2 = []
    for d in range(degree + 1):
        for i in range(d, -1, -1):
            k1.append(i)
            k2.append(d - i)
    return np.array(k1, dtype=int), np.array(k2, dtype=int)


@lru_cache(maxsize=None)
def _total_degree(degree: int) -> np.ndarray:
    idx = np.arange(degree + 1)
    return idx[:, None] + idx[None, :]


@dataclass
class PowerSeries:
    """Truncated Taylor coefficient table a_k for |k| <= degree."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.degree = int(self.degree)
        if self.degree < 0:
            raise ValidationError(f"degree must be nonnegative, got {self.degree}")
        table = np.array(self.coeffs, dtype=complex)
        if table.shape != (self.degree + 1, self.degree + 1):
            raise ValidationError(
                f"coefficient table must be {(self.degree + 1, self.degree + 1)}, got {table.shape}")
        table[_total_degree(self.degree) > self.degree] = 0.0
        self.coeffs = table

    @classmethod
    def zeros(cls, degree: int) -> 'PowerSeries':
        return cls(degree, np.zeros((degree + 1, degree + 1), dtype=complex))

    @classmethod
    def constant(cls, value, degree: int = 0) -> 'PowerSeries':
        series = cls.zeros(degree)
        series.coeffs[0, 0] = value
        return series

    @classmethod
    def from_terms(cls, terms: dict, degree: int = None) -> 'PowerSeries':
        """Build from {(k1, k2): coefficient}; degree defaults to the largest |k|."""
        if degree is None:
            degree = max((k1 + k2 for k1, k2 in terms), default=0)
        series = cls.zeros(degree)
        for (k1, k2), value in terms.items():
            if k1 < 0 or k2 < 0 or k1 + k2 > degree:
                raise ValidationError(f"index {(k1, k2)} outside degree {degree}")
            series.coeffs[k1, k2] += value
        return series

    @classmethod
    def from_layers(cls, layers) -> 'PowerSeries':
        degree = len(layers) - 1
        series = cls.zeros(degree)
        for d, layer in enumerate(layers):
            k1, k2 = _layer_index(d)
            series.coeffs[k1, k2] = layer
        return series

    def layer(self, d: int) -> np.ndarray:
        """Homogeneous part of degree d as a vector indexed by k1."""
        k1, k2 = _layer_index(d)
        return self.coeffs[k1, k2]

    def resized(self, degree: int) -> 'PowerSeries':
        """Truncate or zero-pad to a new degree."""
        out = PowerSeries.zeros(degree)
        m = min(degree, self.degree) + 1
        out.coeffs[:m, :m] = self.coeffs[:m, :m]
        out.coeffs[_total_degree(degree) > degree] = 0.0
        return out

    def copy(self) -> 'PowerSeries':
        return PowerSeries(self.degree, self.coeffs.copy())

    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            other = PowerSeries.constant(other)
        degree = max(self.degree, other.degree)
        return PowerSeries(degree, self.resized(degree).coeffs + other.resized(degree).coeffs)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(self.degree, -self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, PowerSeries):
            other = PowerSeries.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scaled(self, factor) -> 'PowerSeries':
        return PowerSeries(self.degree, self.coeffs * factor)

    def support(self):
        """Indices with nonzero coefficients, graded order."""
        k1, k2 = _graded_order(self.degree)
        keep = self.coeffs[k1, k2] != 0
        return [MultiIndex(int(a), int(b)) for a, b in zip(k1[keep], k2[keep])]

    def trimmed(self) -> 'PowerSeries':
        """Resized to the largest total degree carrying a nonzero coefficient."""
        support = self.support()
        return self.resized(max((k.total for k in support), default=0))

    def to_json(self) -> str:
        k1, k2 = _graded_order(self.degree)
        entries = []
        for a, b in zip(k1, k2):
            value = self.coeffs[a, b]
            if value != 0:
                entries.append({'k1': int(a), 'k2': int(b),
                                're': float(value.real), 'im': float(value.imag)})
        return json.dumps({'degree': self.degree, 'entries': entries}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'PowerSeries':
        data = json.loads(text)
        terms = {}
        for entry in data['entries']:
            key = (int(entry['k1']), int(entry['k2']))
            terms[key] = complex(entry['re'], entry['im'])
        return cls.from_terms(terms, int(data['degree']))


def _log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def weight_table(degree: int, sp: SpaceParams) -> np.ndarray:
    """Table of monomial weights omega_k for |k| <= degree (zero beyond)."""
    n = int(sp.dimension)
    k1 = np.arange(degree + 1)[:, None]
    k2 = np.arange(degree + 1)[None, :]
    total = k1 + k2
    log_comb = (_log_factorial(k1) + _log_factorial(k2) + _log_factorial(n - 1)
                - _log_factorial(n - 1 + total))
    table = np.exp(sp.alpha * np.log(n + total) + log_comb)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            if a + b + n - 1 <= _EXACT_FACTORIAL_MAX:
                table[a, b] = monomial_weight(MultiIndex(a, b), sp)
    table[total > degree] = 0.0
    return table


def monomial_weight(k: MultiIndex, sp: SpaceParams) -> float:
    """
    Squared D_alpha norm of z^k.

    omega_k = (n + |k|)^alpha * k! (n-1)! / (n-1+|k|)!, which reduces to the
    Hardy-space monomial norms at alpha = 0.
    """
    k = MultiIndex(*k)
    n = int(sp.dimension)
    total = k.total
    if total + n - 1 <= _EXACT_FACTORIAL_MAX:
        ratio = k.factorial * math.factorial(n - 1) / math.factorial(n - 1 + total)
        return float((n + total) ** sp.alpha * ratio)
    log_w = (sp.alpha * math.log(n + total) + float(_log_factorial(k.k1) + _log_factorial(k.k2))
             + float(_log_factorial(n - 1) - _log_factorial(n - 1 + total)))
    return math.exp(log_w)


def dalpha_norm(f: PowerSeries, sp: SpaceParams) -> float:
    """D_alpha norm (sum_k omega_k |a_k|^2)^(1/2)."""
    weights = weight_table(f.degree, sp)
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def dalpha_inner(f: PowerSeries, g: PowerSeries, sp: SpaceParams) -> complex:
    """D_alpha inner product sum_k omega_k a_k conj(b_k)."""
    degree = max(f.degree, g.degree)
    a = f.resized(degree).coeffs
    b = g.resized(degree).coeffs
    return complex(np.sum(weight_table(degree, sp) * a * np.conj(b)))


def radial_derivative(f: PowerSeries, order: int = 1) -> PowerSeries:
    """R^order f: a_k -> |k|^order a_k."""
    if int(order) < 1:
        raise ValidationError(f"order must be a positive integer, got {order}")
    total = _total_degree(f.degree).astype(float)
    return PowerSeries(f.degree, f.coeffs * total ** int(order))


def dilate(f: PowerSeries, r: float) -> PowerSeries:
    """f_r(z) = f(rz): a_k -> r^|k| a_k."""
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"dilation radius must lie in [0, 1], got {r}")
    total = _total_degree(f.degree)
    return PowerSeries(f.degree, f.coeffs * np.power(float(r), total))


def multiply(f: PowerSeries, g: PowerSeries, out_degree: int = None) -> PowerSeries:
    """Cauchy product truncated to |k| <= out_degree, layer by layer."""
    if out_degree is None:
        out_degree = f.degree + g.degree
    f_layers = [f.layer(j) for j in range(f.degree + 1)]
    g_layers = [g.layer(j) for j in range(g.degree + 1)]
    layers = []
    for d in range(out_degree + 1):
        acc = np.zeros(d + 1, dtype=complex)
        for j in range(max(0, d - g.degree), min(d, f.degree) + 1):
            acc += np.convolve(f_layers[j], g_layers[d - j])
        layers.append(acc)
    return PowerSeries.from_layers(layers)


def reciprocal(f: PowerSeries, out_degree: int = None) -> PowerSeries:
    """
    1/f up to degree out_degree.

    Homogeneous layers solve h_0 = 1/a_0 and
    h_d = -(1/a_0) * sum_{j=1..d} f_j h_{d-j}.
    """
    if out_degree is None:
        out_degree = f.degree
    a0 = f.coeffs[0, 0]
    if a0 == 0:
        raise ValidationError("non-invertible series: zero constant term")
    f_layers = [f.layer(j) for j in range(f.degree + 1)]
    layers = [np.array([1.0 / a0], dtype=complex)]
    for d in range(1, out_degree + 1):
        acc = np.zeros(d + 1, dtype=complex)
        for j in range(1, min(d, f.degree) + 1):
            acc += np.convolve(f_layers[j], layers[d - j])
        layers.append(-acc / a0)
    return PowerSeries.from_layers(layers)


def _as_points(z) -> np.ndarray:
    pts = np.asarray(z, dtype=complex)
    if pts.shape[-1] != 2:
        raise ValidationError(f"points must have a trailing axis of length 2, got {pts.shape}")
    return pts


def _check_closed_ball(pts: np.ndarray):
    sq = np.sum(np.abs(pts) ** 2, axis=-1)
    if np.any(sq > 1.0 + _BALL_TOL):
        raise ValidationError(f"point outside the closed ball: |z|^2 = {float(np.max(sq)):.6g}")


def evaluate(f: PowerSeries, z) -> complex:
    """Sum a_k z^k in graded lexicographic order at one point of the closed ball."""
    pts = _as_points(z)
    if pts.shape != (2,):
        raise ValidationError("evaluate takes a single point; use evaluate_many for batches")
    _check_closed_ball(pts)
    k1, k2 = _graded_order(f.degree)
    powers = np.arange(f.degree + 1)
    p1 = np.power(pts[0], powers)
    p2 = np.power(pts[1], powers)
    terms = f.coeffs[k1, k2] * p1[k1] * p2[k2]
    return complex(np.sum(terms))


def evaluate_many(f: PowerSeries, points, check: bool = True) -> np.ndarray:
    """Vectorized evaluation over an array of points with trailing axis 2."""
    pts = _as_points(points)
    if check:
        _check_closed_ball(pts)
    flat = pts.reshape(-1, 2)
    powers = np.arange(f.degree + 1)
    p1 = np.power(flat[:, 0:1], powers)
    p2 = np.power(flat[:, 1:2], powers)
    values = np.einsum('mi,ij,mj->m', p1, f.coeffs, p2)
    return values.reshape(pts.shape[:-1])


def series_evaluator(f: PowerSeries) -> Callable:
    """Wrap a series as an evaluator (z1, z2) -> values."""
    def _evaluate(z1, z2):
        pts = np.stack(np.broadcast_arrays(np.asarray(z1, dtype=complex),
                                           np.asarray(z2, dtype=complex)), axis=-1)
        return evaluate_many(f, pts, check=False)
    return _evaluate


def coefficients_from_evaluator(evaluator: Callable, degree: int, rho: float = None,
                                grid: int = None, config: Config = None) -> PowerSeries:
    """
    Taylor coefficients of a holomorphic evaluator by a 2D FFT on the polytorus.

    Args:
        evaluator: vectorized callable (z1, z2) -> complex values
        degree: truncation degree N
        rho: polytorus radius in (0, 1)
        grid: points per circle, even and >= 2(N+1)

    Returns:
        PowerSeries with a_k = rho^-|k| * (discrete Fourier average)_k
    """
    if config is None:
        config = Config()
    if rho is None:
        rho = config.extraction_radius
    if grid is None:
        grid = config.extraction_grid_factor * (degree + 1)
    if not 0.0 < rho < 1.0:
        raise ValidationError(f"rho must lie in (0, 1), got {rho}")
    if grid % 2 or grid < 2 * (degree + 1):
        raise ValidationError(f"grid must be even and >= 2(N+1) = {2 * (degree + 1)}, got {grid}")
    theta = 2.0 * np.pi * np.arange(grid) / grid
    circle = rho * np.exp(1j * theta)
    z1, z2 = np.meshgrid(circle, circle, indexing='ij')
    values = np.asarray(evaluator(z1, z2), dtype=complex)
    averages = np.fft.fft2(values) / grid ** 2
    # round-off floor relative to the largest Fourier average
    averages[np.abs(averages) < config.coefficient_tol * np.max(np.abs(averages))] = 0.0
    total = _total_degree(degree)
    table = averages[:degree + 1, :degree + 1] / np.power(rho, total)
    logger.debug(
        f"Coefficient extraction | "
        f"N: {degree} | "
        f"rho: {rho:.3f} | "
        f"grid: {grid}"
    )
    return PowerSeries(degree, table)


def bergman_norm_quadrature(f: PowerSeries, sp: SpaceParams, nodes: int = None,
                            config: Config = None) -> float:
    """
    Weighted Bergman norm (int_B2 (1-|z|^2)^-(alpha+1) |f|^2 dv)^(1/2) for alpha < 0.

    Coordinates z1 = sqrt(u t) e^(i th1), z2 = sqrt(u (1-t)) e^(i th2) give
    dv = (u/4) du dt dth1 dth2. The radial weight (1-u)^a u is absorbed by
    Gauss-Jacobi nodes (Gauss-Legendre at alpha = -1), t uses Gauss-Legendre
    and both angles use the trapezoid rule through one 2D FFT per node pair.
    """
    if config is None:
        config = Config()
    if sp.alpha >= 0:
        raise ValidationError("equivalence only stated for alpha < 0")
    if nodes is None:
        nodes = config.bergman_nodes
    n_radial = max(int(nodes), f.degree // 2 + 2)
    n_split = max(int(nodes), f.degree // 2 + 2)
    angles = max(2 * (f.degree + 1), int(nodes))
    angles += angles % 2

    a = -(sp.alpha + 1.0)
    xr, wr = roots_jacobi(n_radial, a, 1.0)
    u = 0.5 * (1.0 + xr)
    radial_w = wr * 2.0 ** (-a - 2.0)
    xt, wt = roots_legendre(n_split)
    t = 0.5 * (1.0 + xt)
    split_w = 0.5 * wt

    k1 = np.arange(f.degree + 1)[:, None]
    k2 = np.arange(f.degree + 1)[None, :]
    total = 0.0
    for ui, wi in zip(u, radial_w):
        r1 = np.sqrt(ui * t)[:, None, None]
        r2 = np.sqrt(ui * (1.0 - t))[:, None, None]
        scaled = np.zeros((n_split, angles, angles), dtype=complex)
        scaled[:, :f.degree + 1, :f.degree + 1] = f.coeffs[None] * r1 ** k1[None] * r2 ** k2[None]
        torus = np.fft.ifft2(scaled, axes=(-2, -1)) * angles ** 2
        mean_sq = np.mean(np.abs(torus) ** 2, axis=(-2, -1))
        total += wi * float(np.dot(split_w, mean_sq))
    norm_sq = total * 0.25 * (2.0 * np.pi) ** 2
    return float(np.sqrt(max(norm_sq, 0.0)))
