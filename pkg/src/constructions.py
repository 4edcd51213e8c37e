"""
Explicit constructions: the C^{2,eps} bump sum, the surrogate H, the psi-series
with f = exp(-beta psi) and its Taylor series, and a one-variable outer-function surrogate.
"""
from dataclasses import dataclass
import logging
from typing import Callable, List

import numpy as np

from .ball_geometry import koranyi_dist_to_set
from .boundary_sets import IntervalSet, distance_to_set, greedy_cover
from .config import Config
from .exceptions import ValidationError
from .series_core import PowerSeries, coefficients_from_evaluator
from .tools.hints import DerivativeBound, HolderReport

logger = logging.getLogger('Constructions')

_CHUNK = 1 << 22  # complex entries per evaluation block
BALL_POLYTORUS_RADIUS = 0.5  # 2 rho^2 < 1 keeps the torus |z1| = |z2| = rho inside the ball


@dataclass
class BumpFunction:
    """f(x) = sum_k (|I_k| phi((x - a_k) / |I_k|))^(2+eps) with phi(u) = u(1-u)."""

    gaps: np.ndarray
    epsilon: float

    def __post_init__(self):
        self.gaps = np.asarray(self.gaps, dtype=float).reshape(-1, 2)
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if np.any(self.gaps[:, 1] <= self.gaps[:, 0]) or np.any(self.gaps[1:, 0] < self.gaps[:-1, 1]):
            raise ValidationError("gaps must be sorted, disjoint and nondegenerate")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.gaps[:, 0], x, side='right') - 1, 0, self.gaps.shape[0] - 1)
        a = self.gaps[idx, 0]
        width = self.gaps[idx, 1] - a
        u = (x - a) / width
        inside = (u > 0.0) & (u < 1.0)
        phi = np.where(inside, width * u * (1.0 - u), 0.0)
        value = phi ** (2.0 + self.epsilon)
        return float(value) if value.ndim == 0 else value


def bump_sum(E: IntervalSet, epsilon: float = None, config: Config = None) -> BumpFunction:
    """
    Bump sum over the gaps of E in [0, 1]; f vanishes exactly on E.

    An edge gap [0, a) or (b, 1] is reflected to [-a, a] or [b, 2 - b], so f
    stays positive at 0 and 1 when they are not in E and f / dist^(2+eps)
    keeps its bounds up to the edges.
    """
    if config is None:
        config = Config()
    epsilon = config.bump_epsilon if epsilon is None else epsilon
    lo, hi = float(E.lows[0]), float(E.highs[-1])
    if lo < 0.0 or hi > 1.0:
        raise ValidationError("bump sum needs E inside [0, 1]")
    edges = np.concatenate([[-lo], E.intervals.ravel(), [2.0 - hi]])
    gaps = edges.reshape(-1, 2)
    gaps = gaps[gaps[:, 1] > gaps[:, 0]]
    return BumpFunction(gaps, epsilon)


def holder_witness(bump: BumpFunction, grid: int = 100_000) -> HolderReport:
    """
    Second divided differences on a uniform grid of [0, 1] and the
    eps-Holder quotient of those differences between neighbours.
    """
    x = np.linspace(0.0, 1.0, int(grid) + 1)
    h = x[1] - x[0]
    f = bump(x)
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h ** 2
    quotient = np.abs(np.diff(second)) / h ** bump.epsilon
    return HolderReport(float(np.max(np.abs(second))), float(np.max(quotient)), int(x.size))


def surrogate_H(s, z):
    """H(s, z) = 1 - e^{-2is} z1^2 - z2^2; its sphere zeros are M_s and M_{s+pi}."""
    z = np.asarray(z, dtype=complex)
    value = 1.0 - np.exp(-2j * np.asarray(s, dtype=float)) * z[..., 0] ** 2 - z[..., 1] ** 2
    return complex(value) if np.ndim(value) == 0 else value


@dataclass
class PsiSeries:
    """
    Covering centers s_jk per level k = 1..k_max with counts N_k.

    resolution is the finest parameter scale of the underlying set.
    """

    centers: List[np.ndarray]
    resolution: float = 0.0

    @property
    def k_max(self) -> int:
        return len(self.centers)

    @property
    def counts(self) -> np.ndarray:
        return np.array([c.size for c in self.centers], dtype=np.int64)

    def truncated(self, k_max: int) -> 'PsiSeries':
        return PsiSeries(self.centers[:k_max], self.resolution)


def build_psi_series(support: IntervalSet, k_max: int = None, config: Config = None) -> PsiSeries:
    """Centers of the leftmost greedy 2^-k covers of the support, k = 1..k_max."""
    if config is None:
        config = Config()
    k_max = config.psi_k_max if k_max is None else int(k_max)
    centers = [greedy_cover(support, 2.0 ** (-k)) for k in range(1, k_max + 1)]
    lengths = support.lengths[support.lengths > 0]
    gaps = support.gaps()
    scales = np.concatenate([lengths, gaps[gaps > 0]])
    resolution = float(scales.min()) if scales.size else 0.0
    logger.debug(
        f"Psi series | "
        f"levels: {k_max} | "
        f"centers: {sum(c.size for c in centers)} | "
        f"resolution: {resolution:.3e}"
    )
    return PsiSeries(centers, resolution)


def _level_blocks(ps: PsiSeries, flat: np.ndarray):
    """Yield (weight 2^-k, rotations e^{-2is}, row slice) per level and point block."""
    for k, centers in enumerate(ps.centers, start=1):
        rotation = np.exp(-2j * centers)
        rows = max(1, _CHUNK // max(centers.size, 1))
        for start in range(0, flat.shape[0], rows):
            yield 2.0 ** (-k), rotation, slice(start, start + rows)


def psi_series(ps: PsiSeries, z) -> np.ndarray:
    """psi(z) = sum_k sum_j 2^-k / (2^-k + H(s_jk, z)), vectorized over points."""
    pts = np.asarray(z, dtype=complex)
    flat = pts.reshape(-1, 2)
    a = 1.0 - flat[:, 1] ** 2
    b = flat[:, 0] ** 2
    total = np.zeros(flat.shape[0], dtype=complex)
    for w, rotation, rows in _level_blocks(ps, flat):
        denom = (w + a[rows])[:, None] - b[rows][:, None] * rotation[None, :]
        total[rows] += np.sum(w / denom, axis=1)
    value = total.reshape(pts.shape[:-1])
    return complex(value) if value.ndim == 0 else value


def psi_derivative(ps: PsiSeries, z, beta) -> np.ndarray:
    """
    Closed-form D^beta psi for |beta| in {1, 2}.

    H_1 = -2 e^{-2is} z1, H_2 = -2 z2, H_11 = -2 e^{-2is}, H_22 = -2, H_12 = 0.
    """
    b1, b2 = (int(v) for v in beta)
    order = b1 + b2
    if b1 < 0 or b2 < 0 or order not in (1, 2):
        raise ValidationError(f"derivative order must have |beta| in {{1, 2}}, got {tuple(beta)}")
    pts = np.asarray(z, dtype=complex)
    flat = pts.reshape(-1, 2)
    a = 1.0 - flat[:, 1] ** 2
    b = flat[:, 0] ** 2
    total = np.zeros(flat.shape[0], dtype=complex)
    for w, rotation, rows in _level_blocks(ps, flat):
        z1 = flat[rows, 0][:, None]
        z2 = flat[rows, 1][:, None]
        rot = rotation[None, :]
        denom = (w + a[rows])[:, None] - b[rows][:, None] * rot
        h1 = -2.0 * rot * z1
        h2 = -2.0 * z2 * np.ones_like(rot)
        if order == 1:
            grad = h1 if b1 == 1 else h2
            terms = -w * grad / denom ** 2
        else:
            if b1 == 2:
                hi, hj, hij = h1, h1, -2.0 * rot
            elif b2 == 2:
                hi, hj, hij = h2, h2, -2.0 * np.ones_like(rot)
            else:
                hi, hj, hij = h1, h2, np.zeros_like(rot)
            terms = -w * hij / denom ** 2 + 2.0 * w * hi * hj / denom ** 3
        total[rows] += np.sum(terms, axis=1)
    value = total.reshape(pts.shape[:-1])
    return complex(value) if value.ndim == 0 else value


def psi_derivative_bound(ps: PsiSeries, z, beta, set_samples) -> DerivativeBound:
    """|D^beta psi(z)| times d_K(z, E)^|beta| with E given by sphere samples."""
    derivative = np.abs(psi_derivative(ps, z, beta))
    distance = np.asarray(koranyi_dist_to_set(z, set_samples).value)
    product = derivative * distance ** (int(beta[0]) + int(beta[1]))
    if np.ndim(product) == 0:
        return DerivativeBound(float(derivative), float(distance), float(product))
    return DerivativeBound(derivative, distance, product)


def f_exp(ps: PsiSeries, beta: float = None, config: Config = None) -> Callable:
    """Evaluator (z1, z2) -> exp(-beta psi(z)); |f| <= 1 on the open ball."""
    if config is None:
        config = Config()
    beta = config.psi_beta if beta is None else beta
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")

    def _evaluate(z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
        return np.exp(-beta * np.asarray(psi_series(ps, np.stack([z1, z2], axis=-1))))
    return _evaluate


def covering_tail_constant(ps: PsiSeries) -> float:
    """sup over resolved k0 of 2^k0 sum_{k >= k0} 2^-k N_k."""
    counts = ps.counts.astype(float)
    k = np.arange(1, ps.k_max + 1)
    weighted = counts * 2.0 ** (-k)
    tails = np.cumsum(weighted[::-1])[::-1]
    ratios = tails * 2.0 ** k
    resolved = 2.0 ** (-k) >= ps.resolution
    return float(np.max(ratios[resolved])) if np.any(resolved) else float(ratios[0])


def set_distance_weight(E: IntervalSet, floor: float = None, config: Config = None) -> Callable:
    """Boundary weight theta -> max(dist(theta, E), floor) on the circle [0, 2 pi)."""
    if config is None:
        config = Config()
    floor = config.outer_floor if floor is None else floor
    circle = IntervalSet(E.intervals, (0.0, 2.0 * np.pi), periodic=True)

    def _weight(theta):
        return np.maximum(distance_to_set(circle, theta), floor)
    return _weight


def outer_surrogate(weight: Callable, z1, nodes: int = None, floor: float = None,
                    config: Config = None):
    """
    Outer function exp((1/2pi) int (e^{it}+z)/(e^{it}-z) log w(t) dt).

    The integral uses midpoint nodes t_j = 2 pi (j + 1/2) / n; the weight is
    floored before the log and a zero weight with floor 0 is rejected.
    """
    if config is None:
        config = Config()
    nodes = config.outer_nodes if nodes is None else int(nodes)
    floor = config.outer_floor if floor is None else floor
    z = np.asarray(z1, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise ValidationError("outer surrogate needs |z1| < 1")
    theta = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    values = np.asarray(weight(theta), dtype=float)
    if np.any(values < 0):
        raise ValidationError("boundary weight must be nonnegative")
    if floor <= 0 and np.any(values == 0):
        raise ValidationError("boundary weight has zeros and no floor")
    log_w = np.log(np.maximum(values, floor) if floor > 0 else values)
    circle = np.exp(1j * theta)
    flat = z.ravel()
    out = np.empty(flat.size, dtype=complex)
    rows = max(1, _CHUNK // nodes)
    for start in range(0, flat.size, rows):
        zz = flat[start:start + rows][:, None]
        kernel = (circle[None, :] + zz) / (circle[None, :] - zz)
        out[start:start + rows] = np.exp(kernel @ log_w / nodes)
    out = out.reshape(z.shape)
    return complex(out) if out.ndim == 0 else out


def psi_exp_series(E: IntervalSet, degree: int = None, beta: float = None, k_max: int = None,
                   rho: float = None, config: Config = None) -> PowerSeries:
    """
    Taylor coefficients of exp(-beta psi) for the covering of E, up to total degree N.

    The polytorus radius is capped at BALL_POLYTORUS_RADIUS so that the torus
    stays inside the ball, where every 2^-k + H(s, z) has positive real part.
    """
    if config is None:
        config = Config()
    degree = config.series_degree if degree is None else int(degree)
    rho = min(config.extraction_radius, BALL_POLYTORUS_RADIUS) if rho is None else float(rho)
    if 2.0 * rho ** 2 >= 1.0:
        raise ValidationError(f"polytorus radius {rho} leaves the ball; need 2 rho^2 < 1")
    ps = build_psi_series(E, k_max, config)
    series = coefficients_from_evaluator(f_exp(ps, beta, config), degree, rho, config=config)
    logger.info(
        f"exp(-beta psi) series | "
        f"N: {degree} | "
        f"levels: {ps.k_max} | "
        f"f(0): {series.coeffs[0, 0].real:.4e}"
    )
    return series
