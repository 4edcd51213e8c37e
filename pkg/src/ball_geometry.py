"""
Koranyi geometry on the unit sphere of C^2.
Model transversal and complex-tangential curves, the M_s family and set distances.
"""
from dataclasses import dataclass
import logging
from typing import Callable, NamedTuple

import numpy as np

from .config import Config
from .exceptions import NumericalInstabilityError, ValidationError
from .tools.hints import FitResult, SetDistance
from .tools.misc import fit_power_law, make_rng, relative_change

logger = logging.getLogger('BallGeometry')

CHART_KINDS = ('transversal_circle', 'ctangential_circle', 'ms_family')
_SPHERE_TOL = 1e-12


class BallPoint(NamedTuple):
    z1: complex
    z2: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2], dtype=complex)


def to_points(z) -> np.ndarray:
    """Coerce a BallPoint, pair or array into complex points with trailing axis 2."""
    pts = np.asarray(z, dtype=complex)
    if pts.shape == () or pts.shape[-1] != 2:
        raise ValidationError(f"points need a trailing axis of length 2, got shape {pts.shape}")
    sq = np.sum(np.abs(pts) ** 2, axis=-1)
    if np.any(sq > 1.0 + _SPHERE_TOL):
        raise ValidationError(f"point outside the closed ball: |z|^2 = {float(np.max(sq)):.6g}")
    return pts


def as_ball_point(z) -> BallPoint:
    pts = to_points(z)
    if pts.shape != (2,):
        raise ValidationError("expected a single point")
    return BallPoint(complex(pts[0]), complex(pts[1]))


@dataclass(frozen=True)
class CurveChart:
    """
    Closed-form boundary chart.

    transversal_circle: s -> (e^{is}, 0)
    ctangential_circle: t -> (cos t, sin t)
    ms_family: (s, x) -> (e^{is} cos x, sin x); x = 0 is the transversal circle
    """

    kind: str
    domain: tuple

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ValidationError(f"unknown chart kind '{self.kind}', expected one of {CHART_KINDS}")

    @classmethod
    def transversal(cls) -> 'CurveChart':
        return cls('transversal_circle', (-2.0 * np.pi, 2.0 * np.pi))

    @classmethod
    def ctangential(cls) -> 'CurveChart':
        return cls('ctangential_circle', (-2.0 * np.pi, 2.0 * np.pi))

    @classmethod
    def ms_family(cls) -> 'CurveChart':
        return cls('ms_family', ((-2.0 * np.pi, 2.0 * np.pi), (-np.pi, np.pi)))

    @classmethod
    def from_kind(cls, kind: str) -> 'CurveChart':
        builders = {
            'transversal_circle': cls.transversal,
            'ctangential_circle': cls.ctangential,
            'ms_family': cls.ms_family,
        }
        if kind not in builders:
            raise ValidationError(f"unknown chart kind '{kind}', expected one of {CHART_KINDS}")
        return builders[kind]()

    @property
    def parameter_dim(self) -> int:
        return 2 if self.kind == 'ms_family' else 1

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'domain': np.asarray(self.domain, dtype=float).tolist()}

    def map(self, params) -> np.ndarray:
        """Vectorized chart image; ms_family takes params with trailing axis (s, x)."""
        params = np.asarray(params, dtype=float)
        if self.kind == 'ms_family':
            if params.shape == () or params.shape[-1] != 2:
                raise ValidationError("ms_family parameters need a trailing (s, x) axis")
            s, x = params[..., 0], params[..., 1]
            _check_domain(s, self.domain[0], 's')
            _check_domain(x, self.domain[1], 'x')
            return np.stack([np.exp(1j * s) * np.cos(x), np.sin(x) + 0j], axis=-1)
        _check_domain(params, self.domain, 'parameter')
        if self.kind == 'transversal_circle':
            return np.stack([np.exp(1j * params), np.zeros_like(params, dtype=complex)], axis=-1)
        return np.stack([np.cos(params) + 0j, np.sin(params) + 0j], axis=-1)

    def tangent(self, params, h: float = 1e-5) -> np.ndarray:
        """Unit tangent by central differences (along x for ms_family)."""
        params = np.asarray(params, dtype=float)
        if self.kind == 'ms_family':
            step = np.zeros(params.shape)
            step[..., 1] = h
        else:
            step = h
        v = (self.map(params + step) - self.map(params - step)) / (2.0 * h)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _check_domain(values, bounds, name):
    lo, hi = bounds
    if np.any(values < lo) or np.any(values > hi):
        raise ValidationError(f"{name} outside chart domain [{lo:.4g}, {hi:.4g}]")


def koranyi_distance(z, w):
    """d_K(z, w) = |1 - <z, w>|, broadcast over leading axes."""
    z = to_points(z)
    w = to_points(w)
    value = np.abs(1.0 - np.sum(z * np.conj(w), axis=-1))
    return float(value) if np.ndim(value) == 0 else value


def curve_points(chart: CurveChart, params) -> np.ndarray:
    return chart.map(params)


def curve_point(chart: CurveChart, params) -> BallPoint:
    """Chart image of a single parameter (or (s, x) pair)."""
    pts = chart.map(params)
    if pts.shape != (2,):
        raise ValidationError("curve_point takes one parameter; use curve_points for arrays")
    return BallPoint(complex(pts[0]), complex(pts[1]))


def koranyi_dist_to_set(z, samples, config: Config = None) -> SetDistance:
    """
    Minimum Korányi distance from z to a sampled boundary set.

    Args:
        z: one point or an array of points (trailing axis 2)
        samples: (m, 2) sample points of the set

    Returns:
        SetDistance with the value (float or array), the sampling resolution and sample count
    """
    if config is None:
        config = Config()
    samples = np.asarray(samples, dtype=complex).reshape(-1, 2)
    if samples.shape[0] == 0:
        raise ValidationError("distance to an empty set")
    pts = to_points(z)
    flat = pts.reshape(-1, 2)
    values = np.empty(flat.shape[0])
    block = max(1, config.energy_block * 64 // max(samples.shape[0], 1))
    conj_samples = np.conj(samples).T
    for start in range(0, flat.shape[0], block):
        inner = flat[start:start + block] @ conj_samples
        values[start:start + block] = np.min(np.abs(1.0 - inner), axis=1)
    values = values.reshape(pts.shape[:-1])
    value = float(values) if values.ndim == 0 else values
    return SetDistance(value, int(samples.shape[0]), int(samples.shape[0]))


def adaptive_dist_to_set(z, sampler: Callable[[int], np.ndarray], start: int = None,
                         max_doublings: int = None, config: Config = None) -> SetDistance:
    """
    Set distance with the doubling stopping rule.

    The sampler returns n sample points of the set; n doubles until the
    distance changes by less than config.distance_rtol.
    """
    if config is None:
        config = Config()
    if start is None:
        start = config.set_sampling
    if max_doublings is None:
        max_doublings = config.max_doublings
    n = int(start)
    previous = koranyi_dist_to_set(z, sampler(n), config)
    for _ in range(max_doublings):
        n *= 2
        current = koranyi_dist_to_set(z, sampler(n), config)
        old = np.atleast_1d(previous.value)
        new = np.atleast_1d(current.value)
        change = max(relative_change(a, b) if b != 0.0 else (0.0 if a == 0.0 else np.inf)
                     for a, b in zip(new, old))
        logger.debug(
            f"Set distance refinement | "
            f"samples: {n} | "
            f"change: {change:.3e}"
        )
        if change < config.distance_rtol:
            return SetDistance(current.value, n, current.n_samples)
        previous = current
    raise NumericalInstabilityError(
        f"set distance did not settle within {max_doublings} doublings (last sampling {n})")


def distance_exponent_check(chart: CurveChart, anchor: float = 0.3,
                            gaps: np.ndarray = None) -> FitResult:
    """
    Slope of log d_K(gamma(a), gamma(a + h)) against log h.

    Transversal charts give 1, complex-tangential ones 2. For ms_family the
    parameter varied is x at fixed s = anchor.
    """
    if gaps is None:
        gaps = np.logspace(-4, -1, 25)
    if chart.kind == 'ms_family':
        base = chart.map(np.array([anchor, 0.0]))
        moved = chart.map(np.stack([np.full_like(gaps, anchor), gaps], axis=-1))
    else:
        base = chart.map(np.array(anchor))
        moved = chart.map(anchor + gaps)
    distances = koranyi_distance(moved, base)
    fit = fit_power_law(gaps, distances)
    logger.debug(
        f"Distance exponent | "
        f"chart: {chart.kind} | "
        f"slope: {fit.exponent:.4f}"
    )
    return fit


def tangency_certificate(chart: CurveChart, params) -> np.ndarray:
    """|<v, zeta>| for the unit tangent v at each chart point zeta."""
    params = np.asarray(params, dtype=float)
    zeta = chart.map(params)
    v = chart.tangent(params)
    return np.abs(np.sum(v * np.conj(zeta), axis=-1))


def sphere_samples(n: int, seed: int, axis_points: int = 0) -> np.ndarray:
    """
    Seeded uniform samples on the unit sphere of C^2.

        :param n: number of random samples
        :param seed: generator seed
        :param axis_points: adds (e^{i th}, 0) and (0, e^{i th}) at this many angles
    """
    rng = make_rng(seed)
    g = rng.standard_normal((int(n), 4))
    pts = g[:, 0::2] + 1j * g[:, 1::2]
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    if axis_points:
        theta = 2.0 * np.pi * np.arange(axis_points) / axis_points
        circle = np.exp(1j * theta)
        zeros = np.zeros(axis_points, dtype=complex)
        pts = np.concatenate([pts, np.stack([circle, zeros], axis=1),
                              np.stack([zeros, circle], axis=1)])
    return pts
