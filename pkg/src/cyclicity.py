"""
Cyclicity checks: the radial-dilation quotient sweep, optimal polynomial approximants,
the multiplier heuristic, the reduced integral chains and their 4D cross-check.
"""
from dataclasses import dataclass
import logging
import math
from typing import Callable

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.special import factorial, hyp2f1, stirling2

from .ball_geometry import sphere_samples
from .boundary_sets import CantorSpec, IntervalSet, cantor_build, distance_to_set, measure_profile, neighborhood_measure
from .capacity import critical_alpha_capacity
from .config import Config
from .exceptions import NumericalInstabilityError, ValidationError
from .series_core import (PowerSeries, SpaceParams, dalpha_norm, dilate, evaluate_many, multiply,
                          radial_derivative, reciprocal, weight_table)
from .tools.hints import (ApproximantResult, ChainReport, CriticalIndexReport, CrossCheckReport,
                          LayerCakeResult, MultiplierReport, SquareOrderingReport, SweepReport)
from .tools.misc import fit_power_law, make_rng, ratio_band

logger = logging.getLogger('Cyclicity')

CHAIN_CASES = ('transversal', 'ctangential', 'totallyreal')
_CONTOUR_POINTS = 32

# capacity case -> chain case
_CHAIN_FOR_CASE = {
    'transversal': 'transversal',
    'ctangential': 'ctangential',
    'product': 'totallyreal',
}


@dataclass(frozen=True)
class DilationSweep:
    r_grid: tuple
    alpha: float
    degree: int

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        if r.size == 0 or np.any(np.diff(r) <= 0) or r[0] <= 0 or r[-1] >= 1:
            raise ValidationError("sweep radii must be strictly increasing inside (0, 1)")
        if int(self.degree) < 1:
            raise ValidationError(f"sweep degree must be positive, got {self.degree}")

    @classmethod
    def from_config(cls, alpha: float, config: Config = None) -> 'DilationSweep':
        if config is None:
            config = Config()
        return cls(tuple(config.sweep_r_grid.tolist()), alpha, config.series_degree)


def _quotient_norms(f: PowerSeries, r_grid, alpha: float, degree: int):
    f = f.resized(degree)
    derivative = []
    quotient = []
    for r in r_grid:
        q = multiply(f, reciprocal(dilate(f, r), degree), degree)
        derivative.append(dalpha_norm(radial_derivative(q, 1), SpaceParams(alpha - 2.0)))
        quotient.append(dalpha_norm(q, SpaceParams(alpha)))
    return np.array(derivative), np.array(quotient)


def _ball_samples(n: int, seed: int) -> np.ndarray:
    rng = make_rng(seed + 1)
    radii = rng.uniform(0.0, 1.0, size=n) ** 0.25
    return sphere_samples(n, seed) * radii[:, None]


def quotient_norm_sweep(f: PowerSeries, sweep: DilationSweep, config: Config = None,
                        strict: bool = False) -> SweepReport:
    """
    ||R(f/f_r)||_{alpha-2} and ||f/f_r||_alpha over the sweep radii.

    The derivative norms are recomputed at half the degree; a relative change
    above sweep_truncation_tol flags the sweep as truncation-unstable (an error
    when strict). Nonvanishing on the ball is only checked on seeded samples.
    """
    if config is None:
        config = Config()
    if f.coeffs[0, 0] == 0:
        raise ValidationError("sweep needs a nonzero constant term")
    r = np.asarray(sweep.r_grid, dtype=float)
    derivative, quotient = _quotient_norms(f, r, sweep.alpha, sweep.degree)
    half, _ = _quotient_norms(f, r, sweep.alpha, max(1, sweep.degree // 2))
    scale = np.maximum(np.abs(derivative), np.finfo(float).tiny)
    drift = np.abs(derivative - half) / scale
    stable = bool(np.all((drift < config.sweep_truncation_tol) | (derivative == 0)))

    flags = ['nonvanishing-sampled-only']
    values = evaluate_many(f, _ball_samples(config.multiplier_samples, config.seed))
    nonvanishing_min = float(np.min(np.abs(values)))
    if nonvanishing_min < 1e-8:
        flags.append('vanishes-on-sample')
    if not stable:
        flags.append('truncation-unstable')
        logger.warning(f"Dilation sweep truncation drift | max: {float(np.max(drift)):.3e}")
        if strict:
            raise NumericalInstabilityError(
                f"dilation sweep unstable under truncation N -> N/2 (drift {float(np.max(drift)):.3e})")
    if np.all(derivative > 0) and r.size >= 3:
        slope = fit_power_law(1.0 / (1.0 - r), derivative).exponent
    else:
        slope = 0.0
        flags.append('degenerate-slope')
    logger.debug(
        f"Dilation sweep | "
        f"alpha: {sweep.alpha:.3f} | "
        f"N: {sweep.degree} | "
        f"slope: {slope:.4f} | "
        f"stable: {stable}"
    )
    return SweepReport(r, derivative, quotient, float(slope), stable, nonvanishing_min, tuple(flags))


def _monomial_basis(degree: int):
    return [(j1, d - j1) for d in range(degree + 1) for j1 in range(d, -1, -1)]


def opt_approximant_distance(f: PowerSeries, alpha: float, max_degree: int,
                             config: Config = None) -> ApproximantResult:
    """
    dist_D = min_p ||p f - 1||_alpha over polynomials p of degree <= D, D = 0..max_degree.

    Normal equations with Gram G_jk = <z^k f, z^j f>_alpha are solved by Cholesky;
    a jitter is added when the condition number exceeds gram_condition_max.
    """
    if config is None:
        config = Config()
    f = f.trimmed()
    top = f.degree + int(max_degree)
    sqrt_w = np.sqrt(weight_table(top, SpaceParams(alpha)))
    mask = sqrt_w > 0
    padded = f.resized(top).coeffs
    columns = []
    for j1, j2 in _monomial_basis(max_degree):
        shifted = np.zeros_like(padded)
        shifted[j1:, j2:] = padded[:top + 1 - j1, :top + 1 - j2]
        columns.append((sqrt_w * shifted)[mask])
    matrix = np.stack(columns, axis=1)
    target = np.zeros((top + 1, top + 1))
    target[0, 0] = 1.0
    target = (sqrt_w * target)[mask]

    degrees = np.arange(int(max_degree) + 1)
    distances = np.empty(degrees.size)
    conditions = np.empty(degrees.size)
    for D in degrees:
        size = (D + 1) * (D + 2) // 2
        A = matrix[:, :size]
        gram = A.conj().T @ A
        rhs = A.conj().T @ target
        cond = float(np.linalg.cond(gram))
        if not math.isfinite(cond) or cond > config.gram_condition_max:
            gram = gram + config.gram_jitter * max(float(np.max(np.abs(np.diag(gram)))), 1.0) * np.eye(size)
        try:
            coeffs = linalg.cho_solve(linalg.cho_factor(gram), rhs)
        except linalg.LinAlgError as err:
            raise NumericalInstabilityError(
                f"singular Gram system at degree {D} (condition {cond:.3e}); lower the degree") from err
        distances[D] = float(np.linalg.norm(A @ coeffs - target))
        conditions[D] = cond
        logger.debug(
            f"Approximant | "
            f"D: {D} | "
            f"dist: {distances[D]:.6e} | "
            f"cond: {cond:.3e}"
        )
    return ApproximantResult(degrees, distances, conditions)


def square_ordering(f: PowerSeries, alpha: float, max_degree: int,
                    config: Config = None) -> SquareOrderingReport:
    """
    Compare dist_D(f^2) with dist_{D + deg f}(f); p f^2 = (p f) f makes the
    second a lower bound of the first.
    """
    f = f.trimmed()
    shift = f.degree
    square = opt_approximant_distance(multiply(f, f), alpha, max_degree, config)
    base = opt_approximant_distance(f, alpha, max_degree + shift, config)
    shifted = base.distances[shift:shift + max_degree + 1]
    holds = bool(np.all(square.distances >= shifted - 1e-10))
    return SquareOrderingReport(square.degrees, square.distances, shifted, holds)


def _radial_from_evaluator(f: Callable, points: np.ndarray, k: int, delta: float) -> np.ndarray:
    """
    R^k f at points via Cauchy integrals of g(t) = f(t z) on |t - 1| = delta / 2;
    (t d/dt)^k = sum_m S(k, m) t^m (d/dt)^m.
    """
    rho = 0.5 * delta
    phi = 2.0 * np.pi * np.arange(_CONTOUR_POINTS) / _CONTOUR_POINTS
    t = 1.0 + rho * np.exp(1j * phi)
    z1 = points[:, 0:1] * t[None, :]
    z2 = points[:, 1:2] * t[None, :]
    g = np.asarray(f(z1, z2), dtype=complex)
    total = np.zeros(points.shape[0], dtype=complex)
    for m in range(1, k + 1):
        derivative = factorial(m) / rho ** m * np.mean(g * np.exp(-1j * m * phi)[None, :], axis=1)
        total += stirling2(k, m, exact=True) * derivative
    return total


def multiplier_heuristic(f, k: int, samples: np.ndarray = None, config: Config = None) -> MultiplierReport:
    """
    Shell sups of |R^k f| on (1 - delta) S for delta in shell_deltas.

    bounded: all shell sups within a factor 2; unbounded: sups nondecreasing
    toward the sphere and growing by more than 2; otherwise inconclusive.
    """
    if config is None:
        config = Config()
    if int(k) < 1:
        raise ValidationError(f"derivative order must be positive, got {k}")
    if samples is None:
        samples = sphere_samples(config.multiplier_samples, config.seed, axis_points=64)
    deltas = np.asarray(config.shell_deltas, dtype=float)
    sups = np.empty(deltas.size)
    derivative_series = radial_derivative(f, k) if isinstance(f, PowerSeries) else None
    for i, delta in enumerate(deltas):
        shell = (1.0 - delta) * samples
        if derivative_series is not None:
            values = evaluate_many(derivative_series, shell)
        else:
            values = _radial_from_evaluator(f, shell, int(k), float(delta))
        sups[i] = float(np.max(np.abs(values)))
    if not np.all(np.isfinite(sups)):
        verdict = 'inconclusive'
    elif np.max(sups) <= 2.0 * np.min(sups):
        verdict = 'bounded'
    elif np.all(np.diff(sups) >= 0) and sups[-1] > 2.0 * sups[0]:
        verdict = 'unbounded'
    else:
        verdict = 'inconclusive'
    logger.debug(
        f"Multiplier heuristic | "
        f"k: {k} | "
        f"sups: {np.array2string(sups, precision=3)} | "
        f"verdict: {verdict}"
    )
    return MultiplierReport(deltas, sups, verdict)


def predicted_chain_slope(case: str, d: float, alpha: float) -> float:
    if case == 'transversal':
        return 2.0 - alpha - d
    if case == 'ctangential':
        return 2.0 - 0.5 * d - alpha
    if case == 'totallyreal':
        return 1.5 - d - alpha
    raise ValidationError(f"unknown chain case '{case}', expected one of {CHAIN_CASES}")


def _quad(func, lo, hi, config: Config, **kwargs):
    result = integrate.quad(func, lo, hi, limit=config.quad_limit, epsabs=0.0,
                            epsrel=config.quad_rtol, full_output=1, **kwargs)
    return result[0], len(result) == 3


def chain_integral(case: str, d: float, alpha: float, u: float, config: Config = None):
    """
    u^2 times the reduced chain integral, and whether both quadratures converged.

    transversal: int_0^pi t^(1-d) (u+t)^-(alpha+2) dt
    ctangential: int_0^1 t^(2-d) (u+t^2)^-(alpha+3/2) dt
    totallyreal: int_0^1 t^(1-d) (u+t)^-(alpha+5/2) dt
    The endpoint power is an algebraic quadrature weight on [0, split];
    the rest is integrated in log t.
    """
    if config is None:
        config = Config()
    if case == 'transversal':
        power, upper, split = 1.0 - d, math.pi, u
        form = lambda t: (u + t) ** (-(alpha + 2.0))
    elif case == 'ctangential':
        power, upper, split = 2.0 - d, 1.0, math.sqrt(u)
        form = lambda t: (u + t * t) ** (-(alpha + 1.5))
    elif case == 'totallyreal':
        power, upper, split = 1.0 - d, 1.0, u
        form = lambda t: (u + t) ** (-(alpha + 2.5))
    else:
        raise ValidationError(f"unknown chain case '{case}', expected one of {CHAIN_CASES}")
    inner, ok_inner = _quad(form, 0.0, split, config, weight='alg', wvar=(power, 0.0))
    outer, ok_outer = _quad(lambda y: math.exp(y * (power + 1.0)) * form(math.exp(y)),
                            math.log(split), math.log(upper), config)
    return u * u * (inner + outer), ok_inner and ok_outer


def chain_verify(case: str, d: float, alpha: float, u_grid=None, config: Config = None) -> ChainReport:
    """Evaluate J(u) on the u-grid and fit its log-log slope over u <= fit_u_max."""
    if config is None:
        config = Config()
    if not 0.0 < d < 1.0:
        raise ValidationError(f"d must lie in (0, 1), got {d}")
    u_grid = config.u_grid if u_grid is None else np.asarray(u_grid, dtype=float)
    if np.any(u_grid < 1e-6 * (1 - 1e-12)) or np.any(u_grid > 1e-1 * (1 + 1e-12)):
        raise ValidationError("u-grid must lie within [1e-6, 1e-1]")
    predicted = predicted_chain_slope(case, d, alpha)
    values = np.empty(u_grid.size)
    flags = []
    for i, u in enumerate(u_grid):
        values[i], ok = chain_integral(case, d, alpha, float(u), config)
        if not ok and 'quadrature-nonconvergence' not in flags:
            flags.append('quadrature-nonconvergence')
    fit = fit_power_law(u_grid, values, x_max=config.fit_u_max)
    logger.debug(
        f"Chain fit | "
        f"case: {case} | "
        f"d: {d:.4f} | "
        f"alpha: {alpha:.3f} | "
        f"slope: {fit.exponent:.4f} | "
        f"predicted: {predicted:.4f}"
    )
    return ChainReport(case, float(d), float(alpha), u_grid, values, fit, predicted, tuple(flags))


def implied_critical_alpha(case: str, d: float, config: Config = None,
                           bracket=(0.05, 2.5)) -> float:
    """The alpha where the fitted chain slope crosses zero (Brent's method)."""
    if config is None:
        config = Config()

    def slope(alpha):
        return chain_verify(case, d, alpha, config=config).fit.exponent

    lo, hi = bracket
    if slope(lo) * slope(hi) > 0:
        raise ValidationError(f"chain slope does not change sign on [{lo}, {hi}]")
    return float(optimize.brentq(slope, lo, hi, xtol=1e-4))


# (number of linear variables, number of quadratic variables, power of t, kappa - alpha)
_CROSSCHECK_GEOMETRY = {
    'transversal': (0, 2, 1, 1.0),
    'ctangential': (1, 1, 2, 0.5),
    'totallyreal': (0, 1, 1, 1.5),
}


def _power_mass(c, m, a):
    """int_0^a (c + t)^-m dt."""
    if abs(m - 1.0) < 1e-12:
        return np.log((c + a) / c)
    return (c ** (1.0 - m) - (c + a) ** (1.0 - m)) / (m - 1.0)


def _power_inverse(c, m, a, fraction):
    """t in [0, a] with int_0^t (c + s)^-m ds = fraction * int_0^a."""
    if abs(m - 1.0) < 1e-12:
        return c * ((c + a) / c) ** fraction - c
    base = c ** (1.0 - m) - fraction * (m - 1.0) * _power_mass(c, m, a)
    return np.minimum(np.maximum(base, 0.0) ** (1.0 / (1.0 - m)) - c, a)


class _SetSampler:
    """
    Defensive mixture for the boundary variable: half uniform on the circle,
    half with density proportional to (c + t(x))^-m, t the distance to E.
    """

    def __init__(self, E: IntervalSet, c: float, m: float):
        self.circle = IntervalSet(E.intervals, (0.0, 2.0 * np.pi), periodic=True)
        self.c, self.m = c, m
        gaps = self.circle.gaps()
        half = 0.5 * gaps
        lows, highs = self.circle.lows, self.circle.highs
        nxt = np.append(lows[1:], lows[0] + 2.0 * np.pi)
        self.starts = np.concatenate([highs, nxt])
        self.directions = np.concatenate([np.ones(gaps.size), -np.ones(gaps.size)])
        self.halves = np.concatenate([half, half])
        self.lengths = self.circle.lengths
        masses = np.concatenate([_power_mass(c, m, self.halves), self.lengths * c ** (-m)])
        self.total = float(np.sum(masses))
        self.cdf = np.cumsum(masses) / self.total

    def density(self, x):
        t = distance_to_set(self.circle, x)
        return 0.5 / (2.0 * np.pi) + 0.5 * (self.c + t) ** (-self.m) / self.total

    def sample(self, rng, n: int) -> np.ndarray:
        uniform = rng.uniform(0.0, 2.0 * np.pi, size=n)
        pick = np.minimum(np.searchsorted(self.cdf, rng.uniform(size=n), side='right'), self.cdf.size - 1)
        fraction = rng.uniform(size=n)
        n_half = self.halves.size
        in_gap = pick < n_half
        gap_idx = np.where(in_gap, pick, 0)
        t = _power_inverse(self.c, self.m, self.halves[gap_idx], fraction)
        from_gap = self.starts[gap_idx] + self.directions[gap_idx] * t
        interval_idx = np.where(in_gap, 0, pick - n_half)
        from_interval = self.circle.lows[interval_idx] + fraction * self.lengths[interval_idx]
        targeted = np.where(in_gap, from_gap, from_interval)
        use_uniform = rng.uniform(size=n) < 0.5
        return np.mod(np.where(use_uniform, uniform, targeted), 2.0 * np.pi)


def _reduced_chain(E: IntervalSet, case: str, alpha: float, u: float) -> float:
    """u^2 int over the circle of (u + tau(t(x)))^-kappa, summed exactly over gaps of E."""
    _, _, tau_power, shift = _CROSSCHECK_GEOMETRY[case]
    kappa = alpha + shift
    circle = IntervalSet(E.intervals, (0.0, 2.0 * np.pi), periodic=True)
    half = 0.5 * circle.gaps()
    if tau_power == 1:
        gap_part = _power_mass(u, kappa, half)
    else:
        gap_part = half * u ** (-kappa) * hyp2f1(kappa, 0.5, 1.5, -half ** 2 / u)
    return u * u * (circle.measure * u ** (-kappa) + 2.0 * math.fsum(gap_part))


def chain_crosscheck_4d(case: str, E: IntervalSet, alpha: float, u_samples=(1e-2, 1e-3, 1e-4),
                        mc_budget: int = None, seed: int = None, control: bool = False,
                        config: Config = None) -> CrossCheckReport:
    """
    Monte Carlo of the full integral u^2 int x1^(1-alpha) / (u + x1 + Q + tau(t))^4
    against the reduced chain with the exact set distance t(x4) = dist(x4, E).

    transversal: Q = x2^2 + x3^2, tau = t; ctangential: Q = |x2| + x3^2, tau = t^2;
    totallyreal: Q = x3^2, tau = t. With control=True the Monte Carlo estimates the
    reduced integrand itself, so ratios should be 1 within the sampling error.
    """
    if config is None:
        config = Config()
    if case not in _CROSSCHECK_GEOMETRY:
        raise ValidationError(f"unknown chain case '{case}', expected one of {CHAIN_CASES}")
    mc_budget = config.mc_budget if mc_budget is None else int(mc_budget)
    seed = config.seed if seed is None else seed
    if mc_budget < 1_000_000:
        raise ValidationError(f"Monte Carlo budget must be at least 1e6, got {mc_budget}")
    if not 0.0 < alpha < 2.0:
        raise ValidationError(f"alpha must lie in (0, 2) for an integrable x1 weight, got {alpha}")
    n_linear, n_quadratic, tau_power, shift = _CROSSCHECK_GEOMETRY[case]
    kappa = alpha + shift
    rng = make_rng(seed)
    u_samples = np.asarray(u_samples, dtype=float)
    mc_values = np.empty(u_samples.size)
    mc_errors = np.empty(u_samples.size)
    reduced = np.empty(u_samples.size)

    for i, u in enumerate(u_samples):
        if tau_power == 1:
            sampler = _SetSampler(E, u, kappa)
        else:
            sampler = _SetSampler(E, math.sqrt(u), 2.0 * kappa)
        scales = [u] * n_linear + [math.sqrt(u)] * n_quadratic
        total = 0.0
        total_sq = 0.0
        done = 0
        while done < mc_budget:
            n = min(config.mc_chunk, mc_budget - done)
            x4 = sampler.sample(rng, n)
            t = distance_to_set(sampler.circle, x4)
            tau = t if tau_power == 1 else t * t
            weight = 1.0 / sampler.density(x4)
            if control:
                value = (u + tau) ** (-kappa) * weight
            else:
                log_norm = math.log((1.0 + u) / u)
                pick = rng.uniform(size=n) < 0.5
                x1 = np.where(pick, rng.uniform(size=n) ** (1.0 / (2.0 - alpha)),
                              u * ((1.0 + 1.0 / u) ** rng.uniform(size=n) - 1.0))
                x1 = np.maximum(x1, np.finfo(float).tiny)
                p1 = 0.5 * (2.0 - alpha) * x1 ** (1.0 - alpha) + 0.5 / ((u + x1) * log_norm)
                q = np.zeros(n)
                density = p1
                for j, a in enumerate(scales):
                    magnitude = a * ((1.0 + 1.0 / a) ** rng.uniform(size=n) - 1.0)
                    x = np.where(rng.uniform(size=n) < 0.5, -magnitude, magnitude)
                    q += np.abs(x) if j < n_linear else x * x
                    density = density / (2.0 * (a + np.abs(x)) * math.log((a + 1.0) / a))
                value = x1 ** (1.0 - alpha) / (u + x1 + q + tau) ** 4 / density * weight
            total += float(np.sum(value))
            total_sq += float(np.sum(value * value))
            done += n
        mean = total / done
        variance = max(total_sq / done - mean * mean, 0.0)
        mc_values[i] = u * u * mean
        mc_errors[i] = u * u * math.sqrt(variance / done)
        reduced[i] = _reduced_chain(E, case, alpha, float(u))
        relative = mc_errors[i] / abs(mc_values[i]) if mc_values[i] != 0 else math.inf
        logger.debug(
            f"Cross-check | "
            f"case: {case} | "
            f"u: {u:.1e} | "
            f"mc: {mc_values[i]:.4e} | "
            f"rel err: {relative:.3e} | "
            f"reduced: {reduced[i]:.4e}"
        )
        if relative > config.mc_max_rel_error:
            raise NumericalInstabilityError(
                f"Monte Carlo relative error {relative:.3f} above {config.mc_max_rel_error}; increase mc_budget")
    ratios = mc_values / reduced
    band = ratio_band(ratios).factor
    return CrossCheckReport(case, float(alpha), u_samples, mc_values, mc_errors, reduced, ratios, band)


def layer_cake_check(points, phi: Callable, dphi: Callable, config: Config = None) -> LayerCakeResult:
    """
    Both sides of int_T phi(dist(x, E)) dx = int_0^pi |phi'(t)| |E_t| dt + 2 pi phi(pi)
    for a finite set E of angles; the left side integrates piece by piece between
    the points and the midpoints of the gaps, the right side uses the exact |E_t|.
    """
    if config is None:
        config = Config()
    grid = np.linspace(0.0, np.pi, 1001)
    values = np.asarray(phi(grid), dtype=float)
    if np.any(np.diff(values) > 1e-12 * np.max(np.abs(values))) or np.any(np.asarray(dphi(grid)) > 0):
        raise ValidationError("profile must be nonincreasing")
    pts = np.sort(np.mod(np.asarray(points, dtype=float).ravel(), 2.0 * np.pi))
    E = IntervalSet.from_points(pts, (0.0, 2.0 * np.pi), periodic=True)
    nxt = np.append(pts[1:], pts[0] + 2.0 * np.pi)
    breaks = np.sort(np.concatenate([pts, 0.5 * (pts + nxt), nxt]))
    pieces = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo <= 0 or lo >= pts[0] + 2.0 * np.pi:
            continue
        value, _ = _quad(lambda x: phi(distance_to_set(E, x)), lo, hi, config)
        pieces.append(value)
    lhs = math.fsum(pieces)
    kinks = np.unique(0.5 * E.gaps())
    kinks = kinks[(kinks > 0) & (kinks < np.pi)]
    edges = np.concatenate([[0.0], kinks, [np.pi]])
    rhs_pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = _quad(lambda t: abs(dphi(t)) * neighborhood_measure(E, max(t, 1e-300)), lo, hi, config)
        rhs_pieces.append(value)
    rhs = math.fsum(rhs_pieces) + 2.0 * np.pi * float(phi(np.pi))
    relative = abs(lhs - rhs) / max(abs(lhs), np.finfo(float).tiny)
    logger.debug(
        f"Layer cake | "
        f"points: {pts.size} | "
        f"lhs: {lhs:.10e} | "
        f"rhs: {rhs:.10e}"
    )
    return LayerCakeResult(lhs, rhs, relative)


def predicted_critical_index(case: str, d: float) -> float:
    return {'transversal': 2.0 - d, 'ctangential': 2.0 - 0.5 * d, 'product': 1.5 - d}[case]


def estimate_critical_index(E, case: str, config: Config = None) -> CriticalIndexReport:
    """
    Cyclic side from the chain slope crossing, noncyclic side from the capacity
    threshold, both for the measured d = 1 - (profile slope).
    """
    if config is None:
        config = Config()
    if case not in _CHAIN_FOR_CASE:
        raise ValidationError(f"unknown case '{case}', expected one of {tuple(_CHAIN_FOR_CASE)}")
    if isinstance(E, CantorSpec):
        spec = E
        intervals = cantor_build(spec)
        t_grid = spec.profile_grid(config.profile_top_level, config.profile_points)
    elif isinstance(E, IntervalSet):
        if case == 'product':
            raise ValidationError("product case needs a CantorSpec")
        spec = None
        intervals = E
        t_grid = config.profile_t_grid
    else:
        raise ValidationError("expected a CantorSpec or IntervalSet")
    profile, fit = measure_profile(intervals, t_grid, config)
    d = 1.0 - fit.exponent
    cyclic = implied_critical_alpha(_CHAIN_FOR_CASE[case], d, config)
    capacity = critical_alpha_capacity(spec if case == 'product' else profile, case, config)
    predicted = predicted_critical_index(case, d)
    logger.debug(
        f"Critical index | "
        f"case: {case} | "
        f"d: {d:.4f} | "
        f"cyclic: {cyclic:.4f} | "
        f"capacity: {capacity.alpha_c:.4f} | "
        f"predicted: {predicted:.4f}"
    )
    return CriticalIndexReport(case, d, predicted, cyclic, capacity.alpha_c,
                               abs(cyclic - capacity.alpha_c), capacity)
