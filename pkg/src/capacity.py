"""
Riesz kernels, energies of discrete measures, natural measures on Cantor and
product sets, and capacity-side detection of the critical index.
"""
from dataclasses import dataclass
import json
import logging
import math

import numpy as np

from .ball_geometry import CurveChart
from .boundary_sets import CantorSpec, IntervalSet, MeasureProfile, cantor_build, measure_profile
from .config import Config
from .exceptions import ProfileResolutionError, ValidationError
from .tools.hints import CriticalAlphaResult, FitResult
from .tools.misc import fit_power_law, make_rng, relative_change

logger = logging.getLogger('Capacity')

CASES = ('transversal', 'ctangential', 'product')
POLICIES = ('exclude-diagonal', 'floored')
_WINDOW_RATIO = 2.0  # cutoff ratio between consecutive divergence windows


@dataclass(frozen=True)
class RieszKernelParams:
    alpha: float
    n: int = 2

    def __post_init__(self):
        if not 0.0 < self.alpha <= self.n:
            raise ValidationError(f"Riesz index must lie in (0, {self.n}], got {self.alpha}")


def riesz_kernel(t, p: RieszKernelParams):
    """t^(alpha-n) for alpha < n, log(e/t) at alpha = n."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValidationError("Riesz kernel needs t > 0")
    if p.alpha == p.n:
        value = 1.0 - np.log(t_arr)
    else:
        value = t_arr ** (p.alpha - p.n)
    return float(value) if value.ndim == 0 else value


@dataclass
class DiscreteMeasure:
    """
    Weighted atoms on the sphere (complex (M, 2) points) or on a parameter line (real (M,)).

    resolution is the smallest scale the atoms represent, used by the floored policy.
    """

    points: np.ndarray
    masses: np.ndarray
    resolution: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points)
        masses = np.asarray(self.masses, dtype=float).ravel()
        if np.iscomplexobj(pts):
            pts = pts.reshape(-1, 2).astype(complex)
        else:
            pts = pts.astype(float).ravel()
        if pts.shape[0] != masses.size or masses.size == 0:
            raise ValidationError("measure needs one positive mass per atom")
        if np.any(masses <= 0):
            raise ValidationError("atom masses must be positive")
        if abs(math.fsum(masses) - 1.0) > 1e-12:
            raise ValidationError(f"masses must sum to 1, got {math.fsum(masses):.15f}")
        self.points = pts
        self.masses = masses

    @property
    def on_sphere(self) -> bool:
        return self.points.ndim == 2

    @property
    def size(self) -> int:
        return int(self.masses.size)

    def distances(self, rows: slice, others: np.ndarray = None) -> np.ndarray:
        """Distances from atoms[rows] to `others` (default: all atoms)."""
        targets = self.points if others is None else others
        if self.on_sphere:
            return np.abs(1.0 - self.points[rows] @ np.conj(targets).T)
        return np.abs(self.points[rows][:, None] - targets[None, :])

    def to_json(self) -> str:
        if self.on_sphere:
            atoms = [{'z1': [p[0].real, p[0].imag], 'z2': [p[1].real, p[1].imag], 'mass': m}
                     for p, m in zip(self.points.tolist(), self.masses.tolist())]
        else:
            atoms = [{'x': p, 'mass': m} for p, m in zip(self.points.tolist(), self.masses.tolist())]
        return json.dumps({'resolution': self.resolution, 'atoms': atoms}, sort_keys=True)


def energy(mu: DiscreteMeasure, p: RieszKernelParams, policy: str = 'exclude-diagonal',
           config: Config = None) -> float:
    """
    Riesz energy sum_{i,j} m_i m_j K(d_K(zeta_i, zeta_j)).

    exclude-diagonal drops i = j and rejects coincident atoms; floored keeps
    the diagonal with distances floored at mu.resolution (+inf if that is 0).
    Row sums are reduced with math.fsum in atom order, so the value does not
    depend on the block size.
    """
    if config is None:
        config = Config()
    if policy not in POLICIES:
        raise ValidationError(f"unknown diagonal policy '{policy}', expected one of {POLICIES}")
    if policy == 'exclude-diagonal' and mu.size < 2:
        raise ValidationError("single atom has no off-diagonal energy")
    if policy == 'floored' and mu.resolution <= 0:
        return math.inf
    rows = []
    block = max(1, int(config.energy_block))
    for start in range(0, mu.size, block):
        stop = min(start + block, mu.size)
        d = mu.distances(slice(start, stop))
        local = np.arange(stop - start)
        if policy == 'exclude-diagonal':
            d[local, start + local] = np.inf
            if np.any(d == 0):
                raise ValidationError("coincident atoms under exclude-diagonal policy")
            kernel = np.where(np.isinf(d), 0.0, riesz_kernel(np.where(np.isinf(d), 1.0, d), p))
        else:
            kernel = riesz_kernel(np.maximum(d, mu.resolution), p)
        rows.append(mu.masses[start:stop] * (kernel @ mu.masses))
    return math.fsum(np.concatenate(rows))


def energy_layer_cake(mu: DiscreteMeasure, p: RieszKernelParams) -> float:
    """
    Same off-diagonal energy via the layer-cake form: with pair distances sorted
    ascending and S_l the pair mass at distance >= d_l,
    E = K(d_1) S_1 + sum_{l>=2} (K(d_l) - K(d_{l-1})) S_l.
    """
    if mu.size < 2:
        raise ValidationError("single atom has no off-diagonal energy")
    i, j = np.triu_indices(mu.size, k=1)
    if mu.on_sphere:
        d = np.abs(1.0 - np.sum(mu.points[i] * np.conj(mu.points[j]), axis=1))
    else:
        d = np.abs(mu.points[i] - mu.points[j])
    if np.any(d == 0):
        raise ValidationError("coincident atoms under exclude-diagonal policy")
    order = np.argsort(d, kind='stable')
    d = d[order]
    weights = 2.0 * mu.masses[i][order] * mu.masses[j][order]
    tails = np.cumsum(weights[::-1])[::-1]
    kernel = riesz_kernel(d, p)
    jumps = np.diff(kernel, prepend=0.0)
    return math.fsum(jumps * tails)


def capacity_lower_bound(mu: DiscreteMeasure, p: RieszKernelParams) -> float:
    """1 / energy of a probability measure bounds the capacity from below."""
    value = energy(mu, p)
    return 0.0 if not math.isfinite(value) else 1.0 / value


def _push(chart: CurveChart, params: np.ndarray) -> np.ndarray:
    if chart is None:
        return params
    return chart.map(params)


def natural_cantor_measure(spec: CantorSpec, level: int, chart: CurveChart = None) -> DiscreteMeasure:
    """Mass 2^-level at the midpoint of each level interval, pushed through the chart."""
    if not 0 <= level <= spec.depth:
        raise ValidationError(f"level must lie in [0, {spec.depth}], got {level}")
    intervals = cantor_build(CantorSpec(spec.lam, level, spec.base))
    masses = np.full(intervals.count, 2.0 ** (-level))
    return DiscreteMeasure(_push(chart, intervals.midpoints), masses, spec.interval_length(level))


def _fiber_count(spec: CantorSpec, level: int, x_range) -> int:
    """Atoms along x so that their Koranyi spacing x^2/2 matches the level scale."""
    width = float(x_range[1] - x_range[0])
    return max(1, int(math.ceil(width / math.sqrt(2.0 * spec.interval_length(level)))))


def product_measure(spec: CantorSpec, level: int, x_range=(-0.5, 0.5), n_x: int = None,
                    chart: CurveChart = None) -> DiscreteMeasure:
    """mu_1 x mu_2 on {(e^{is} cos x, sin x)}: Cantor natural measure times uniform x cells."""
    if chart is None:
        chart = CurveChart.ms_family()
    if not 0 <= level <= spec.depth:
        raise ValidationError(f"level must lie in [0, {spec.depth}], got {level}")
    n_x = _fiber_count(spec, level, x_range) if n_x is None else int(n_x)
    s = cantor_build(CantorSpec(spec.lam, level, spec.base)).midpoints
    lo, hi = x_range
    x = lo + (np.arange(n_x) + 0.5) * (hi - lo) / n_x
    grid_s, grid_x = np.meshgrid(s, x, indexing='ij')
    params = np.stack([grid_s.ravel(), grid_x.ravel()], axis=1)
    masses = np.full(params.shape[0], 1.0 / params.shape[0])
    return DiscreteMeasure(chart.map(params), masses, spec.interval_length(level))


def ball_measure_profile(mu: DiscreteMeasure, centers, r_grid) -> FitResult:
    """Fit of log mean_c mu(K(c, r)) against log r over the given centers."""
    centers = np.asarray(centers)
    r_grid = np.asarray(r_grid, dtype=float)
    if mu.on_sphere:
        centers = centers.reshape(-1, 2).astype(complex)
    else:
        centers = centers.astype(float).ravel()
    totals = np.zeros(r_grid.size)
    for center in centers:
        if mu.on_sphere:
            d = np.abs(1.0 - mu.points @ np.conj(center))
        else:
            d = np.abs(mu.points - center)
        order = np.argsort(d, kind='stable')
        cumulative = np.concatenate([[0.0], np.cumsum(mu.masses[order])])
        totals += cumulative[np.searchsorted(d[order], r_grid, side='right')]
    fit = fit_power_law(r_grid, totals / centers.shape[0])
    logger.debug(
        f"Ball measure profile | "
        f"centers: {centers.shape[0]} | "
        f"exponent: {fit.exponent:.4f}"
    )
    return fit


def _window_integrals(profile: MeasureProfile, power: float, cutoffs: np.ndarray) -> np.ndarray:
    """
    int t^power / |E_t| dt over [cutoffs[k+1], cutoffs[k]] with |E_t| a piecewise power law.
    """
    t = np.unique(np.concatenate([profile.t[(profile.t > cutoffs[-1]) & (profile.t < cutoffs[0])],
                                  cutoffs]))
    v = profile.at(t)
    log_ratio = np.log(t[1:] / t[:-1])
    beta = np.log(v[1:] / v[:-1]) / log_ratio
    q1 = power - beta + 1.0
    x = q1 * log_ratio
    shape = np.where(np.abs(q1) > 1e-12, np.expm1(x) / np.where(q1 == 0, 1.0, q1), log_ratio)
    pieces = t[:-1] ** (power + 1.0) / v[:-1] * shape
    edges = np.searchsorted(t, cutoffs[::-1])
    return np.array([math.fsum(pieces[edges[k]:edges[k + 1]]) for k in range(cutoffs.size - 1)])[::-1]


def _profile_growth(profile: MeasureProfile, alpha: float, case: str, cutoffs: np.ndarray) -> float:
    power = alpha - 2.0 if case == 'transversal' else 2.0 * alpha - 4.0
    increments = _window_integrals(profile, power, cutoffs)
    return fit_power_law(1.0 / cutoffs[1:], increments).exponent


def _cutoffs(profile: MeasureProfile) -> np.ndarray:
    t_lo, t_hi = profile.t[0], profile.t[-1]
    count = int(math.floor(math.log(t_hi / t_lo) / math.log(_WINDOW_RATIO)))
    if count < 3:
        raise ProfileResolutionError("profile spans fewer than three divergence windows",
                                     t_hi * _WINDOW_RATIO ** (-3))
    return t_hi * _WINDOW_RATIO ** (-np.arange(count + 1, dtype=float))


class _ProductEnergies:
    """
    Level potentials of the product measure at fixed seeded centers, reused across alpha.

    Center-to-atom distances are floored at the level scale, as in the floored
    energy policy; centers sit on atom columns of the finest level.
    """

    def __init__(self, spec: CantorSpec, levels, x_range, config: Config):
        rng = make_rng(config.seed)
        finest = cantor_build(CantorSpec(spec.lam, max(levels), spec.base)).midpoints
        s = rng.choice(finest, size=config.capacity_centers, replace=True)
        x = rng.uniform(0.5 * x_range[0], 0.5 * x_range[1], size=config.capacity_centers)
        self.centers = CurveChart.ms_family().map(np.stack([s, x], axis=1))
        self.levels = list(levels)
        self.scales = np.array([spec.interval_length(m) for m in self.levels])
        self.distances = []
        self.masses = []
        for m, scale in zip(self.levels, self.scales):
            mu = product_measure(spec, m, x_range)
            d = np.abs(1.0 - self.centers @ np.conj(mu.points).T)
            self.distances.append(np.maximum(d, scale))
            self.masses.append(mu.masses)

    def potentials(self, alpha: float) -> np.ndarray:
        p = RieszKernelParams(alpha)
        return np.array([math.fsum(riesz_kernel(d, p) @ masses) / d.shape[0]
                         for d, masses in zip(self.distances, self.masses)])

    def growth(self, alpha: float) -> float:
        increments = np.abs(np.diff(self.potentials(alpha)))
        return fit_power_law(1.0 / self.scales[1:], increments).exponent


def _bisect_threshold(growth, lo: float, hi: float, tol: float, case: str) -> CriticalAlphaResult:
    """Largest alpha with growth >= 0, by bisection on the sign of the growth slope."""
    g_lo, g_hi = growth(lo), growth(hi)
    evaluations = 2
    if g_lo < 0:
        logger.warning(f"No divergence at the lower end | case: {case} | alpha: {lo:.3f}")
        return CriticalAlphaResult(case, lo, (lo, lo), evaluations, (g_lo, g_lo))
    if g_hi >= 0:
        logger.warning(f"Still diverging at the upper end | case: {case} | alpha: {hi:.3f}")
        return CriticalAlphaResult(case, hi, (hi, hi), evaluations, (g_hi, g_hi))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = growth(mid)
        evaluations += 1
        if g_mid >= 0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    logger.debug(
        f"Capacity threshold | "
        f"case: {case} | "
        f"alpha_c: {0.5 * (lo + hi):.4f} | "
        f"evaluations: {evaluations}"
    )
    return CriticalAlphaResult(case, 0.5 * (lo + hi), (lo, hi), evaluations, (g_lo, g_hi))


def critical_alpha_capacity(E, case: str, config: Config = None, x_range=(-0.5, 0.5)) -> CriticalAlphaResult:
    """
    Capacity-side critical index: the alpha where the truncated divergence quantity
    switches from growing to saturating as the cutoff shrinks.

    transversal: int dt / (t^(2-alpha) |E_t|); ctangential: the same with t^(4-2alpha);
    both from a MeasureProfile (an IntervalSet is profiled first). product: potentials
    of mu_1 x mu_2 across refinement levels of a CantorSpec.
    """
    if config is None:
        config = Config()
    if case not in CASES:
        raise ValidationError(f"unknown case '{case}', expected one of {CASES}")
    lo, hi = config.capacity_alpha_lo, config.capacity_alpha_hi
    if case == 'product':
        if not isinstance(E, CantorSpec):
            raise ValidationError("product case needs a CantorSpec")
        family = _ProductEnergies(E, config.capacity_levels, x_range, config)
        return _bisect_threshold(family.growth, lo, hi, config.bisection_tol, case)
    if isinstance(E, IntervalSet):
        E, _ = measure_profile(E, config=config)
    if not isinstance(E, MeasureProfile):
        raise ValidationError(f"{case} case needs a MeasureProfile or IntervalSet")
    cutoffs = _cutoffs(E)
    if case == 'ctangential':
        hi = max(hi, 2.0)
    return _bisect_threshold(lambda a: _profile_growth(E, a, case, cutoffs), lo, hi,
                             config.bisection_tol, case)


def energy_growth(spec: CantorSpec, case: str, alphas, levels, config: Config = None,
                  x_range=(-0.5, 0.5)) -> list:
    """
    Rows {alpha, level, energy, change, settled} of natural-measure energies
    across refinement levels.

    transversal/ctangential use the full double sum on the chart; product uses
    the mean potential at the seeded centers. ``change`` is the relative change
    from the previous level and ``settled`` marks changes within cauchy_tol;
    both are None on the first level of each alpha.
    """
    if config is None:
        config = Config()
    if case not in CASES:
        raise ValidationError(f"unknown case '{case}', expected one of {CASES}")
    rows = []
    if case == 'product':
        family = _ProductEnergies(spec, levels, x_range, config)
        for alpha in alphas:
            values = [float(v) for v in family.potentials(alpha)]
            rows.extend(_growth_rows(alpha, family.levels, values, config.cauchy_tol))
        return rows
    chart = CurveChart.transversal() if case == 'transversal' else CurveChart.ctangential()
    measures = [natural_cantor_measure(spec, m, chart) for m in levels]
    for alpha in alphas:
        p = RieszKernelParams(alpha)
        values = [energy(mu, p, config=config) for mu in measures]
        rows.extend(_growth_rows(alpha, levels, values, config.cauchy_tol))
    return rows


def _growth_rows(alpha, levels, values, tol: float) -> list:
    rows = []
    previous = None
    for level, value in zip(levels, values):
        change = None if previous is None else relative_change(value, previous)
        rows.append({'alpha': float(alpha), 'level': int(level), 'energy': float(value),
                     'change': change, 'settled': None if change is None else bool(change <= tol)})
        previous = value
    return rows
