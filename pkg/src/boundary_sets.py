"""
Interval-set boundary sets: Cantor constructions, neighborhood-measure profiles,
covering numbers, the K-set covering integral and product sets over the M_s chart.
"""
from dataclasses import dataclass
import json
import logging
import math

import numpy as np

from .ball_geometry import CurveChart
from .config import Config
from .exceptions import ValidationError
from .tools.hints import FitResult, KSetReport
from .tools.misc import fit_power_law, harmonic_number

logger = logging.getLogger('BoundarySets')

_COVER_SLACK = 1e-9  # relative tolerance on block lengths in covering sweeps
_GAP_TIE = 1e-9

# dissection ratio of each named preset
PRESETS = {
    'middle-thirds': 1.0 / 3.0,
    'quarter': 0.25,
    'ratio-0.4': 0.4,
}


@dataclass(frozen=True)
class CantorSpec:
    """Constant dissection ratio Cantor set on the base arc [lo, hi]."""

    lam: float
    depth: int
    base: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.lam < 0.5:
            raise ValidationError(f"dissection ratio must lie in (0, 1/2), got {self.lam}")
        if int(self.depth) < 0:
            raise ValidationError(f"depth must be nonnegative, got {self.depth}")
        lo, hi = self.base
        if not hi > lo:
            raise ValidationError(f"base arc must have positive length, got {self.base}")

    @property
    def length(self) -> float:
        return float(self.base[1] - self.base[0])

    @property
    def dimension(self) -> float:
        return math.log(2.0) / math.log(1.0 / self.lam)

    @property
    def first_gap(self) -> float:
        """l_1, fixed by sum_n 2^(n-1) l_n = |E_0| with l_n = l_1 lam^(n-1)."""
        return self.length * (1.0 - 2.0 * self.lam)

    def gap_length(self, n: int) -> float:
        return self.first_gap * self.lam ** (n - 1)

    def interval_length(self, n: int) -> float:
        return self.length * self.lam ** n

    def removed_length(self) -> float:
        return math.fsum(2.0 ** (n - 1) * self.gap_length(n) for n in range(1, self.depth + 1))

    def profile_grid(self, top_level: int, points: int) -> np.ndarray:
        """Log-spaced t-grid from two generations above the finest scale up to level top_level."""
        return np.geomspace(self.interval_length(self.depth - 2), self.interval_length(top_level), points)


def cantor_preset(name: str, depth: int = None, config: Config = None) -> CantorSpec:
    if config is None:
        config = Config()
    if name not in PRESETS:
        raise ValidationError(f"unknown preset '{name}', expected one of {sorted(PRESETS)}")
    depth = config.cantor_depth if depth is None else depth
    return CantorSpec(PRESETS[name], depth, (config.base_lo, config.base_hi))


@dataclass
class IntervalSet:
    """Sorted disjoint closed intervals inside an ambient segment or circle."""

    intervals: np.ndarray
    ambient: tuple = (0.0, 1.0)
    periodic: bool = False

    def __post_init__(self):
        table = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if table.shape[0] == 0:
            raise ValidationError("interval set is empty")
        if np.any(table[:, 1] < table[:, 0]):
            raise ValidationError("interval with hi < lo")
        if np.any(table[1:, 0] < table[:-1, 1]):
            raise ValidationError("intervals must be sorted and disjoint")
        lo, hi = float(self.ambient[0]), float(self.ambient[1])
        if table[0, 0] < lo or table[-1, 1] > hi:
            raise ValidationError(f"intervals leave the ambient [{lo}, {hi}]")
        self.intervals = table
        self.ambient = (lo, hi)

    @classmethod
    def from_points(cls, points, ambient=(0.0, 1.0), periodic=False) -> 'IntervalSet':
        pts = np.sort(np.asarray(points, dtype=float).ravel())
        return cls(np.stack([pts, pts], axis=1), ambient, periodic)

    @property
    def lows(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def highs(self) -> np.ndarray:
        return self.intervals[:, 1]

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def count(self) -> int:
        return int(self.intervals.shape[0])

    @property
    def measure(self) -> float:
        return math.fsum(self.lengths)

    @property
    def diameter(self) -> float:
        return float(self.intervals[-1, 1] - self.intervals[0, 0])

    @property
    def ambient_length(self) -> float:
        return self.ambient[1] - self.ambient[0]

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.lows + self.highs)

    def gaps(self) -> np.ndarray:
        """Complementary gap lengths; the wrap gap is included on a circle."""
        inner = self.lows[1:] - self.highs[:-1]
        if self.periodic:
            inner = np.append(inner, self.ambient_length - self.diameter)
        return inner

    def clip(self, lo: float, hi: float):
        """Pieces of the set inside [lo, hi] as (lows, highs), possibly empty."""
        first = int(np.searchsorted(self.highs, lo, side='left'))
        last = int(np.searchsorted(self.lows, hi, side='right'))
        lows = np.maximum(self.lows[first:last], lo)
        highs = np.minimum(self.highs[first:last], hi)
        return lows, highs

    def to_dict(self) -> dict:
        return {'ambient': list(self.ambient), 'periodic': bool(self.periodic),
                'intervals': self.intervals.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'IntervalSet':
        data = json.loads(text)
        return cls(np.asarray(data['intervals'], dtype=float), tuple(data['ambient']),
                   bool(data.get('periodic', False)))


@dataclass
class MeasureProfile:
    """|E_t| sampled on an increasing t-grid."""

    t: np.ndarray
    values: np.ndarray
    ambient_length: float = math.inf

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise ValidationError("profile t-grid and values must be 1D arrays of equal length")
        _check_grid(self.t)
        if np.any(self.values <= 0):
            raise ValidationError("profile values must be positive")
        if np.any(np.diff(self.values) < -1e-12 * self.values[1:]):
            raise ValidationError("profile values must be nondecreasing in t")
        if np.any(self.values > self.ambient_length * (1.0 + 1e-12)):
            raise ValidationError("profile exceeds the ambient length")

    @classmethod
    def power_law(cls, exponent: float, t_grid, scale: float = 1.0) -> 'MeasureProfile':
        """Synthetic profile scale * t^exponent."""
        t = np.asarray(t_grid, dtype=float)
        return cls(t, scale * t ** exponent)

    @property
    def t_min(self) -> float:
        return float(self.t[0])

    def at(self, t):
        """Piecewise power-law interpolation; clamps outside the grid."""
        logs = np.interp(np.log(t), np.log(self.t), np.log(self.values))
        return np.exp(logs)


def _check_grid(t_grid: np.ndarray):
    if t_grid.size < 3:
        raise ValidationError("t-grid needs at least three points")
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t-grid must be positive and strictly increasing")


def dissect(base, fractions) -> IntervalSet:
    """
    Centered-gap dissection of the base arc.

    Generation n removes the middle fraction fractions[n-1] of every
    generation n-1 interval.
    """
    lo, hi = float(base[0]), float(base[1])
    if not hi > lo:
        raise ValidationError(f"base arc must have positive length, got {base}")
    lefts = np.array([lo])
    length = hi - lo
    for theta in fractions:
        if not 0.0 < theta < 1.0:
            raise ValidationError(f"gap fraction must lie in (0, 1), got {theta}")
        child = 0.5 * length * (1.0 - theta)
        lefts = np.stack([lefts, lefts + (length - child)], axis=1).ravel()
        length = child
    intervals = np.stack([lefts, lefts + length], axis=1)
    intervals[-1, 1] = min(intervals[-1, 1], hi)
    return IntervalSet(intervals, (lo, hi))


def cantor_build(spec: CantorSpec) -> IntervalSet:
    """Depth-m constant-ratio Cantor set: 2^m intervals of length lam^m |E_0|."""
    intervals = dissect(spec.base, [1.0 - 2.0 * spec.lam] * int(spec.depth))
    logger.debug(
        f"Cantor build | "
        f"lambda: {spec.lam:.4f} | "
        f"depth: {spec.depth} | "
        f"intervals: {intervals.count}"
    )
    return intervals


def fat_cantor_build(base, depth: int, decay: float) -> IntervalSet:
    """Dissection with gap fractions decay^n; positive measure in the limit."""
    if not 0.0 < decay < 1.0:
        raise ValidationError(f"decay must lie in (0, 1), got {decay}")
    return dissect(base, decay ** np.arange(1, int(depth) + 1))


def neighborhood_measure(E: IntervalSet, t):
    """
    Exact Lebesgue measure of {x : dist(x, E) <= t} within the ambient.

    Every gap g contributes min(g, 2t); on a segment the two ends add
    min(t, room to the ambient boundary).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValidationError("neighborhood radius must be positive")
    gaps = np.sort(E.gaps())
    partial = np.concatenate([[0.0], np.cumsum(gaps)])
    width = 2.0 * t_arr
    k = np.searchsorted(gaps, width, side='right')
    total = E.measure + partial[k] + (gaps.size - k) * width
    if not E.periodic:
        total = total + np.minimum(t_arr, E.lows[0] - E.ambient[0])
        total = total + np.minimum(t_arr, E.ambient[1] - E.highs[-1])
    total = np.minimum(total, E.ambient_length)
    return float(total) if total.ndim == 0 else total


def measure_profile(E: IntervalSet, t_grid=None, config: Config = None):
    """
    Profile t -> |E_t| and its least-squares log-log slope.

    Returns:
        (MeasureProfile, FitResult); for constant-ratio Cantor sets the slope estimates 1 - d
    """
    if config is None:
        config = Config()
    t_grid = config.profile_t_grid if t_grid is None else np.asarray(t_grid, dtype=float)
    _check_grid(t_grid)
    gaps = E.gaps()
    positive = gaps[gaps > 0]
    if positive.size and t_grid[0] < positive.min() / 10.0:
        logger.warning(f"Profile grid starts below the smallest gap / 10 | t_min: {t_grid[0]:.3e}")
    values = neighborhood_measure(E, t_grid)
    profile = MeasureProfile(t_grid, np.atleast_1d(values), E.ambient_length)
    fit = fit_power_law(t_grid, profile.values)
    logger.debug(
        f"Measure profile | "
        f"points: {t_grid.size} | "
        f"slope: {fit.exponent:.4f} | "
        f"residual: {fit.residual:.3e}"
    )
    return profile, fit


def _greedy_count(lows: np.ndarray, highs: np.ndarray, eps: float) -> int:
    span = eps * (1.0 + _COVER_SLACK)
    n = lows.size
    count = 1
    end = lows[0] + span
    while True:
        j = int(np.searchsorted(highs, end, side='right'))
        if j >= n:
            return count
        if lows[j] > end:
            count += 1
            end = lows[j] + span
        else:
            k = int(math.ceil((highs[j] - end) / span))
            count += k
            end += k * span


def covering_number(E: IntervalSet, eps: float) -> int:
    """Minimal number of length-eps blocks covering E (greedy left-to-right sweep)."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return _greedy_count(E.lows, E.highs, float(eps))


def greedy_cover(E: IntervalSet, eps: float) -> np.ndarray:
    """Left endpoints of the greedy eps-blocks; each lies in E."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    lows, highs = E.lows, E.highs
    span = eps * (1.0 + _COVER_SLACK)
    starts = [np.array([lows[0]])]
    end = lows[0] + span
    while True:
        j = int(np.searchsorted(highs, end, side='right'))
        if j >= lows.size:
            break
        if lows[j] > end:
            starts.append(np.array([lows[j]]))
            end = lows[j] + span
        else:
            k = int(math.ceil((highs[j] - end) / span))
            starts.append(end + span * np.arange(k))
            end += k * span
    return np.concatenate(starts)


def _interval_tail(length: float, x: float) -> float:
    """int_x^length ceil(length / eps) d eps."""
    m = math.ceil(length / x)
    if m <= 1:
        return 0.0
    return m * (length / (m - 1) - x) + length * float(harmonic_number(m - 2))


def _single_interval_integral(length: float, a: float, b: float) -> float:
    total = max(0.0, b - max(a, length))
    upper = min(b, length)
    if upper > a:
        total += _interval_tail(length, a) - _interval_tail(length, upper)
    return total


def _step_integral(lows, highs, x0, x1, tol) -> float:
    """Integral of the monotone step function eps -> N_eps over [x0, x1]."""
    total = 0.0
    stack = [(x0, x1, _greedy_count(lows, highs, x0), _greedy_count(lows, highs, x1))]
    while stack:
        lo, hi, n_lo, n_hi = stack.pop()
        if n_lo == n_hi:
            total += n_lo * (hi - lo)
            continue
        if hi - lo <= tol:
            total += 0.5 * (n_lo + n_hi) * (hi - lo)
            continue
        mid = 0.5 * (lo + hi)
        n_mid = _greedy_count(lows, highs, mid)
        stack.append((lo, mid, n_lo, n_mid))
        stack.append((mid, hi, n_mid, n_hi))
    return total


def _covering_integral(lows, highs, a, b, cache, quantum) -> float:
    """
    int_a^b N_eps(pieces) d eps by splitting at the largest gap.

    Below the largest gap G the count is additive over the pieces between
    maximal gaps; on [G, diam) it is integrated as an exact step function;
    above the diameter it is 1.
    """
    if b <= a:
        return 0.0
    diam = highs[-1] - lows[0]
    if diam <= a:
        return b - a
    gaps = lows[1:] - highs[:-1]
    if lows.size == 1 or gaps.max() <= 0:
        return _single_interval_integral(diam, a, b)
    offsets = np.concatenate([lows - lows[0], highs - lows[0]])
    key = (np.rint(offsets / quantum).astype(np.int64).tobytes(), int(round(b / quantum)))
    if key in cache:
        return cache[key]

    largest = gaps.max()
    total = 0.0
    cut = min(b, largest)
    if cut > a:
        splits = np.flatnonzero(gaps >= largest * (1.0 - _GAP_TIE)) + 1
        for child_lo, child_hi in zip(np.split(lows, splits), np.split(highs, splits)):
            total += _covering_integral(child_lo, child_hi, a, cut, cache, quantum)
    mixed_lo, mixed_hi = max(a, largest), min(b, diam)
    if mixed_hi > mixed_lo:
        total += _step_integral(lows, highs, mixed_lo, mixed_hi, 1e-12 * diam)
    if b > max(a, diam):
        total += b - max(a, diam)
    cache[key] = total
    return total


def _dyadic_family(E: IntervalSet, max_level: int):
    lo, hi = E.ambient
    for level in range(max_level + 1):
        width = (hi - lo) / 2 ** level
        for j in range(2 ** level):
            yield lo + j * width, lo + (j + 1) * width


def _kset_sup(E, family, floor, r_grid):
    cache = {}
    quantum = floor * 1e-3
    best = (0.0, (float('nan'), float('nan')))
    for j_lo, j_hi in family:
        lows, highs = E.clip(j_lo, j_hi)
        if lows.size == 0:
            continue
        radii = [j_hi - j_lo] if r_grid is None else [r for r in r_grid if r <= j_hi - j_lo]
        for r in radii:
            if r <= floor:
                continue
            value = _covering_integral(lows, highs, floor, r, cache, quantum) / r
            if value > best[0]:
                best = (value, (j_lo, j_hi))
    return best


def kset_check(E: IntervalSet, r_grid=None, J_family=None, floor: float = None,
               config: Config = None) -> KSetReport:
    """
    Covering-integral test sup_(J, r) (1/r) int N_eps(J cap E) d eps.

    The integral starts at a resolution floor (default: the finer of the
    smallest interval length and the deepest dyadic scale). The sup is taken
    again with the floor raised by kset_coarse_factor; a sup that keeps
    growing per log-unit of the floor marks E as not a K-set.

    Args:
        E: interval set
        r_grid: radii; default r = |J| for every J
        J_family: iterable of (lo, hi) intervals; default all dyadic subintervals
            of the ambient down to kset_max_level

    Returns:
        KSetReport
    """
    if config is None:
        config = Config()
    if floor is None:
        dyadic = E.ambient_length * 2.0 ** (-config.kset_max_level)
        lengths = E.lengths[E.lengths > 0]
        floor = min(float(lengths.min()), dyadic) if lengths.size else dyadic
    family = list(J_family) if J_family is not None else list(_dyadic_family(E, config.kset_max_level))
    constant, worst = _kset_sup(E, family, floor, r_grid)
    coarse_floor = floor * config.kset_coarse_factor
    coarse, _ = _kset_sup(E, family, coarse_floor, r_grid)
    growth = (constant - coarse) / math.log(config.kset_coarse_factor)
    passed = growth < config.kset_growth_threshold
    logger.debug(
        f"K-set check | "
        f"intervals J: {len(family)} | "
        f"constant: {constant:.4f} | "
        f"growth: {growth:.4f} | "
        f"passed: {passed}"
    )
    return KSetReport(constant, coarse, growth, bool(passed), worst, len(family), floor)


def porosity_constant(E: IntervalSet, max_level: int = None, config: Config = None) -> float:
    """min over dyadic J meeting E of (longest hole of E inside J) / |J|."""
    if config is None:
        config = Config()
    max_level = config.kset_max_level if max_level is None else max_level
    best = math.inf
    for j_lo, j_hi in _dyadic_family(E, max_level):
        lows, highs = E.clip(j_lo, j_hi)
        if lows.size == 0:
            continue
        holes = np.concatenate([[lows[0] - j_lo], lows[1:] - highs[:-1], [j_hi - highs[-1]]])
        best = min(best, float(holes.max()) / (j_hi - j_lo))
    return best


def distance_to_set(E: IntervalSet, x):
    """Parameter distance from x to E, wrapping around on a circle ambient."""
    x = np.asarray(x, dtype=float)
    lows, highs = E.lows, E.highs
    if E.periodic:
        period = E.ambient_length
        x = E.ambient[0] + np.mod(x - E.ambient[0], period)
        lows = np.concatenate([[lows[-1] - period], lows, [lows[0] + period]])
        highs = np.concatenate([[highs[-1] - period], highs, [highs[0] + period]])
    idx = np.searchsorted(lows, x, side='right') - 1
    left = np.clip(idx, 0, lows.size - 1)
    right = np.clip(idx + 1, 0, lows.size - 1)
    to_left = np.where(idx >= 0, np.maximum(x - highs[left], 0.0), np.inf)
    to_right = np.where(idx + 1 < lows.size, np.maximum(lows[right] - x, 0.0), np.inf)
    dist = np.minimum(to_left, to_right)
    return float(dist) if dist.ndim == 0 else dist


def sample_points(E: IntervalSet, spacing: float) -> np.ndarray:
    """Points of E with consecutive spacing <= spacing inside each interval, endpoints included."""
    if spacing <= 0:
        raise ValidationError(f"spacing must be positive, got {spacing}")
    lengths = E.lengths
    counts = np.ceil(lengths / spacing).astype(np.int64) + 1
    counts[lengths == 0] = 1
    steps = lengths / np.maximum(counts - 1, 1)
    offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(E.lows, counts) + offsets * np.repeat(steps, counts)


def box_counting_dimension(points, sizes) -> FitResult:
    """
    Box-counting slope; the returned exponent is the dimension (-slope of log N vs log size).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    sizes = np.asarray(sizes, dtype=float)
    counts = np.array([np.unique(np.floor(pts / s).astype(np.int64), axis=0).shape[0] for s in sizes])
    fit = fit_power_law(sizes, counts)
    return FitResult(-fit.exponent, fit.intercept, fit.residual, fit.n_points)


@dataclass
class ProductBoundarySet:
    """{(e^{is} cos x, sin x) : s in base, x in x_range} sampled at a given spacing."""

    base: IntervalSet
    x_range: tuple
    resolution: float

    def __post_init__(self):
        lo, hi = float(self.x_range[0]), float(self.x_range[1])
        if lo > hi or lo < -0.5 or hi > 0.5:
            raise ValidationError(f"x_range must lie inside [-1/2, 1/2], got {self.x_range}")
        if self.resolution <= 0:
            raise ValidationError("product-set resolution must be positive")
        self.x_range = (lo, hi)

    def x_samples(self) -> np.ndarray:
        lo, hi = self.x_range
        if hi == lo:
            return np.array([lo])
        return np.linspace(lo, hi, int(math.ceil((hi - lo) / self.resolution)) + 1)

    def parameter_points(self) -> np.ndarray:
        """(M, 2) array of (s, x) samples."""
        s = sample_points(self.base, self.resolution)
        x = self.x_samples()
        grid_s, grid_x = np.meshgrid(s, x, indexing='ij')
        return np.stack([grid_s.ravel(), grid_x.ravel()], axis=1)

    def points(self) -> np.ndarray:
        return CurveChart.ms_family().map(self.parameter_points())


def product_set(base: IntervalSet, x_range=(-0.5, 0.5), resolution: float = 1e-3) -> ProductBoundarySet:
    return ProductBoundarySet(base, tuple(x_range), resolution)
