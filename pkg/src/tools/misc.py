""" Module with auxiliary numerical functions. """

import numpy as np
from scipy import stats
from scipy.special import digamma

from ..exceptions import ValidationError
from .hints import BandReport, FitResult

_EPS = np.finfo(float).eps


def make_rng(seed):
    """
    Seeded generator used by every stochastic step.

        :param seed: 64-bit integer seed
        :return: numpy Generator (PCG64)
    """
    return np.random.default_rng(np.uint64(int(seed) % 2 ** 64))


def fit_power_law(x, y, x_min=None, x_max=None):
    """
    Least-squares slope of log y against log x.

        :param x: positive abscissae
        :param y: positive ordinates
        :param x_min: optional lower cut on x
        :param x_max: optional upper cut on x
        :return: FitResult with exponent, log-intercept and RMS log residual
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if x_min is not None:
        keep &= x >= x_min
    if x_max is not None:
        keep &= x <= x_max
    if np.count_nonzero(keep) < 3:
        raise ValidationError("power-law fit needs at least three positive points")
    lx = np.log(x[keep])
    ly = np.log(y[keep])
    reg = stats.linregress(lx, ly)
    residual = ly - (reg.intercept + reg.slope * lx)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    return FitResult(float(reg.slope), float(reg.intercept), rms, int(np.count_nonzero(keep)))


def harmonic_number(k):
    """
    H_k = 1 + 1/2 + ... + 1/k, vectorized; H_0 = 0.
    """
    k = np.asarray(k, dtype=float)
    return digamma(k + 1.0) + np.euler_gamma


def relative_change(new, old):
    """Relative change |new - old| / |old| with a zero guard."""
    return abs(new - old) / max(abs(old), _EPS)


def ratio_band(values):
    """
    Spread of a family of positive ratios.

        :param values: ratios expected to stay within constant bounds
        :return: BandReport with min, max and max/min
    """
    values = np.asarray(values, dtype=float).ravel()
    values = values[np.isfinite(values)]
    if values.size == 0 or np.any(values <= 0):
        raise ValidationError("ratio band needs finite positive values")
    lower = float(values.min())
    upper = float(values.max())
    return BandReport(lower, upper, upper / lower, int(values.size))
