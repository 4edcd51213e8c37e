import json
import math

import numpy as np
import pytest

from src.ball_geometry import CurveChart, sphere_samples
from src.boundary_sets import CantorSpec, MeasureProfile, cantor_build
from src.capacity import (DiscreteMeasure, RieszKernelParams, ball_measure_profile, capacity_lower_bound,
                          critical_alpha_capacity, energy, energy_growth, energy_layer_cake,
                          natural_cantor_measure, product_measure, riesz_kernel)
from src.config import Config
from src.exceptions import ProfileResolutionError, ValidationError


def direct_energy(points, masses, alpha):
    total = 0.0
    for i in range(len(masses)):
        for j in range(len(masses)):
            if i != j:
                d = abs(1.0 - np.vdot(points[j], points[i]))
                total += masses[i] * masses[j] * d ** (alpha - 2.0)
    return total


def uniform_arc_measure(chart, n=100001):
    s = np.linspace(0.0, 1.0, n)
    return DiscreteMeasure(chart.map(s), np.full(n, 1.0 / n), 1.0 / n)


class TestKernel:
    def test_examples(self):
        assert riesz_kernel(0.25, RieszKernelParams(1.0)) == pytest.approx(4.0)
        assert riesz_kernel(1.0, RieszKernelParams(2.0)) == pytest.approx(1.0)
        assert riesz_kernel(math.exp(-1.0), RieszKernelParams(2.0)) == pytest.approx(2.0)

    def test_rejections(self):
        with pytest.raises(ValidationError):
            RieszKernelParams(0.0)
        with pytest.raises(ValidationError):
            RieszKernelParams(2.5)
        with pytest.raises(ValidationError):
            riesz_kernel(0.0, RieszKernelParams(1.0))


class TestEnergy:
    def test_two_atoms(self):
        mu = DiscreteMeasure(np.array([0.0, 0.5]), np.array([0.5, 0.5]))
        p = RieszKernelParams(1.0)
        assert energy(mu, p) == pytest.approx(1.0)
        assert energy_layer_cake(mu, p) == pytest.approx(1.0)
        assert capacity_lower_bound(mu, p) == pytest.approx(1.0)

    def test_direct_double_sum(self, rng):
        points = sphere_samples(40, seed=3)
        masses = rng.uniform(0.5, 1.5, 40)
        masses /= masses.sum()
        mu = DiscreteMeasure(points, masses)
        for alpha in (0.5, 1.3):
            assert energy(mu, RieszKernelParams(alpha), config=Config(energy_block=7)) == pytest.approx(
                direct_energy(points, masses, alpha), rel=1e-10)

    def test_single_atom(self):
        mu = DiscreteMeasure(np.array([0.3]), np.array([1.0]))
        with pytest.raises(ValidationError):
            energy(mu, RieszKernelParams(1.0))
        with pytest.raises(ValidationError):
            energy_layer_cake(mu, RieszKernelParams(1.0))

    def test_floored_policy(self):
        mu = DiscreteMeasure(np.array([0.0, 0.5]), np.array([0.5, 0.5]))
        assert energy(mu, RieszKernelParams(1.0), policy='floored') == math.inf
        floored = DiscreteMeasure(np.array([0.0, 0.5]), np.array([0.5, 0.5]), resolution=0.25)
        # diagonal contributes 2 * 0.25 * 0.25^-1
        assert energy(floored, RieszKernelParams(1.0), policy='floored') == pytest.approx(3.0)
        with pytest.raises(ValidationError):
            energy(mu, RieszKernelParams(1.0), policy='nearest')

    def test_coincident_atoms(self):
        mu = DiscreteMeasure(np.array([0.2, 0.2]), np.array([0.5, 0.5]))
        with pytest.raises(ValidationError):
            energy(mu, RieszKernelParams(1.0))

    @pytest.mark.parametrize('chart', [CurveChart.transversal(), CurveChart.ctangential()])
    def test_layer_cake_matches_double_sum(self, middle_thirds, chart):
        mu = natural_cantor_measure(middle_thirds, 6, chart)
        p = RieszKernelParams(1.2)
        assert energy_layer_cake(mu, p) == pytest.approx(energy(mu, p), rel=1e-9)

    def test_energy_decreases_in_alpha(self, middle_thirds):
        mu = natural_cantor_measure(middle_thirds, 6, CurveChart.transversal())
        values = [energy(mu, RieszKernelParams(a)) for a in (0.4, 0.8, 1.2, 1.6)]
        assert np.all(np.diff(values) < 0)

    def test_masses_must_normalize(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure(np.array([0.0, 0.5]), np.array([0.5, 0.6]))
        with pytest.raises(ValidationError):
            DiscreteMeasure(np.array([0.0, 0.5]), np.array([1.5, -0.5]))


class TestMeasures:
    def test_natural_measure_level_one(self, middle_thirds):
        mu = natural_cantor_measure(middle_thirds, 1)
        assert np.allclose(mu.points, [1.0 / 6.0, 5.0 / 6.0])
        assert np.allclose(mu.masses, 0.5)
        assert mu.resolution == pytest.approx(1.0 / 3.0)
        with pytest.raises(ValidationError):
            natural_cantor_measure(middle_thirds, 13)

    def test_pushed_measure_on_sphere(self, middle_thirds):
        mu = natural_cantor_measure(middle_thirds, 4, CurveChart.ctangential())
        assert mu.on_sphere
        assert mu.size == 16
        atoms = json.loads(mu.to_json())['atoms']
        assert len(atoms) == 16
        assert sum(a['mass'] for a in atoms) == pytest.approx(1.0)

    def test_product_measure(self, middle_thirds):
        mu = product_measure(middle_thirds, 3, n_x=5)
        assert mu.size == 8 * 5
        assert np.allclose(np.sum(np.abs(mu.points) ** 2, axis=1), 1.0)
        assert math.fsum(mu.masses) == pytest.approx(1.0)

    @pytest.mark.parametrize('chart, exponent', [
        (CurveChart.transversal(), 1.0),
        (CurveChart.ctangential(), 0.5),
    ])
    def test_ball_measure_exponent(self, chart, exponent):
        mu = uniform_arc_measure(chart)
        centers = chart.map(np.linspace(0.4, 0.6, 9))
        fit = ball_measure_profile(mu, centers, np.geomspace(2e-3, 1e-2, 12))
        assert fit.exponent == pytest.approx(exponent, abs=0.02)

    @pytest.mark.slow
    def test_product_ball_measure_exponent(self, rng):
        spec = CantorSpec(1.0 / 3.0, 10)
        mu = product_measure(spec, 10, n_x=400)
        s = rng.choice(cantor_build(spec).midpoints, 24)
        centers = CurveChart.ms_family().map(np.stack([s, rng.uniform(-0.05, 0.05, 24)], axis=1))
        # four full periods of the triadic oscillation
        fit = ball_measure_profile(mu, centers, np.geomspace(3.0 ** -7, 3.0 ** -3, 25))
        assert fit.exponent == pytest.approx(0.5 + spec.dimension, abs=0.05)


class TestCriticalAlpha:
    T_GRID = np.geomspace(1e-12, 1e-2, 200)

    @pytest.mark.parametrize('case, predicted', [
        ('transversal', lambda d: 2.0 - d),
        ('ctangential', lambda d: 2.0 - d / 2.0),
    ])
    def test_synthetic_power_law(self, case, predicted):
        d = math.log(2) / math.log(3)
        profile = MeasureProfile.power_law(1.0 - d, self.T_GRID)
        result = critical_alpha_capacity(profile, case)
        assert result.alpha_c == pytest.approx(predicted(d), abs=0.02)
        assert result.bracket[0] <= result.alpha_c <= result.bracket[1]

    @pytest.mark.parametrize('case, predicted', [
        ('transversal', 2.0 - math.log(2) / math.log(3)),
        ('ctangential', 2.0 - 0.5 * math.log(2) / math.log(3)),
    ])
    def test_middle_thirds(self, case, predicted):
        config = Config(cantor_depth=18)
        E = cantor_build(CantorSpec(1.0 / 3.0, 18))
        assert critical_alpha_capacity(E, case, config=config).alpha_c == pytest.approx(predicted, abs=0.1)

    @pytest.mark.slow
    def test_product_case(self):
        spec = CantorSpec(1.0 / 3.0, 9)
        result = critical_alpha_capacity(spec, 'product')
        assert result.alpha_c == pytest.approx(1.5 - spec.dimension, abs=0.1)

    def test_coarse_profile(self):
        profile = MeasureProfile.power_law(0.4, np.geomspace(1e-3, 5e-3, 10))
        with pytest.raises(ProfileResolutionError) as info:
            critical_alpha_capacity(profile, 'transversal')
        assert info.value.required_t_min == pytest.approx(5e-3 / 8.0)

    def test_case_checks(self, middle_thirds_set, middle_thirds):
        with pytest.raises(ValidationError):
            critical_alpha_capacity(middle_thirds_set, 'radial')
        with pytest.raises(ValidationError):
            critical_alpha_capacity(middle_thirds_set, 'product')
        with pytest.raises(ValidationError):
            critical_alpha_capacity(middle_thirds, 'transversal')


def test_energy_growth_rows(middle_thirds, small_config):
    rows = energy_growth(middle_thirds, 'transversal', [1.0, 1.5], [2, 3], config=small_config)
    assert [(r['alpha'], r['level']) for r in rows] == [(1.0, 2), (1.0, 3), (1.5, 2), (1.5, 3)]
    assert all(math.isfinite(r['energy']) for r in rows)
    assert rows[0]['change'] is None and rows[0]['settled'] is None
    assert rows[1]['change'] >= 0.0
    with pytest.raises(ValidationError):
        energy_growth(middle_thirds, 'radial', [1.0], [2])


def test_energy_growth_settles_above_critical_index(middle_thirds):
    rows = energy_growth(middle_thirds, 'transversal', [0.5, 1.9], [7, 8])
    below, above = rows[1], rows[3]
    assert below['alpha'] == 0.5 and not below['settled']
    assert below['energy'] > rows[0]['energy']
    assert above['alpha'] == 1.9 and above['settled']


def test_product_potentials_floored_at_level_scale():
    spec = CantorSpec(1.0 / 3.0, 5)
    rows = energy_growth(spec, 'product', [0.5], [3, 4, 5])
    for row in rows:
        assert row['energy'] <= spec.interval_length(row['level']) ** (0.5 - 2.0) * (1.0 + 1e-12)
