import math

import numpy as np
import pytest

from src.ball_geometry import CurveChart, koranyi_dist_to_set, sphere_samples
from src.boundary_sets import CantorSpec, IntervalSet, cantor_build, distance_to_set
from src.constructions import (BumpFunction, build_psi_series, bump_sum, covering_tail_constant, f_exp,
                               holder_witness, outer_surrogate, psi_derivative, psi_derivative_bound,
                               psi_exp_series, psi_series, set_distance_weight, surrogate_H)
from src.exceptions import ValidationError
from src.series_core import evaluate_many
from src.tools.misc import ratio_band

S0 = 0.7


@pytest.fixture
def point_psi():
    return build_psi_series(IntervalSet.from_points([S0], ambient=(0.0, 2.0 * np.pi)), k_max=40)


def interior_points(n=200, radius=0.95, seed=11):
    return radius * sphere_samples(n, seed=seed)


class TestBump:
    def test_single_gap(self):
        f = bump_sum(IntervalSet.from_points([0.0, 1.0]))
        assert f(0.5) == pytest.approx(0.25 ** 2.5)
        assert f(0.0) == 0.0
        assert f(1.0) == 0.0

    def test_vanishes_on_set(self):
        E = cantor_build(CantorSpec(1.0 / 3.0, 1))
        f = bump_sum(E)
        assert f(0.5) == pytest.approx((0.25 / 3.0) ** 2.5)
        assert np.all(f(np.linspace(E.lows[0], E.highs[0], 50)) == 0.0)
        assert np.all(f(np.linspace(E.lows[1], E.highs[1], 50)) == 0.0)

    def test_edge_gaps_stay_positive(self, rng):
        E = IntervalSet([[0.25, 0.5]])
        f = bump_sum(E, epsilon=0.5)
        assert f(0.0) == pytest.approx(0.125 ** 2.5)
        assert f(1.0) == pytest.approx(0.25 ** 2.5)
        assert np.all(f(np.linspace(0.25, 0.5, 40)) == 0.0)
        x = rng.uniform(0.0, 1.0, 2000)
        d = distance_to_set(E, x)
        keep = d > 0
        ratio = f(x[keep]) / d[keep] ** 2.5
        assert np.all(ratio >= 2.0 ** -2.5 - 1e-12)
        assert np.all(ratio <= 1.0 + 1e-12)

    def test_comparable_to_distance_power(self, rng):
        E = cantor_build(CantorSpec(1.0 / 3.0, 8))
        f = bump_sum(E, epsilon=0.5)
        x = rng.uniform(0.0, 1.0, 5000)
        d = distance_to_set(E, x)
        keep = d > 0
        ratio = f(x[keep]) / d[keep] ** 2.5
        assert np.all(ratio >= 2.0 ** -2.5 - 1e-12)
        assert np.all(ratio <= 1.0 + 1e-12)

    @pytest.mark.parametrize('E', [
        IntervalSet.from_points([0.0, 1.0]),
        cantor_build(CantorSpec(1.0 / 3.0, 6)),
    ])
    def test_holder_witness_is_bounded(self, E):
        report = holder_witness(bump_sum(E, epsilon=0.5))
        assert report.second_difference_sup < 10.0
        assert report.holder_quotient < 10.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            BumpFunction([[0.0, 1.0]], 0.0)
        with pytest.raises(ValidationError):
            BumpFunction([[0.5, 0.6], [0.1, 0.2]], 0.5)
        with pytest.raises(ValidationError):
            bump_sum(IntervalSet([[1.5, 2.0]], ambient=(0.0, 3.0)))


class TestSurrogateH:
    def test_zeros_on_circles(self, rng):
        s = rng.uniform(-3, 3, 50)
        x = rng.uniform(-1.5, 1.5, 50)
        for shift in (0.0, np.pi):
            pts = np.stack([np.exp(1j * (s + shift)) * np.cos(x), np.sin(x) + 0j], axis=1)
            assert np.max(np.abs(surrogate_H(s, pts))) <= 1e-12

    def test_positive_real_part_inside(self, rng):
        pts = interior_points()
        values = surrogate_H(rng.uniform(-3, 3, pts.shape[0]), pts)
        assert np.all(values.real > 0)

    def test_comparable_to_distance_from_the_circle(self, rng):
        s = 0.4
        chart = CurveChart.ms_family()
        x_dense = np.linspace(-np.pi, np.pi, 8001)
        circle = chart.map(np.stack([np.full(x_dense.size, s), x_dense], axis=1))
        n = 10_000
        base = chart.map(np.stack([np.full(n, s), rng.uniform(-np.pi, np.pi, n)], axis=1))
        step = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        step *= (rng.uniform(0.0, 0.4, n) / np.linalg.norm(step, axis=1))[:, None]
        z = base + step
        norms = np.linalg.norm(z, axis=1)
        z[norms > 1.0] /= norms[norms > 1.0][:, None]
        d = koranyi_dist_to_set(z, circle).value
        keep = (d >= 1e-3) & (d <= 0.3)
        assert np.count_nonzero(keep) > n // 4
        band = ratio_band(np.abs(surrogate_H(s, z[keep])) / d[keep])
        assert band.factor <= 8.0


class TestPsi:
    def test_value_at_origin(self, point_psi):
        expected = math.fsum(2.0 ** -k / (2.0 ** -k + 1.0) for k in range(1, 41))
        assert psi_series(point_psi, np.zeros(2)) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.7645, abs=1e-3)

    def test_positive_real_part(self, middle_thirds_set):
        ps = build_psi_series(middle_thirds_set, k_max=16)
        assert np.all(psi_series(ps, interior_points()).real > 0)

    def test_f_exp_is_bounded(self, middle_thirds_set):
        ps = build_psi_series(middle_thirds_set, k_max=16)
        pts = interior_points(radius=0.99)
        f = f_exp(ps, beta=2.0)
        assert np.all(np.abs(f(pts[:, 0], pts[:, 1])) <= 1.0)
        with pytest.raises(ValidationError):
            f_exp(ps, beta=0.0)

    def test_truncation_tail(self, middle_thirds_set):
        ps = build_psi_series(middle_thirds_set, k_max=24)
        pts = interior_points(radius=0.8)
        diff = np.abs(psi_series(ps, pts) - psi_series(ps.truncated(20), pts))
        k = np.arange(21, 25)
        bound = np.sum(ps.counts[20:] * 2.0 ** -k) / (1.0 - 0.8 ** 2)
        assert np.all(diff <= bound)

    def test_first_derivative_matches_difference_quotient(self, point_psi):
        z = np.array([0.3 + 0.2j, -0.1 + 0.4j])
        h = 1e-6
        e1 = np.array([h, 0.0])
        numeric = (psi_series(point_psi, z + e1) - psi_series(point_psi, z - e1)) / (2 * h)
        assert psi_derivative(point_psi, z, (1, 0)) == pytest.approx(numeric, rel=1e-6)

    def test_second_derivative_matches_difference_quotient(self, point_psi):
        z = np.array([0.3 + 0.2j, -0.1 + 0.4j])
        h = 1e-5
        e2 = np.array([0.0, h])
        numeric = (psi_derivative(point_psi, z + e2, (1, 0))
                   - psi_derivative(point_psi, z - e2, (1, 0))) / (2 * h)
        assert psi_derivative(point_psi, z, (1, 1)) == pytest.approx(numeric, rel=1e-5, abs=1e-8)

    def test_invalid_derivative_order(self, point_psi):
        with pytest.raises(ValidationError):
            psi_derivative(point_psi, np.zeros(2), (0, 0))
        with pytest.raises(ValidationError):
            psi_derivative(point_psi, np.zeros(2), (2, 1))

    def test_derivative_bound_band(self, point_psi):
        circle = CurveChart.ms_family().map(np.stack([np.full(2001, S0), np.linspace(-np.pi, np.pi, 2001)], 1))
        zeta = np.array([np.exp(1j * S0), 0.0])
        deltas = 10.0 ** -np.arange(1.0, 4.5, 0.25)
        products = [psi_derivative_bound(point_psi, (1.0 - d) * zeta, (1, 0), circle).product for d in deltas]
        assert ratio_band(products).factor < 3.0

    def test_covering_tail_constant_of_a_point(self, point_psi):
        assert np.all(point_psi.counts == 1)
        assert covering_tail_constant(point_psi) == pytest.approx(2.0, rel=1e-9)

    def test_log_band_along_rays(self, middle_thirds_set, rng):
        ps = build_psi_series(middle_thirds_set, k_max=20)
        s = rng.choice(middle_thirds_set.midpoints, 8)
        zeta = CurveChart.ms_family().map(np.stack([s, rng.uniform(-0.5, 0.5, 8)], axis=1))
        deltas = np.geomspace(1e-4, 1e-1, 13)
        # d_K((1 - delta) zeta, E) = delta for zeta in E
        ratios = [psi_series(ps, (1.0 - delta) * zeta).real / math.log(1.0 / delta) for delta in deltas]
        assert ratio_band(ratios).factor <= 10.0

    def test_exp_series_matches_evaluator(self):
        E = cantor_build(CantorSpec(1.0 / 3.0, 4))
        series = psi_exp_series(E, degree=16, beta=2.0, k_max=6)
        f = f_exp(build_psi_series(E, k_max=6), beta=2.0)
        pts = 0.25 * sphere_samples(20, seed=5)
        assert evaluate_many(series, pts) == pytest.approx(f(pts[:, 0], pts[:, 1]), abs=1e-5)
        assert series.coeffs[0, 0] == pytest.approx(complex(f(0.0, 0.0)), rel=1e-9)

    def test_exp_series_rejects_torus_outside_ball(self):
        with pytest.raises(ValidationError):
            psi_exp_series(IntervalSet.from_points([0.5]), degree=4, k_max=3, rho=0.8)


class TestOuter:
    def test_constant_weight(self):
        z = np.array([0.0, 0.3, -0.5 + 0.2j])
        values = outer_surrogate(lambda t: np.ones_like(t), z, nodes=2 ** 10)
        assert np.allclose(values, 1.0, atol=1e-12)

    def test_modulus_of_one_minus_z(self):
        z = np.array([0.0, 0.3, -0.5 + 0.2j, 0.5j])
        values = outer_surrogate(lambda t: np.abs(1.0 - np.exp(1j * t)), z, nodes=2 ** 14)
        assert np.max(np.abs(values - (1.0 - z))) <= 1e-4

    def test_set_distance_weight_at_origin(self):
        E = IntervalSet([[0.5, 1.0], [2.0, 2.5]], ambient=(0.0, 2.0 * np.pi))
        weight = set_distance_weight(E, floor=1e-6)
        nodes = 2 ** 12
        theta = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
        expected = math.exp(np.mean(np.log(weight(theta))))
        assert outer_surrogate(weight, 0.0, nodes=nodes, floor=1e-6) == pytest.approx(expected, rel=1e-10)

    def test_validation(self):
        with pytest.raises(ValidationError):
            outer_surrogate(lambda t: np.ones_like(t), 1.0)
        with pytest.raises(ValidationError):
            outer_surrogate(lambda t: -np.ones_like(t), 0.2)
        with pytest.raises(ValidationError):
            outer_surrogate(lambda t: np.zeros_like(t), 0.2, floor=0.0)

    def test_middle_thirds_band(self, rng):
        E = cantor_build(CantorSpec(1.0 / 3.0, 10))
        weight = set_distance_weight(E, floor=1e-6)
        circle = IntervalSet(E.intervals, (0.0, 2.0 * np.pi), periodic=True)
        theta = rng.uniform(0.0, 2.0 * np.pi, 200)
        gap = distance_to_set(circle, theta)
        theta, gap = theta[gap > 1e-6], gap[gap > 1e-6]
        ratios = []
        for r in 1.0 - 3.0 ** -np.arange(3, 7):
            values = np.abs(outer_surrogate(weight, r * np.exp(1j * theta), nodes=2 ** 16, floor=1e-6))
            ratios.append(values / np.abs(1.0 - r * np.exp(1j * gap)))
        band = ratio_band(ratios)
        assert band.lower >= 5e-3
        assert band.upper <= 5.0
