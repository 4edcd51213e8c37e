import math

import numpy as np
import pytest

from src.boundary_sets import (CantorSpec, IntervalSet, MeasureProfile, box_counting_dimension, cantor_build,
                               cantor_preset, covering_number, dissect, distance_to_set, fat_cantor_build,
                               greedy_cover, kset_check, measure_profile, neighborhood_measure,
                               porosity_constant, product_set, sample_points)
from src.config import Config
from src.exceptions import ValidationError


def union_length(E: IntervalSet, t: float) -> float:
    """Merge the t-fattened intervals one by one and clip to the ambient."""
    lo, hi = E.ambient
    total, cur_lo, cur_hi = 0.0, None, None
    for a, b in E.intervals:
        a, b = max(lo, a - t), min(hi, b + t)
        if cur_hi is None or a > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    return total + cur_hi - cur_lo


class TestCantorBuild:
    def test_middle_thirds_depth_two(self):
        E = cantor_build(CantorSpec(1.0 / 3.0, 2))
        expected = np.array([[0, 1], [2, 3], [6, 7], [8, 9]]) / 9.0
        assert np.allclose(E.intervals, expected, atol=1e-15)

    def test_quarter_ratio(self):
        E = cantor_build(CantorSpec(0.25, 1))
        assert np.allclose(E.intervals, [[0.0, 0.25], [0.75, 1.0]])

    def test_counts_and_measure(self, middle_thirds, middle_thirds_set):
        assert middle_thirds_set.count == 2 ** 12
        assert np.allclose(middle_thirds_set.lengths, 3.0 ** -12)
        assert middle_thirds_set.measure + middle_thirds.removed_length() == pytest.approx(1.0, rel=1e-12)
        assert middle_thirds.dimension == pytest.approx(math.log(2) / math.log(3))

    def test_depth_zero_is_the_base(self):
        E = cantor_build(CantorSpec(0.4, 0, (0.5, 2.5)))
        assert E.count == 1
        assert E.measure == pytest.approx(2.0)

    def test_invalid_specs(self):
        with pytest.raises(ValidationError):
            CantorSpec(0.5, 4)
        with pytest.raises(ValidationError):
            CantorSpec(0.3, -1)
        with pytest.raises(ValidationError):
            dissect((0.0, 1.0), [0.2, 1.0])
        with pytest.raises(ValidationError):
            fat_cantor_build((0.0, 1.0), 4, 1.5)

    def test_presets(self):
        assert cantor_preset('quarter', depth=3).lam == 0.25
        assert cantor_preset('middle-thirds', config=Config(cantor_depth=7)).depth == 7
        with pytest.raises(ValidationError):
            cantor_preset('sierpinski')

    def test_fat_cantor_keeps_positive_measure(self):
        E = fat_cantor_build((0.0, 1.0), 12, 0.1)
        assert E.count == 2 ** 12
        assert E.measure > 0.85

    def test_json(self, middle_thirds_set):
        restored = IntervalSet.from_json(middle_thirds_set.to_json())
        assert np.array_equal(restored.intervals, middle_thirds_set.intervals)
        assert restored.ambient == middle_thirds_set.ambient

    def test_interval_set_validation(self):
        with pytest.raises(ValidationError):
            IntervalSet(np.zeros((0, 2)))
        with pytest.raises(ValidationError):
            IntervalSet([[0.5, 0.6], [0.1, 0.2]])
        with pytest.raises(ValidationError):
            IntervalSet([[0.5, 1.5]])


class TestNeighborhoodMeasure:
    def test_first_generation(self):
        E = cantor_build(CantorSpec(1.0 / 3.0, 1))
        assert neighborhood_measure(E, 0.1) == pytest.approx(2.0 / 3.0 + 0.2)
        assert neighborhood_measure(E, 0.2) == pytest.approx(1.0)

    def test_segment_ends(self):
        E = IntervalSet([[0.4, 0.6]])
        assert neighborhood_measure(E, 0.1) == pytest.approx(0.4)
        assert neighborhood_measure(E, 0.5) == pytest.approx(1.0)

    def test_against_interval_union(self, middle_thirds_set, rng):
        for t in 10.0 ** rng.uniform(-7, -0.5, 30):
            assert neighborhood_measure(middle_thirds_set, t) == pytest.approx(
                union_length(middle_thirds_set, t), rel=1e-9)

    def test_fat_cantor_against_interval_union(self, rng):
        E = fat_cantor_build((0.0, 1.0), 10, 0.3)
        for t in 10.0 ** rng.uniform(-8, -1, 20):
            assert neighborhood_measure(E, t) == pytest.approx(union_length(E, t), rel=1e-9)

    def test_nonpositive_radius(self, middle_thirds_set):
        with pytest.raises(ValidationError):
            neighborhood_measure(middle_thirds_set, 0.0)


class TestMeasureProfile:
    @pytest.mark.parametrize('lam', [1.0 / 3.0, 0.4])
    def test_cantor_slope(self, lam):
        config = Config(dissection_ratio=lam, cantor_depth=18)
        E = cantor_build(CantorSpec(lam, 18))
        _, fit = measure_profile(E, config=config)
        assert fit.exponent == pytest.approx(1.0 - config.dimension, abs=0.03)

    def test_single_interval_is_flat(self):
        E = IntervalSet([[0.4, 0.6]])
        _, fit = measure_profile(E, np.geomspace(1e-8, 1e-4, 50))
        assert fit.exponent == pytest.approx(0.0, abs=0.01)

    def test_profile_is_monotone(self, middle_thirds_set, small_config):
        profile, _ = measure_profile(middle_thirds_set, config=small_config)
        assert np.all(np.diff(profile.values) >= 0)
        assert profile.t_min == pytest.approx(3.0 ** -10)

    def test_profile_validation(self):
        with pytest.raises(ValidationError):
            MeasureProfile([1e-3, 1e-2, 1e-1], [0.3, 0.2, 0.5])
        with pytest.raises(ValidationError):
            MeasureProfile([1e-3, 1e-2], [0.1, 0.2])
        with pytest.raises(ValidationError):
            measure_profile(IntervalSet([[0.4, 0.6]]), [1e-3, 1e-4, 1e-2])

    def test_power_law_interpolation(self):
        profile = MeasureProfile.power_law(0.5, np.geomspace(1e-6, 1e-1, 11))
        assert profile.at(1e-4 * 3.0) == pytest.approx(math.sqrt(3e-4), rel=1e-10)


class TestCovering:
    @pytest.mark.parametrize('level', [0, 1, 5, 9])
    def test_middle_thirds_counts(self, middle_thirds_set, level):
        assert covering_number(middle_thirds_set, 3.0 ** -level) == 2 ** level

    def test_large_blocks(self, middle_thirds_set):
        assert covering_number(middle_thirds_set, 2.0) == 1

    def test_single_interval(self):
        E = IntervalSet([[0.0, 1.0]])
        assert covering_number(E, 0.3) == 4
        assert covering_number(E, 0.25) == 4

    def test_greedy_starts_lie_in_set(self, middle_thirds_set):
        starts = greedy_cover(middle_thirds_set, 1e-3)
        assert starts.size == covering_number(middle_thirds_set, 1e-3)
        assert np.max(distance_to_set(middle_thirds_set, starts)) <= 1e-12

    def test_invalid_eps(self, middle_thirds_set):
        with pytest.raises(ValidationError):
            covering_number(middle_thirds_set, 0.0)


class TestKSet:
    def test_middle_thirds_passes(self, middle_thirds_set, small_config):
        report = kset_check(middle_thirds_set, config=small_config)
        assert report.passed
        assert report.constant > 0
        assert report.n_intervals == 2 ** 11 - 1

    def test_fat_cantor_fails(self, small_config):
        E = fat_cantor_build((0.0, 1.0), 12, 0.1)
        report = kset_check(E, config=small_config)
        assert not report.passed
        assert report.growth >= small_config.kset_growth_threshold

    def test_custom_family(self, middle_thirds_set, small_config):
        report = kset_check(middle_thirds_set, J_family=[(0.0, 1.0)], config=small_config)
        assert report.n_intervals == 1
        assert report.worst_interval == (0.0, 1.0)

    @pytest.mark.slow
    def test_constant_settles_with_depth(self, small_config):
        reports = [kset_check(cantor_build(CantorSpec(1.0 / 3.0, depth)), config=small_config)
                   for depth in (16, 18)]
        assert all(r.passed for r in reports)
        assert abs(reports[1].constant - reports[0].constant) <= 0.1 * reports[0].constant


def test_porosity(middle_thirds_set, small_config):
    cantor = porosity_constant(middle_thirds_set, config=small_config)
    fat = porosity_constant(fat_cantor_build((0.0, 1.0), 12, 0.1), config=small_config)
    assert cantor > 0.02
    assert fat < cantor


def test_periodic_distance():
    E = IntervalSet([[0.1, 0.2]], ambient=(0.0, 2.0 * np.pi), periodic=True)
    assert distance_to_set(E, 2.0 * np.pi - 0.05) == pytest.approx(0.15)
    assert distance_to_set(E, 0.15) == 0.0
    assert distance_to_set(E, 0.3) == pytest.approx(0.1)
    assert E.gaps()[-1] == pytest.approx(2.0 * np.pi - 0.1)


def test_box_counting_dimension():
    E = cantor_build(CantorSpec(1.0 / 3.0, 12))
    sizes = 3.0 ** -np.arange(2, 9)
    fit = box_counting_dimension(E.midpoints, sizes)
    assert fit.exponent == pytest.approx(math.log(2) / math.log(3), abs=1e-6)


class TestProductSet:
    def test_points_on_sphere(self):
        P = product_set(cantor_build(CantorSpec(1.0 / 3.0, 3)), (-0.5, 0.5), resolution=0.05)
        pts = P.points()
        assert pts.shape[0] == P.parameter_points().shape[0]
        assert np.allclose(np.sum(np.abs(pts) ** 2, axis=1), 1.0)

    def test_box_counting_dimension_adds(self):
        E = cantor_build(CantorSpec(1.0 / 3.0, 7))
        P = product_set(E, (-0.5, 0.5), resolution=3.0 ** -7)
        sizes = 3.0 ** -np.arange(2, 7)
        # offset keeps interval endpoints off the box edges
        offset = 0.25 * 3.0 ** -7
        product = box_counting_dimension(P.parameter_points() + offset, sizes)
        base = box_counting_dimension(sample_points(E, P.resolution) + offset, sizes)
        fiber = box_counting_dimension(P.x_samples() + offset, sizes)
        assert base.exponent == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
        assert product.exponent == pytest.approx(base.exponent + fiber.exponent, abs=1e-9)
        assert product.exponent == pytest.approx(1.0 + math.log(2) / math.log(3), abs=0.05)

    def test_degenerate_x_range_is_the_circle(self):
        P = product_set(IntervalSet([[0.0, 1.0]]), (0.0, 0.0), resolution=0.25)
        pts = P.points()
        assert np.allclose(pts[:, 1], 0.0)
        assert np.allclose(np.abs(pts[:, 0]), 1.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            product_set(IntervalSet([[0.0, 1.0]]), (-0.6, 0.5))
        with pytest.raises(ValidationError):
            product_set(IntervalSet([[0.0, 1.0]]), resolution=0.0)
