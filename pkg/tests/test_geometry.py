import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fheat.errors import DegenerateQueryError, DomainError, PreconditionError
from fheat.geometry import (VolumeQuery, WeightedSpace, annulus_volume, ball_overlap_check,
                            doubling_check, mean_curvature_check, monotone_quantity_check,
                            random_comparison_reports, random_queries, sup_f_on_ball,
                            volume_comparison_check, volume_growth_check, weighted_ball_volume)
from fheat.profiles import WeightProfile

# frozen oracle values (mpmath, 30 digits)
ERF_INTEGRAL = 1.49364826562485405  # int_{-1}^{1} e^{-x^2} dx
TWO_SINH_1 = 2 * math.sinh(1.0)


def space(profile, n=1, L=12.0, nodes=2049):
    return WeightedSpace(profile, L=L, dimension=n, nodes=nodes)


class TestVolumes:
    def test_unweighted_length(self):
        assert weighted_ball_volume(space(WeightProfile.constant(0)), 0.0, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_linear_weight(self):
        v = weighted_ball_volume(space(WeightProfile.linear(1)), 0.0, 1.0)
        assert v == pytest.approx(TWO_SINH_1, rel=1e-9)

    def test_euclidean_ball_in_three_dimensions(self):
        v = weighted_ball_volume(space(WeightProfile.constant(0), n=3), 0.0, 1.0)
        assert v == pytest.approx(4 * math.pi / 3, rel=1e-10)

    def test_annulus_examples(self):
        e = space(WeightProfile.constant(0))
        assert annulus_volume(e, 0.0, 1.0, 2.0) == pytest.approx(2.0, rel=1e-12)
        q = space(WeightProfile.quadratic(1))
        assert annulus_volume(q, 0.0, 0.0, 1.0) == pytest.approx(ERF_INTEGRAL, rel=1e-9)
        assert annulus_volume(q, 0.0, 1.0, 1.0) == 0.0

    def test_annulus_from_zero_is_ball(self):
        for prof in (WeightProfile.linear(1), WeightProfile.power(1)):
            s = space(prof)
            for c, r in ((0.3, 1.1), (-2.0, 0.7)):
                assert annulus_volume(s, c, 0.0, r) == weighted_ball_volume(s, c, r)

    def test_truncation_error_names_needed_L(self):
        s = space(WeightProfile.linear(1), L=3.0)
        with pytest.raises(DomainError) as exc:
            weighted_ball_volume(s, 2.0, 2.0)
        assert exc.value.needed_L == pytest.approx(4.0)

    def test_total_volume_matches_analytic(self):
        for prof, n in ((WeightProfile.linear(1), 1), (WeightProfile.quadratic(1), 1),
                        (WeightProfile.quadratic(1), 3), (WeightProfile.constant(0.5), 1)):
            s = space(prof, n=n, L=5.0)
            assert s.total_volume() == pytest.approx(s.analytic_total_volume(), rel=1e-9)

    def test_refinement_within_error_model(self):
        # Simpson is order 4: halving h should shrink the error by ~16
        exact = ERF_INTEGRAL
        coarse = WeightedSpace(WeightProfile.quadratic(1), L=4, nodes=64)
        fine = WeightedSpace(WeightProfile.quadratic(1), L=4, nodes=127)
        e1 = abs(weighted_ball_volume(coarse, 0.0, 1.0) - exact)
        e2 = abs(weighted_ball_volume(fine, 0.0, 1.0) - exact)
        assert e2 <= e1

    def test_radial_requires_even_profile(self):
        with pytest.raises(ValueError):
            WeightedSpace(WeightProfile.linear(1), L=5, dimension=2)

    def test_min_nodes(self):
        with pytest.raises(ValueError):
            WeightedSpace(WeightProfile.constant(0), L=5, nodes=8)

    def test_tail_bound(self):
        s = space(WeightProfile.quadratic(1), L=4.0)
        exact_tail = math.sqrt(math.pi) * math.erfc(4.0)
        assert exact_tail <= s.tail_bound() <= 3 * exact_tail
        assert math.isinf(space(WeightProfile.quadratic(-1), L=4.0).tail_bound())


class TestSup:
    def test_examples(self):
        assert sup_f_on_ball(space(WeightProfile.linear(1)), 0.0, 3.0) == pytest.approx(3.0)
        assert sup_f_on_ball(space(WeightProfile.constant(5)), 0.0, 3.0) == pytest.approx(5.0)
        assert sup_f_on_ball(space(WeightProfile.quadratic(1)), 1.0, 3.0) == pytest.approx(16.0)


class TestComparison:
    def test_identical_annuli(self):
        s = space(WeightProfile.constant(0))
        rep = volume_comparison_check(s, VolumeQuery(0.0, 0.5, 1.0, 0.5, 1.0, 2.0))
        assert rep.passed
        assert rep.measured == pytest.approx(1.0, rel=1e-12)

    def test_linear_weight_passes_with_margin(self):
        s = space(WeightProfile.linear(1))
        rep = volume_comparison_check(s, VolumeQuery(0.0, 0.5, 1.0, 1.0, 2.0, 3.0))
        inner = 2 * (math.sinh(1) - math.sinh(0.5))
        outer = 2 * (math.sinh(2) - math.sinh(1))
        assert rep.measured == pytest.approx(outer / inner, rel=1e-9)
        assert rep.details["A"] == pytest.approx(9.0)
        assert rep.passed and rep.margin > 0.99

    def test_invalid_query(self):
        s = space(WeightProfile.constant(0))
        with pytest.raises(DegenerateQueryError):
            volume_comparison_check(s, VolumeQuery(0.0, 0.5, 1.5, 0.6, 1.0, 2.0))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), which=st.sampled_from(["zero", "linear", "quadratic", "power"]))
    def test_property_random_queries_pass(self, seed, which):
        prof = {"zero": WeightProfile.constant(0), "linear": WeightProfile.linear(1),
                "quadratic": WeightProfile.quadratic(1), "power": WeightProfile.power(1)}[which]
        s = space(prof, nodes=513)
        for q in random_queries(s, np.random.default_rng(seed), 3, 4.0):
            assert volume_comparison_check(s, q).passed


class TestMonotone:
    def test_linear_constant_quantity(self):
        s = space(WeightProfile.linear(1))
        rep = monotone_quantity_check(s, 0.0, np.linspace(0, 3, 31))
        assert rep.passed
        assert np.allclose(rep.details["log_M"]["+1"], 0.0, atol=1e-10)
        assert np.allclose(rep.details["log_M"]["-1"], 0.0, atol=1e-10)

    def test_quadratic_decreasing(self):
        s = space(WeightProfile.quadratic(1))
        r = np.linspace(0, 2, 21)
        rep = monotone_quantity_check(s, 0.0, r)
        assert rep.passed
        assert np.allclose(rep.details["log_M"]["+1"], -r ** 2 / 3, atol=1e-10)

    def test_negative_control_localized(self):
        s = space(WeightProfile.quadratic(-1))
        rep = monotone_quantity_check(s, 0.0, np.linspace(0, 2, 21))
        assert not rep.passed
        v = rep.details["first_violation"]
        assert v["index"] == 1 and v["r"] == pytest.approx(0.1)
        assert any("violated" in n for n in rep.notes)

    def test_radial(self):
        s = space(WeightProfile.quadratic(1), n=3)
        assert monotone_quantity_check(s, 0.0, np.linspace(0, 3, 31)).passed


class TestMeanCurvature:
    def test_linear_equality(self):
        rep = mean_curvature_check(space(WeightProfile.linear(1)), 0.0, np.linspace(0.1, 3, 30))
        assert rep.passed
        assert abs(rep.measured) < 1e-9

    def test_flat_plane_equality(self):
        s = space(WeightProfile.constant(0), n=2)
        rep = mean_curvature_check(s, 0.0, np.linspace(s.h, 3, 30))
        assert rep.passed and abs(rep.measured) < 1e-9

    def test_quadratic_strict(self):
        rep = mean_curvature_check(space(WeightProfile.quadratic(1)), 0.0, np.linspace(0.1, 2, 20))
        assert rep.passed and rep.measured < -0.1

    def test_radial_grid_start(self):
        s = space(WeightProfile.constant(0), n=2)
        with pytest.raises(PreconditionError):
            mean_curvature_check(s, 0.0, np.linspace(0.0, 1, 5))


class TestDoublingOverlap:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_flat_doubling_sharp(self, n):
        rep = doubling_check(space(WeightProfile.constant(0), n=n), 0.0, 1.0)
        assert rep.measured == pytest.approx(2 ** n, rel=1e-5)
        assert rep.passed

    def test_linear_doubling(self):
        rep = doubling_check(space(WeightProfile.linear(1)), 0.0, 1.0, R=3.0)
        assert rep.measured == pytest.approx(2 * math.cosh(1), rel=1e-10)
        assert rep.bound == pytest.approx(2 * math.exp(36), rel=1e-12)

    def test_overlap_same_ball(self):
        rep = ball_overlap_check(space(WeightProfile.linear(1), L=24), 0.3, 0.3, 0.5, 0.5, R=8.0)
        assert rep.passed
        assert rep.details["parts"]["near"]["measured"] == pytest.approx(1.0)
        assert rep.details["parts"]["scaled"]["measured"] == pytest.approx(1.0)

    def test_overlap_translation(self):
        rep = ball_overlap_check(space(WeightProfile.constant(0), L=24), 0.0, 0.5, 1.0, R=8.0)
        near = rep.details["parts"]["near"]
        assert near["measured"] == pytest.approx(1.0)
        assert math.exp(near["log_bound"]) == pytest.approx(1.5)

    def test_overlap_linear(self):
        assert ball_overlap_check(space(WeightProfile.linear(1), L=24), 0.0, 1.0, 1.0, R=8.0).passed

    def test_overlap_bad_query(self):
        with pytest.raises(DegenerateQueryError):
            ball_overlap_check(space(WeightProfile.constant(0), L=24), 0.0, 3.0, 1.0, R=8.0)


class TestGrowth:
    def test_flat(self):
        rep = volume_growth_check(space(WeightProfile.constant(0)), 0.0, np.linspace(1, 10, 10))
        assert rep.passed and rep.measured == pytest.approx(0.0, abs=1e-12)

    def test_gaussian_weight_bounded_volume(self):
        rep = volume_growth_check(space(WeightProfile.quadratic(1)), 0.0, np.linspace(1, 10, 10))
        assert rep.passed
        assert max(np.exp(rep.details["log_volume"])) <= math.sqrt(math.pi) * (1 + 1e-12)
        p = np.array(rep.details["partial_integrals"])
        assert np.all(np.diff(p) > 0)

    def test_expanding_weight_fits_c_near_one(self):
        rep = volume_growth_check(space(WeightProfile.quadratic(-1)), 0.0, np.linspace(2, 10, 9))
        assert rep.passed and 0.8 < rep.measured < 1.05


def test_random_suite_convex_profiles_pass(rng):
    for prof, n in ((WeightProfile.linear(1), 1), (WeightProfile.power(1), 3)):
        reps = random_comparison_reports(space(prof, n=n), rng, 10)
        assert len(reps) == 50
        assert all(r.passed for r in reps)


def test_reports_are_deterministic():
    s = space(WeightProfile.quadratic(1))
    a = random_comparison_reports(s, np.random.default_rng(3), 5)
    b = random_comparison_reports(s, np.random.default_rng(3), 5)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
