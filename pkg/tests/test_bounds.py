import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fheat import bounds
from fheat.bounds import (EnvelopeParams, PDEKernel, davies_check, davies_j_monotonicity,
                          envelope_eps_study, gaussian_envelope_fit, interval_gap,
                          liouville_example_check, liouville_tail, random_interval_pairs,
                          stochastic_completeness_check)
from fheat.closedform import SolitonKernel
from fheat.errors import DegenerateQueryError, PreconditionError
from fheat.geometry import WeightedSpace
from fheat.profiles import WeightProfile
from fheat.spectral import eigensolve

STEADY_K = SolitonKernel("steady")
EUCLID_K = SolitonKernel("euclidean")
STEADY = WeightedSpace(WeightProfile.linear(1), L=12)
EUCLID = WeightedSpace(WeightProfile.constant(0), L=12)

# frozen oracle values (mpmath nested quadrature)
DAVIES_STEADY_LHS = 0.00365180756737631537  # int_0^1 int_3^4 H e^{-x-y}, t = 1
DAVIES_EUCLID_LHS = 0.00773353924116659603  # int_{-1}^0 int_2^3 G_{1/2}
LIOUVILLE_L1 = 2.06480674782967763  # 2 int_0^inf u e^{-|x|^{8/3}}


class TestDavies:
    def test_steady_example(self):
        rep = davies_check(STEADY, STEADY_K, (0, 1), (3, 4), [1.0], lambda1=0.25)
        row = rep.details["rows"][0]
        rhs = math.sqrt((1 - math.exp(-1)) * (math.exp(-3) - math.exp(-4))) * math.exp(-1.25)
        assert row["rhs"] == pytest.approx(rhs, rel=1e-9)
        assert row["lhs"] == pytest.approx(DAVIES_STEADY_LHS, rel=1e-8)
        assert rep.passed

    def test_same_set(self):
        rep = davies_check(STEADY, STEADY_K, (0, 1), (0, 1), [0.5, 1.0], lambda1=0.25)
        assert rep.passed and rep.details["distance"] == 0
        v = 1 - math.exp(-1)
        for row in rep.details["rows"]:
            assert row["rhs"] == pytest.approx(v * math.exp(-0.25 * row["t"]), rel=1e-9)

    def test_euclid_example(self):
        rep = davies_check(EUCLID, EUCLID_K, (-1, 0), (2, 3), [0.5])
        row = rep.details["rows"][0]
        assert row["lhs"] == pytest.approx(DAVIES_EUCLID_LHS, rel=1e-8)
        assert row["rhs"] == pytest.approx(math.exp(-2), rel=1e-12)
        assert rep.passed

    def test_gap(self):
        assert interval_gap((0, 1), (3, 4)) == 2
        assert interval_gap((3, 4), (0, 1)) == 2
        assert interval_gap((0, 2), (1, 3)) == 0

    def test_degenerate(self):
        with pytest.raises(DegenerateQueryError):
            davies_check(EUCLID, EUCLID_K, (1, 1), (2, 3), [0.5])

    def test_spectral_source(self):
        es = eigensolve(STEADY, (-10, 10), K=200, nodes=2048)
        assert davies_check(STEADY, es, (-1, 0), (1, 2), np.linspace(0.2, 2, 5), 0.25).passed

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), which=st.sampled_from(["steady", "euclid"]))
    def test_property_random_pairs(self, seed, which):
        space, k, lam = (STEADY, STEADY_K, 0.25) if which == "steady" else (EUCLID, EUCLID_K, 0.0)
        for b1, b2 in random_interval_pairs(np.random.default_rng(seed), 3, -5, 5):
            assert davies_check(space, k, b1, b2, np.linspace(0.1, 2, 5), lam).passed
            # lambda1 = 0 only weakens the bound
            assert davies_check(space, k, b1, b2, np.linspace(0.1, 2, 5), 0.0).passed


@pytest.fixture(scope="module")
def es():
    return eigensolve(WeightedSpace(WeightProfile.constant(0), L=4), (0, math.pi), K=200, nodes=2048)


class TestDaviesJ:
    def test_alpha_zero(self, es):
        rep = davies_j_monotonicity(EUCLID, (0, math.pi), (1, 1.5), 0.0, 0.1, np.linspace(0.1, 3, 10), es=es)
        assert rep.passed

    def test_alpha_one(self, es):
        rep = davies_j_monotonicity(EUCLID, (0, math.pi), (1, 1.5), 1.0, 0.1, np.linspace(0.1, 3, 10), es=es)
        assert rep.passed
        # J at t0 from the series equals the direct integral of the projected indicator
        assert rep.details["J_t0"] > 0

    def test_filter_before_t0(self, es):
        rep = davies_j_monotonicity(EUCLID, (0, math.pi), (1, 1.5), 1.0, 0.5, [0.1, 0.2, 0.5, 1.0], es=es)
        assert len(rep.details["rows"]) == 2
        assert "filtered" in rep.notes[0]

    def test_negative_alpha(self):
        with pytest.raises(PreconditionError):
            davies_j_monotonicity(EUCLID, (0, math.pi), (1, 1.5), -1.0, 0.1, [1.0])


class TestEnvelope:
    def params(self, eps=1.0):
        return EnvelopeParams.uniform(eps, 0.0, 4.0, (-2, 2), (0.05, 1.0))

    def test_flat_on_diagonal(self):
        p = EnvelopeParams(1.0, 0.0, 4.0, [0.0], [0.0], [0.1, 0.5])
        rep = gaussian_envelope_fit(EUCLID, EUCLID_K, p, "one_ball")
        assert rep.details["c_coarse"] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-9)
        assert rep.measured <= 1

    def test_steady_both_forms(self):
        for which in ("two_ball", "one_ball"):
            rep = gaussian_envelope_fit(STEADY, STEADY_K, self.params(), which)
            assert rep.passed and math.isfinite(rep.measured) and rep.kind == "fitted"
            assert rep.details["growth"] < 0.05

    def test_eps_monotone(self):
        rep = envelope_eps_study(STEADY, STEADY_K, self.params(), "one_ball")
        c = rep.details["constants"]
        assert rep.passed
        assert c["0.25"] >= c["0.5"] >= c["1.0"] >= c["2.0"]

    def test_eps_growth_is_bounded_for_exact_gaussian_decay(self):
        # the constant increases as eps shrinks, but a kernel with exact e^{-d^2/4t}
        # decay keeps it below the eps -> 0 limit
        p = EnvelopeParams(1.0, 0.0, 4.0, [-2.0, -1.5], [1.0, 2.0], np.linspace(0.05, 1.0, 20).tolist())
        rep = envelope_eps_study(STEADY, STEADY_K, p, "two_ball", eps_grid=(2, 1, 0.5, 0.25, 1e-9))
        c = rep.details["constants"]
        assert rep.passed
        assert c["1e-09"] >= c["0.25"] > c["2.0"]
        assert math.isfinite(c["1e-09"])

    def test_filtering_and_empty(self):
        p = EnvelopeParams(1.0, 0.0, 1.0, [5.0], [0.0], [0.1])
        with pytest.raises(PreconditionError):
            gaussian_envelope_fit(EUCLID, EUCLID_K, p)
        with pytest.raises(PreconditionError):
            EnvelopeParams(0.0, 0.0, 1.0, [0.0], [0.0], [0.1])


class TestCompleteness:
    def test_steady(self):
        rep = stochastic_completeness_check(STEADY, STEADY_K, [0.0, 1.0], [0.1, 0.5, 1.0])
        assert rep.passed
        assert all(abs(r["integral"] - 1) < 1e-6 for r in rep.details["rows"])

    def test_euclid_and_shrinking(self):
        for k in (EUCLID_K, SolitonKernel("shrinking")):
            space = WeightedSpace(k.profile, L=12)
            assert stochastic_completeness_check(space, k, [0.0, -1.5], [0.1, 1.0]).passed

    def test_dirichlet_deficit(self):
        es = eigensolve(EUCLID, (-1, 1), K=200, nodes=1024)
        rep = stochastic_completeness_check(EUCLID, es, [0.0], [0.5])
        assert rep.passed
        assert rep.details["rows"][0]["integral"] < 0.9
        assert any("expected deficit" in n for n in rep.notes)

    def test_truncation_too_small_is_caught(self):
        space = WeightedSpace(WeightProfile.constant(0), L=1.0)
        rep = stochastic_completeness_check(space, EUCLID_K, [0.0], [1.0])
        # the tail estimate accounts for the lost mass
        assert rep.passed and rep.details["rows"][0]["tail"] > 0.1


class TestLiouville:
    def test_delta_third(self):
        rep = liouville_example_check(1)
        d = rep.details
        assert rep.passed
        assert d["harmonic_residual"] <= 1e-4
        assert d["l1_converged"] and d["l1_increments"][-1] < 1e-8
        assert d["l1_value"] == pytest.approx(LIOUVILLE_L1, rel=1e-10)
        assert d["l2_diverging"]

    def test_tail_series_against_quadrature(self):
        q = 8 / 3
        # the integrand is concentrated in a window of width ~x^{1-q} below x
        g = lambda x: integrate.quad(lambda s: math.exp(s ** q - x ** q), max(0.0, x - 2), x, limit=200)[0]
        direct = integrate.quad(g, 4, 40, limit=200)[0] + liouville_tail(q, 40)
        assert liouville_tail(q, 4) == pytest.approx(direct, rel=1e-8)

    def test_delta_zero_logarithmic(self):
        rep = liouville_example_check(None)
        assert rep.passed
        assert rep.details["log_slope"] == pytest.approx(1.0, rel=0.2)
        # Dawson function oracle: u e^{-x^2} is Dawson's integral
        R = np.array(rep.details["R"])
        oracle = [2 * integrate.quad(special.dawsn, 0, r, limit=400)[0] for r in R]
        assert np.allclose(rep.details["l1_partial"], oracle, rtol=1e-8)

    def test_other_m(self):
        rep = liouville_example_check(2)
        assert rep.passed and rep.details["delta"] == pytest.approx(0.2)


def test_pde_source_matches_closed_form():
    src = PDEKernel(STEADY, (-12, 12), 2048)
    xs = np.linspace(-2, 2, 9)
    H = src.matrix(xs, [0.0, 0.5], 0.5)
    exact = STEADY_K(xs[:, None], np.array([0.0, 0.5])[None, :], 0.5)
    assert np.max(np.abs(H - exact)) / np.max(exact) < 2e-3


def test_kernel_source_type_error():
    with pytest.raises(TypeError):
        bounds.kernel_source(42)
