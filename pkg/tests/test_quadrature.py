import math

import numpy as np
import pytest

from fheat import quadrature


@pytest.mark.parametrize("n", [5, 6, 7, 8, 33, 34])
def test_simpson_exact_on_cubics(n):
    # Simpson (with the 3/8 closure for odd interval counts) integrates cubics exactly
    x = np.linspace(0.0, 2.0, n)
    h = x[1] - x[0]
    vals = 3 * x ** 3 - x ** 2 + 2
    assert quadrature.integrate_samples(vals, h) == pytest.approx(12 - 8 / 3 + 4, rel=1e-13)


def test_weights_positive_and_sum_to_length():
    for n in (5, 6, 101, 102):
        w = quadrature.weights(n, 0.1)
        assert np.all(w > 0)
        assert w.sum() == pytest.approx((n - 1) * 0.1, rel=1e-13)


def test_trapezoid_order_two_simpson_order_four():
    f = np.exp
    exact = math.e - 1
    errs = {}
    for rule in quadrature.RULES:
        e1 = abs(quadrature.integrate(f, 0, 1, 0.1, rule) - exact)
        e2 = abs(quadrature.integrate(f, 0, 1, 0.05, rule) - exact)
        errs[rule] = e1 / e2
    assert errs["trapezoid"] == pytest.approx(4, rel=0.05)
    assert errs["simpson"] == pytest.approx(16, rel=0.1)


def test_nodes_cover_interval():
    x, dx = quadrature.nodes(-1.0, 2.0, 0.07)
    assert x[0] == -1.0 and x[-1] == 2.0
    assert dx <= 0.07
    assert np.allclose(np.diff(x), dx)


def test_unknown_rule_rejected():
    with pytest.raises(ValueError):
        quadrature.weights(10, 0.1, "gauss")


def test_cumulative_matches_antiderivative():
    x = np.linspace(0, 3, 301)
    c = quadrature.cumulative(np.cos(x), x[1] - x[0])
    assert np.max(np.abs(c - np.sin(x))) < 1e-8
