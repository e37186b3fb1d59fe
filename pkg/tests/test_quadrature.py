import math

import numpy as np
import pytest

from perpetuity.quadrature import (
    QuadResult,
    expm1_over,
    frullani,
    integrate_finite,
    integrate_semi_infinite,
)


def test_polynomial_exactness_on_single_panel():
    # the embedded 15-point rule integrates polynomials up to degree 22
    for k in range(0, 23, 2):
        res = integrate_finite(lambda x, k=k: x ** k, 0.0, 1.0, 1e-10)
        assert res.converged
        assert abs(res.value - 1.0 / (k + 1)) < 1e-13


def test_entire_integrand_reference_value():
    res = integrate_finite(lambda y: expm1_over(1.0, y), 0.0, 1.0, 1e-12)
    assert res.converged
    assert abs(res.value - 1.3179021514544038) < 1e-12


def test_linearity_on_random_poly_exp_products():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c1 = rng.uniform(-2, 2, size=3)
        c2 = rng.uniform(-2, 2, size=3)
        al, be = rng.uniform(-3, 3, size=2)
        f = lambda x: (c1[0] + c1[1] * x + c1[2] * x * x) * math.exp(-x)
        g = lambda x: (c2[0] + c2[1] * x + c2[2] * x * x) * math.exp(-2 * x)
        h = lambda x: al * f(x) + be * g(x)
        rf = integrate_finite(f, 0.0, 4.0, 1e-11)
        rg = integrate_finite(g, 0.0, 4.0, 1e-11)
        rh = integrate_finite(h, 0.0, 4.0, 1e-11)
        combined_err = rh.abs_error_estimate + abs(al) * rf.abs_error_estimate + abs(be) * rg.abs_error_estimate
        assert abs(rh.value - (al * rf.value + be * rg.value)) <= combined_err + 1e-13


def test_complex_integrand_shared_panels():
    res = integrate_finite(lambda x: np.exp(1j * x), 0.0, 1.0, 1e-12)
    exact = math.sin(1.0) + 1j * (1.0 - math.cos(1.0))
    assert abs(res.value - exact) < 1e-12


def test_semi_infinite_exponential_moments():
    r0 = integrate_semi_infinite(lambda y: math.exp(-y), 0.0, 1e-10, 1.0)
    r1 = integrate_semi_infinite(lambda y: y * math.exp(-y), 0.0, 1e-10, 1.0)
    assert r0.converged and abs(r0.value - 1.0) < 1e-9
    assert r1.converged and abs(r1.value - 1.0) < 1e-9


def test_frullani_cross_check_50_random_pairs():
    rng = np.random.default_rng(17)
    for _ in range(50):
        a, b = rng.uniform(0.1, 10.0, size=2)
        f = lambda y: (math.exp(-a * y) - math.exp(-(a + b) * y)) / y if y > 0 else b
        res = integrate_semi_infinite(f, 0.0, 1e-11, a)
        expect = frullani(a, b)
        assert res.converged
        assert abs(res.value - expect) <= 1e-8 * abs(expect)


def test_frullani_closed_form():
    assert frullani(1.0, 1.0) == pytest.approx(math.log(2.0), abs=1e-15)
    assert frullani(2.0, 6.0) == pytest.approx(math.log(4.0), abs=1e-15)


def test_series_branch_matches_direct_at_switch():
    # the small-argument series takes over below |b*y| = 1e-4
    for b in (1.0, -1.0, 2.5):
        for y in (0.99e-4 / abs(b), 1.01e-4 / abs(b)):
            direct = math.expm1(b * y) / y
            assert abs(expm1_over(b, y) - direct) <= 1e-12 * abs(direct)


def test_expm1_over_vectorized_and_limit():
    assert expm1_over(2.0, 0.0) == pytest.approx(2.0, abs=1e-15)
    ys = np.array([0.0, 1e-9, 0.1, 3.0])
    vals = expm1_over(1.5, ys)
    assert vals.shape == ys.shape
    assert vals[0] == pytest.approx(1.5, abs=1e-12)
    assert vals[-1] == pytest.approx(math.expm1(4.5) / 3.0, rel=1e-12)


def test_nonconvergence_is_reported_not_raised():
    # a needle the subdivision cap cannot resolve at this tolerance
    res = integrate_finite(lambda x: 1.0 / math.sqrt(abs(x - 0.123456789) + 1e-300), 0.0, 1.0,
                           1e-15, max_panels=8)
    assert isinstance(res, QuadResult)
    assert not res.converged
