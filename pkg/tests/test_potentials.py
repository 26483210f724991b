import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import richardson_derivative
from slet.errors import ConfigurationError, DomainError
from slet.potentials import (
    MAX_ORDER,
    PotentialSpec,
    RadialSeries,
    eval_y_series,
    scalar_table,
    vector_table,
)

POTENTIALS = {
    "coulomb": PotentialSpec.coulomb(1 / 137.03602),
    "linear": PotentialSpec.linear_scalar(0.137),
    "power": PotentialSpec.power_law(1.709**1.1, 0.1, -2.028),
    "power_steep": PotentialSpec.power_law(0.8, 1.7, 0.3),
}


@pytest.mark.parametrize("name", sorted(POTENTIALS))
@pytest.mark.parametrize("r", [0.05, 0.7, 3.0, 25.0])
@pytest.mark.parametrize("table", [vector_table, scalar_table])
def test_derivative_orders_match_finite_differences(name, r, table):
    spec = POTENTIALS[name]
    d = table(spec, r, MAX_ORDER)
    for n in range(1, MAX_ORDER + 1):
        fd = richardson_derivative(lambda x: float(table(spec, x, n - 1)[n - 1]), r, 0.05 * r)
        scale = max(abs(d[n]), abs(d[n - 1]) / r, 1e-300)
        assert abs(fd - d[n]) <= 1e-6 * scale, (name, r, n, fd, d[n])


def test_tables_accept_arrays():
    r = np.array([0.5, 1.0, 2.0])
    out = vector_table(POTENTIALS["coulomb"], r, 3)
    assert out.shape == (4, 3)
    np.testing.assert_allclose(out[0], -1 / 137.03602 / r)


def test_equal_mix_has_no_spin_driver():
    y = eval_y_series(POTENTIALS["power"], 1.3)
    assert np.all(y.d == 0.0)


def test_linear_scalar_difference_is_minus_slope():
    y = eval_y_series(POTENTIALS["linear"], 2.0)
    assert y[0] == pytest.approx(-0.274)
    assert y[1] == pytest.approx(-0.137)
    assert np.all(y.d[2:] == 0.0)


@pytest.mark.parametrize(
    "build",
    [
        lambda: PotentialSpec.coulomb(0.0),
        lambda: PotentialSpec.coulomb(1.2),
        lambda: PotentialSpec.linear_scalar(-1.0),
        lambda: PotentialSpec.power_law(1.0, 0.0),
        lambda: PotentialSpec.custom(),
        lambda: PotentialSpec("bogus"),
    ],
)
def test_invalid_potentials_rejected(build):
    with pytest.raises(ConfigurationError):
        build()


@pytest.mark.parametrize("r", [0.0, -1.0, math.inf, math.nan])
def test_radius_domain(r):
    with pytest.raises(DomainError):
        vector_table(POTENTIALS["coulomb"], r)


def test_custom_evaluator():
    def well(r):
        return [-(r**-2)] + [0.0] * 8

    spec = PotentialSpec.custom(vector=well)
    assert vector_table(spec, 2.0)[0] == pytest.approx(-0.25)
    assert np.all(scalar_table(spec, 2.0) == 0.0)
    bad = PotentialSpec.custom(scalar=lambda r: [r])
    with pytest.raises(ConfigurationError):
        scalar_table(bad, 1.0)


def _scaled(series):
    """Taylor coefficients times r**n: comparable magnitudes at every order."""
    return series.taylor() * series.r ** np.arange(len(series))


def assert_series_close(got, want, tol=1e-10):
    a, b = _scaled(got), _scaled(want)
    np.testing.assert_allclose(a, b, rtol=tol, atol=tol * np.max(np.abs(b)))


exponents = st.floats(-2.5, 2.5, allow_nan=False).filter(lambda p: abs(p) > 1e-3)
radii = st.floats(0.2, 20.0)


@given(r=radii, p=exponents, q=exponents)
def test_series_product_of_powers(r, p, q):
    prod = RadialSeries.power(r, p) * RadialSeries.power(r, q)
    assert_series_close(prod, RadialSeries.power(r, p + q))


@given(r=radii, p=exponents)
def test_series_reciprocal_and_quotient(r, p):
    a = RadialSeries.power(r, p, coef=1.7)
    assert_series_close(a.reciprocal(), RadialSeries.power(r, -p, coef=1 / 1.7))
    assert_series_close(a / a, RadialSeries.constant(r, 1.0))


@given(r=radii, p=exponents)
def test_series_sqrt(r, p):
    a = RadialSeries.power(r, p, coef=2.0)
    assert_series_close(a.sqrt(), RadialSeries.power(r, p / 2, coef=math.sqrt(2.0)))


@given(r=radii, p=exponents)
def test_series_derivative_shifts_orders(r, p):
    d = RadialSeries.power(r, p).derivative()
    want = RadialSeries.power(r, p - 1, coef=p, order=MAX_ORDER - 1)
    np.testing.assert_allclose(d.d, want.d, rtol=1e-12)


@settings(max_examples=50)
@given(r=st.floats(1.0, 10.0), p=exponents, frac=st.floats(-0.05, 0.05))
def test_series_taylor_extrapolation(r, p, frac):
    h = frac * r
    approx = RadialSeries.power(r, p).extrapolate(h)
    exact = (r + h) ** p
    # Lagrange remainder of the degree-8 polynomial of (1 + frac)**p
    binom = abs(math.prod(p - i for i in range(9))) / math.factorial(9)
    worst = max((1 - abs(frac)) ** (p - 9), (1 + abs(frac)) ** (p - 9))
    bound = r**p * binom * abs(frac) ** 9 * worst
    assert abs(approx - exact) <= 1e-12 * abs(exact) + bound


def test_series_domain_errors():
    zero = RadialSeries.constant(1.0, 0.0)
    with pytest.raises(DomainError):
        zero.reciprocal()
    with pytest.raises(DomainError):
        RadialSeries.constant(1.0, -1.0).sqrt()


def test_series_scalar_arithmetic():
    a = RadialSeries.power(2.0, 1.0)
    b = 3.0 - a
    assert b[0] == 1.0 and b[1] == -1.0
    assert (a + 1.0)[0] == 3.0
    assert (2.0 * a)[1] == 2.0
    assert (-a)[0] == -2.0
    assert len(a.truncated(3)) == 4
