import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from anosovlab.asymptotics import (
    QuadratureResult, entropy_integral_constant, gauss_kronrod, inner_partials, log_weight,
    predict, r2_integral_constant,
)
from anosovlab.entropy import r2_split
from anosovlab.errors import InvalidInputError
from anosovlab.spectrum import WEDGE, eigenvalues_mixmax_analytic

CLAUSEN = float(4 * mpmath.clsin(2, mpmath.pi / 3))


@pytest.fixture(scope="module")
def r2_const():
    return r2_integral_constant(1e-8)


def test_entropy_constant_value():
    res = entropy_integral_constant()
    assert isinstance(res, QuadratureResult)
    assert res.value == pytest.approx(4.06, abs=0.005)
    assert res.value == pytest.approx(CLAUSEN, abs=1e-11)


def test_entropy_constant_full_circle_vanishes():
    assert abs(entropy_integral_constant(1e-12, -math.pi, math.pi).value) < 1e-10


def test_entropy_constant_rejects_tiny_tol():
    with pytest.raises(InvalidInputError):
        entropy_integral_constant(1e-14)


def test_entropy_constant_deterministic():
    a = entropy_integral_constant(1e-10)
    b = entropy_integral_constant(1e-10)
    assert a == b


def test_r2_constant(r2_const):
    assert r2_const.value == pytest.approx(9.138, abs=0.01)


def test_r2_constant_scipy_oracle(r2_const):
    f = lambda p: math.log(4 * math.cos(p / 2) ** 2)
    left = lambda p: integrate.quad(f, -WEDGE, p, epsabs=1e-13)[0]
    right = lambda p: integrate.quad(f, p, WEDGE, epsabs=1e-13)[0]
    ref = integrate.quad(lambda p: left(p) * right(p), -WEDGE, WEDGE, epsabs=1e-11)[0]
    assert r2_const.value == pytest.approx(ref, abs=1e-7)


def test_r2_constant_rejects_tiny_tol():
    with pytest.raises(InvalidInputError):
        r2_integral_constant(1e-9)


def test_inner_partials_symmetric_at_midpoint():
    left, right = inner_partials(0.0)
    assert left == pytest.approx(right, abs=1e-12)
    assert left + right == pytest.approx(CLAUSEN, abs=1e-11)


def test_split_sum_converges_to_constant(r2_const):
    gaps = []
    for N in (256, 1024, 4096):
        ratio = r2_split(eigenvalues_mixmax_analytic(N)).value / (N / (2 * math.pi)) ** 3
        gaps.append(abs(ratio - r2_const.value))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.02


def test_log_weight_sign():
    phi = np.linspace(-math.pi + 1e-3, math.pi - 1e-3, 2001)
    w = log_weight(phi)
    inside = np.abs(phi) < WEDGE - 1e-9
    outside = np.abs(phi) > WEDGE + 1e-9
    assert np.all(w[inside] > 0)
    assert np.all(w[outside] < 0)
    assert log_weight(WEDGE) == pytest.approx(0.0, abs=1e-15)
    assert log_weight(WEDGE) >= 0


@pytest.mark.parametrize("f,a,b,exact", [
    (np.sin, 0.0, math.pi, 2.0),
    (np.exp, -1.0, 2.0, math.e ** 2 - math.exp(-1)),
    (lambda x: 1 / (1 + x * x), -5.0, 5.0, 2 * math.atan(5)),
    (lambda x: np.sqrt(np.abs(x)), -1.0, 1.0, 4 / 3),
])
def test_gauss_kronrod_known_integrals(f, a, b, exact):
    assert gauss_kronrod(f, a, b, 1e-12).value == pytest.approx(exact, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 12), st.floats(-2, 2), st.floats(0.1, 3))
def test_gauss_kronrod_polynomials(deg, a, width):
    b = a + width
    exact = (b ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
    assert gauss_kronrod(lambda x: x ** deg, a, b, 1e-12).value == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_predict_examples():
    h256, _ = predict(256)
    assert h256 == pytest.approx(165.4, abs=0.1)
    _, r7307 = predict(7307)
    assert r7307 == pytest.approx(1.44e10, rel=0.005)
    h, r = predict(2 * math.pi)
    assert h == pytest.approx(entropy_integral_constant(1e-12).value, rel=1e-14)


@pytest.mark.parametrize("N", [16, 256, 7307])
def test_predict_scaling(N):
    h1, r1 = predict(N)
    h2, r2 = predict(2 * N)
    assert h2 / h1 == pytest.approx(2, rel=1e-14)
    assert r2 / r1 == pytest.approx(8, rel=1e-14)


def test_predict_rejects_small():
    with pytest.raises(InvalidInputError):
        predict(1)
