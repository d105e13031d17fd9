import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipair.specfun import (
    BesselRangeError,
    LogFactorialTable,
    bessel_i,
    bessel_i_scaled,
    bessel_k,
    jacobi_p,
    log_factorial,
)

# reference values frozen from 30-digit mpmath evaluations
I_REF = [
    (0, 2.0, 2.2795853023360673),
    (1, 2.0, 1.5906368546373291),
    (3, 5.0, 10.331150169151138),
    (2, 0.1, 0.0012510419922417593),
    (5, 30.0, 512151465476.93497),
]
K_REF = [
    (0, 1.0, 0.42102443824070833),
    (1, 0.5, 1.6564411200033009),
    (3, 2.5, 0.2682271463934492),
    (0, 0.001, 7.0236888005623813),
    (5, 40.0, 1.1423814375953183e-18),
]
P_REF = [
    (3, 1, 2, 0.3, -0.58150),
    (5, 0, 0, -0.7, 0.36519875),
    (4, 2, 3, 0.9, 6.90196875),
]


@pytest.mark.parametrize("nu,x,ref", I_REF)
def test_bessel_i_reference(nu, x, ref):
    assert bessel_i(nu, x).real == pytest.approx(ref, rel=1e-14)
    assert bessel_i(nu, x).imag == 0


def test_bessel_i_complex_argument():
    val = bessel_i(2, 1 + 2j)
    assert val == pytest.approx(-0.41267190829317053 + 0.26597392279838854j, rel=1e-14)


def test_bessel_i_at_zero():
    assert bessel_i(0, 0) == 1
    assert bessel_i(3, 0) == 0


def test_bessel_i_range_guard():
    with pytest.raises(BesselRangeError):
        bessel_i(0, 250.0)


def test_bessel_i_rejects_fractional_order():
    with pytest.raises(ValueError):
        bessel_i(0.5, 1.0)


@pytest.mark.parametrize("nu,x,ref", K_REF)
def test_bessel_k_reference(nu, x, ref):
    assert bessel_k(nu, x) == pytest.approx(ref, rel=1e-13)


def test_bessel_k_needs_positive_argument():
    with pytest.raises(ValueError):
        bessel_k(0, 0.0)


def test_bessel_k_matches_scipy():
    from scipy.special import kv

    for nu in range(7):
        for x in np.geomspace(0.01, 80, 25):
            assert bessel_k(nu, x) == pytest.approx(kv(nu, x), rel=1e-12)


def test_wronskian():
    # I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x
    for nu in range(5):
        for x in (0.2, 1.0, 7.5, 30.0):
            w = bessel_i(nu, x).real * bessel_k(nu + 1, x) + bessel_i(nu + 1, x).real * bessel_k(nu, x)
            assert w * x == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(nu=st.integers(0, 8), x=st.floats(0.05, 40))
def test_bessel_i_recurrence(nu, x):
    lhs = bessel_i(nu, x).real - bessel_i(nu + 2, x).real
    rhs = 2 * (nu + 1) / x * bessel_i(nu + 1, x).real
    assert lhs == pytest.approx(rhs, rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(nu=st.integers(0, 6), w=st.complex_numbers(max_magnitude=400))
def test_scaled_bessel_is_the_power_combination(nu, w):
    if abs(w) < 1e-6:
        return
    direct = w ** (-nu / 2) * bessel_i(nu, np.sqrt(w))
    assert abs(bessel_i_scaled(nu, w) - direct) <= 1e-12 * abs(direct) + 1e-14 * bessel_i(nu, abs(w) ** 0.5).real / abs(w) ** (nu / 2)


def test_scaled_bessel_at_zero():
    assert bessel_i_scaled(3, 0) == pytest.approx(1 / (8 * 6))


@pytest.mark.parametrize("n,a,b,x,ref", P_REF)
def test_jacobi_reference(n, a, b, x, ref):
    assert jacobi_p(n, a, b, x).real == pytest.approx(ref, rel=1e-14)


def test_jacobi_reflection():
    for n in range(7):
        for a, b in [(0, 0), (1, 3), (4, 2)]:
            for x in (-0.4, 0.25, 0.8):
                assert jacobi_p(n, a, b, -x) == pytest.approx((-1) ** n * jacobi_p(n, b, a, x), rel=1e-13)


def test_jacobi_endpoint():
    # P_n^(a,b)(1) = C(n+a, n)
    for n in range(8):
        for a in range(4):
            assert jacobi_p(n, a, 2, 1.0).real == pytest.approx(math.comb(n + a, n), rel=1e-13)


def test_log_factorial():
    assert log_factorial(0) == 0.0
    assert log_factorial(1) == 0.0
    assert log_factorial(10) == pytest.approx(math.log(3628800), rel=1e-15)
    assert log_factorial(100) == pytest.approx(363.73937555556349, rel=1e-15)
    assert log_factorial(10_000) == pytest.approx(math.lgamma(10_001), rel=1e-15)
    with pytest.raises(ValueError):
        log_factorial(-1)


def test_log_factorial_table_is_read_only():
    t = LogFactorialTable(16)
    with pytest.raises(ValueError):
        t.values[3] = 0.0
