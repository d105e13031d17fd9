"""Scalar special functions: log-factorials, modified Bessel I and K of
integer order, and Jacobi polynomials.

Series are accumulated with ``math.fsum`` (exactly rounded summation) so
that the factorial-ratio sums built on top of them do not lose digits to
accumulation order.
"""

import math

import numpy as np

__all__ = [
    "BesselRangeError",
    "LogFactorialTable",
    "log_factorial",
    "bessel_i",
    "bessel_i_scaled",
    "bessel_k",
    "jacobi_p",
]

#: Largest |z| accepted by the Bessel-I series before refusing to evaluate.
BESSEL_I_MAX_ABS = 200.0

_TINY = 1e-18


class BesselRangeError(ValueError):
    """Argument outside the range where a Bessel routine is trusted."""


class LogFactorialTable:
    """Read-only table ``values[n] = ln(n!)`` for ``0 <= n <= capacity``."""

    def __init__(self, capacity=4096):
        if capacity < 0:
            raise ValueError("capacity must be nonnegative")
        self.capacity = int(capacity)
        vals = np.array([math.lgamma(n + 1.0) for n in range(self.capacity + 1)])
        vals[:2] = 0.0
        vals.setflags(write=False)
        self.values = vals

    def __call__(self, n):
        if n < 0:
            raise ValueError(f"log_factorial needs n >= 0, got {n}")
        if n <= self.capacity:
            return float(self.values[n])
        return math.lgamma(n + 1.0)


_LOGFACT = LogFactorialTable()


def log_factorial(n):
    """Return ln(n!) for a nonnegative integer n."""
    return _LOGFACT(int(n))


def _check_order(nu):
    if int(nu) != nu or nu < 0:
        raise ValueError(f"order must be a nonnegative integer, got {nu}")
    return int(nu)


def _series(first, ratio_num, nu, max_terms=100000):
    """Sum ``t_0 + t_1 + ...`` with ``t_{m+1} = t_m * ratio_num / ((m+1)(m+1+nu))``.

    Stops once past the largest term and the current term is below
    ``_TINY`` times the running sum of magnitudes.
    """
    re, im = [first.real], [first.imag]
    t = first
    mag = abs(first)
    peak = abs(ratio_num)
    for m in range(max_terms):
        t = t * ratio_num / ((m + 1) * (m + 1 + nu))
        re.append(t.real)
        im.append(t.imag)
        at = abs(t)
        mag += at
        if (m + 1) * (m + 1 + nu) > peak and at <= _TINY * mag:
            break
    return complex(math.fsum(re), math.fsum(im))


def bessel_i(nu, z):
    """Modified Bessel function I_nu(z) for integer nu >= 0 and complex z.

    Direct power series. For real z (and, more generally, whenever the
    series does not cancel) the relative error is ~1e-15. Along directions
    where the series oscillates (z near the imaginary axis) the error is
    absolute, of order 1e-16 * I_nu(|z|).

    Raises BesselRangeError for |z| > 200.
    """
    nu = _check_order(nu)
    z = complex(z)
    if abs(z) > BESSEL_I_MAX_ABS:
        raise BesselRangeError(f"|z| = {abs(z):g} exceeds {BESSEL_I_MAX_ABS:g}")
    if z == 0:
        return complex(1.0 if nu == 0 else 0.0)
    half = z / 2
    if abs(half) < 1e-300:
        return complex(1.0 if nu == 0 else 0.0)
    # leading term (z/2)^nu / nu!, via logs to avoid overflow in nu!
    lead = np.exp(nu * np.log(half) - log_factorial(nu)) if nu else 1.0 + 0j
    return _series(complex(lead), half * half, nu)


def bessel_i_scaled(nu, w):
    """Entire function g_nu(w) = w^(-nu/2) I_nu(sqrt(w)).

    Summed as ``sum_m (w/4)^m / (2^nu m! (m+nu)!)``, so no square root or
    fractional power of w is ever taken.
    """
    nu = _check_order(nu)
    w = complex(w)
    if abs(w) > BESSEL_I_MAX_ABS ** 2:
        raise BesselRangeError(f"|sqrt(w)| exceeds {BESSEL_I_MAX_ABS:g}")
    lead = math.exp(-nu * math.log(2.0) - log_factorial(nu))
    if w == 0:
        return complex(lead)
    return _series(complex(lead), w / 4, nu)


def _k_log_integrand(t, nu, x):
    return -x * np.cosh(t) + nu * t


def bessel_k(nu, x, rtol=1e-15):
    """Modified Bessel function K_nu(x) for integer nu >= 0 and real x > 0.

    Evaluates ``int_0^inf exp(-x cosh t) cosh(nu t) dt``. The integrand
    decays doubly exponentially and is analytic in a strip, so the
    trapezoidal rule converges geometrically in the step; the step is
    halved until two successive sums agree to ``rtol``. The range is cut
    where the integrand falls below 1e-18 of its peak.

    Validated to 1e-10 relative on 0.05 <= x <= 60; smaller x still works
    but is outside the tested range.
    """
    nu = _check_order(nu)
    x = float(x)
    if not x > 0:
        raise ValueError(f"bessel_k needs x > 0, got {x}")
    t_peak = math.asinh(nu / x)
    log_peak = float(_k_log_integrand(t_peak, nu, x))
    cut = log_peak + math.log(_TINY)
    t_end = max(t_peak, 1.0)
    while _k_log_integrand(t_end, nu, x) > cut:
        t_end *= 1.5

    def f(t):
        # cosh(nu t) e^{-x cosh t} scaled by e^{-log_peak}
        return 0.5 * (np.exp(_k_log_integrand(t, nu, x) - log_peak)
                      + np.exp(-x * np.cosh(t) - nu * t - log_peak))

    h = min(0.5, t_end / 8)
    n = int(math.ceil(t_end / h))
    h = t_end / n
    t = np.linspace(0.0, t_end, n + 1)
    total = math.fsum(f(t)) - 0.5 * (f(0.0) + f(t_end))
    est = h * total
    for _ in range(30):
        mid = t[:-1] + h / 2
        total += math.fsum(f(mid))
        t = np.sort(np.concatenate([t, mid]))
        h /= 2
        new = h * total
        if abs(new - est) <= rtol * abs(new):
            est = new
            break
        est = new
    else:
        raise RuntimeError(f"bessel_k({nu}, {x}) did not converge")
    return est * math.exp(log_peak)


def jacobi_p(n, alpha, beta, x):
    """Jacobi polynomial P_n^(alpha, beta)(x) by the three-term recurrence."""
    n = _check_order(n)
    a = _check_order(alpha)
    b = _check_order(beta)
    x = complex(x)
    p_prev = 1.0 + 0j
    if n == 0:
        return p_prev
    p = (a + 1) + (a + b + 2) * (x - 1) / 2
    for m in range(2, n + 1):
        s = 2 * m + a + b
        c1 = 2 * m * (m + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * x + a * a - b * b)
        c3 = 2 * (m + a - 1) * (m + b - 1) * s
        p_prev, p = p, (c2 * p - c3 * p_prev) / c1
    return p
