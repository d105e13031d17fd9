"""Photon statistics of bi-pair coherent states.

Distributions are read off the lattice amplitudes; the closed forms below
hold for q1 = q2 = 0, n = 0 (coupled charge q = 1), where row k of the
coupled basis is uniform, 1/sqrt(k+1), over n1 + n2 = k.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .specfun import bessel_i, log_factorial as lf

__all__ = [
    "PhotonDistribution",
    "DomainError",
    "marginal_n1",
    "marginal",
    "joint_pk",
    "moments",
    "mandel_q",
    "mandel_q_numeric",
    "mandel_q_closed",
    "mean_n1_closed",
    "mean_k_closed",
    "p_n1_closed",
    "p_k_closed",
    "fano",
    "poisson_reference",
    "q_zero_crossing",
    "q_discrepancy_report",
    "QDiscrepancyReport",
]


class DomainError(ValueError):
    """Quantity undefined for this input (e.g. zero mean)."""


@dataclass(frozen=True, eq=False)
class PhotonDistribution:
    probabilities: np.ndarray
    label: str
    offset: int = 0  # photon number of probabilities[0]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -1e-15):
            raise ValueError("negative probability")
        object.__setattr__(self, "probabilities", p)

    @property
    def counts(self):
        return np.arange(len(self.probabilities)) + self.offset

    def total(self):
        return math.fsum(self.probabilities)

    def __len__(self):
        return len(self.probabilities)


def marginal_n1(state):
    """P[n1] = sum_{n2} |amp(n1, n2)|^2 (index n1, not counting the q1 offset)."""
    a = np.abs(state.amp) ** 2
    return PhotonDistribution(a.sum(axis=1), "n1")


def marginal(state, mode="a"):
    """Photon-count distribution of one mode.

    Modes a, b carry n1 + q1 and n1 photons; c, d carry n2 + q2 and n2.
    """
    lat = state.lattice
    p = np.abs(state.amp) ** 2
    if mode in ("a", "b"):
        probs, off = p.sum(axis=1), lat.q1 if mode == "a" else 0
    elif mode in ("c", "d"):
        probs, off = p.sum(axis=0), lat.q2 if mode == "c" else 0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return PhotonDistribution(probs, mode, off)


def joint_pk(state):
    """P[k] summed over the anti-diagonals n1 + n2 = n + k."""
    p = np.abs(state.amp) ** 2
    levels = state.lattice.levels()
    n = getattr(state, "n", 0)
    top = levels.max()
    probs = np.bincount(levels.ravel(), weights=p.ravel(), minlength=top + 1)
    return PhotonDistribution(probs[n:], "k")


def moments(dist):
    """(mean, second moment) of the photon count."""
    p = dist.probabilities
    c = dist.counts.astype(float)
    tot = math.fsum(p)
    return math.fsum(c * p) / tot, math.fsum(c * c * p) / tot


def mandel_q(dist):
    """(<n^2> - <n>^2 - <n>) / <n>; raises DomainError at zero mean."""
    m1, m2 = moments(dist)
    if m1 <= 0:
        raise DomainError("Mandel Q undefined for zero mean")
    return (m2 - m1 * m1 - m1) / m1


def mandel_q_numeric(state, mode="a"):
    return mandel_q(marginal(state, mode))


def fano(dist):
    """variance / mean."""
    m1, m2 = moments(dist)
    if m1 <= 0:
        raise DomainError("Fano factor undefined for zero mean")
    return (m2 - m1 * m1) / m1


def poisson_reference(mean, kmax):
    """Poisson probabilities e^-mu mu^k / k! on 0..kmax, renormalized."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    k = np.arange(kmax + 1)
    if mean == 0:
        p = (k == 0).astype(float)
    else:
        p = np.exp(k * math.log(mean) - mean - np.array([lf(j) for j in k]))
    return PhotonDistribution(p / p.sum(), "poisson")


# --- closed forms, q1 = q2 = 0, n = 0 --------------------------------------

def _i(nu, x):
    return bessel_i(nu, x).real


def mean_n1_closed(zeta_abs):
    """<n1> = |zeta| I_2(2|zeta|) / (2 I_1(2|zeta|))."""
    if zeta_abs == 0:
        return 0.0
    x = 2 * zeta_abs
    return zeta_abs * _i(2, x) / (2 * _i(1, x))


def mean_k_closed(zeta_abs):
    """<k> = |zeta| I_2(2|zeta|) / I_1(2|zeta|)."""
    return 2 * mean_n1_closed(zeta_abs)


def mandel_q_closed(zeta_abs):
    """2|zeta| I_3 / (3 I_2) - |zeta| I_2 / (2 I_1), Bessel arguments 2|zeta|."""
    if zeta_abs <= 0:
        raise DomainError("Mandel Q undefined at zeta = 0")
    x = 2 * zeta_abs
    i1, i2, i3 = _i(1, x), _i(2, x), _i(3, x)
    return 2 * zeta_abs * i3 / (3 * i2) - zeta_abs * i2 / (2 * i1)


def _n1_sq(zeta_abs):
    # N_1^2 = |zeta| / I_1(2|zeta|)
    return 1.0 if zeta_abs == 0 else zeta_abs / _i(1, 2 * zeta_abs)


def p_n1_closed(zeta_abs, n1max, n2terms=400):
    """P[n1] = N_1^2 |zeta|^2n1 sum_{n2} |zeta|^2n2 / ((n1+n2+1)!)^2."""
    out = np.zeros(n1max + 1)
    n1sq = _n1_sq(zeta_abs)
    for n1 in range(n1max + 1):
        terms = []
        for n2 in range(n2terms):
            k = n1 + n2
            if zeta_abs == 0:
                terms.append(1.0 if k == 0 else 0.0)
                break
            terms.append(math.exp(2 * k * math.log(zeta_abs) - 2 * lf(k + 1)))
            if n2 > 2 * zeta_abs and terms[-1] < 1e-30 * terms[0]:
                break
        out[n1] = n1sq * math.fsum(terms)
    return out


def p_k_closed(zeta_abs, kmax):
    """P[k] = N_1^2 |zeta|^2k / (k! (k+1)!)."""
    out = np.zeros(kmax + 1)
    n1sq = _n1_sq(zeta_abs)
    for k in range(kmax + 1):
        if zeta_abs == 0:
            out[k] = 1.0 if k == 0 else 0.0
        else:
            out[k] = n1sq * math.exp(2 * k * math.log(zeta_abs) - lf(k) - lf(k + 1))
    return out


def q_zero_crossing(lo=0.5, hi=3.0):
    """|zeta| where the closed-form Q changes sign (q1 = q2 = 0, n = 0)."""
    return brentq(mandel_q_closed, lo, hi, xtol=1e-14)


@dataclass
class QDiscrepancyReport:
    zeta_abs: np.ndarray
    q_closed: np.ndarray
    q_numeric: np.ndarray

    @property
    def max_abs_diff(self):
        return float(np.max(np.abs(self.q_closed - self.q_numeric)))

    def lines(self):
        out = ["zeta_abs,q_numeric,q_closed,abs_diff"]
        for z, a, b in zip(self.zeta_abs, self.q_numeric, self.q_closed):
            out.append(f"{z!r},{a!r},{b!r},{abs(a - b)!r}")
        out.append(f"# max_abs_diff={self.max_abs_diff!r}")
        return out


def q_discrepancy_report(zeta_min=0.1, zeta_max=3.0, steps=30, tail_tol=1e-14):
    """Closed-form Q next to the moment-based Q of the built state."""
    from .states import make_bipair_coupled

    grid = np.linspace(zeta_min, zeta_max, steps)
    num = np.array([mandel_q_numeric(make_bipair_coupled(z, 0, 0, 0, tail_tol=tail_tol, cg="formula"))
                    for z in grid])
    closed = np.array([mandel_q_closed(z) for z in grid])
    return QDiscrepancyReport(grid, closed, num)
