"""Pair coherent states and bi-pair coherent states of SU(1,1) x SU(1,1).

A pair coherent state of charge q is the K- eigenstate

    |zeta, q> = N_q sum_n zeta^n / sqrt(n! (n+q)!) |n+q, n>,
    N_q = [|zeta|^-q I_q(2|zeta|)]^(-1/2).

A bi-pair coherent state is the eigenstate of K- = ab + cd inside the
coupled representation D^q, q = q1 + q2 + 2n + 1, of D^{q1} x D^{q2}.
It is built two ways: from the coupled rows (CG coefficients) and from a
direct closed-form double sum over the product number basis. Both are
normalized numerically after assembly.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import cg as _cg
from .fock import (
    FourModeState,
    PairAmplitudes,
    ProductLattice,
    SectorBasis,
    apply_casimir,
    apply_pair_lowering,
    apply_total_lowering,
    norm,
)
from .specfun import bessel_i, bessel_i_scaled, bessel_k, log_factorial as lf

__all__ = [
    "PairCoherentState",
    "BiPairCoherentState",
    "FiniteDifferenceError",
    "QuadratureError",
    "tail_cutoff",
    "pair_norm_squared",
    "make_pair_coherent",
    "pair_eigen_residual",
    "make_bipair_coupled",
    "make_bipair_direct",
    "eigen_residual",
    "casimir_residual",
    "overlap_f",
    "lattice_overlap",
    "pde_residual",
    "completeness_diagonal",
    "completeness_element",
]


class FiniteDifferenceError(RuntimeError):
    """Finite-difference step dominated by cancellation or truncation."""


class QuadratureError(RuntimeError):
    pass


def _log_terms(zeta_abs, q, count):
    """ln(|zeta|^(2n) / (n! (n+q)!)) for n < count."""
    n = np.arange(count)
    lfac = np.array([lf(k) for k in range(count + q)])
    with np.errstate(divide="ignore"):
        lz = 2 * n * math.log(zeta_abs) if zeta_abs > 0 else np.where(n == 0, 0.0, -np.inf)
    return lz - lfac[n] - lfac[n + q]


def tail_cutoff(zeta_abs, q, tol=1e-12):
    """Smallest N with sum_{n>N} t_n < tol * sum_{n<=N} t_n, t_n = |zeta|^2n / (n!(n+q)!).

    Terms are summed directly until the term ratio drops below 1/2 and the
    remaining terms are negligible; what is left beyond is covered by a
    geometric bound.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    zeta_abs = float(zeta_abs)
    if zeta_abs == 0:
        return 0
    x = zeta_abs ** 2
    count = 16
    while True:
        logt = _log_terms(zeta_abs, q, count)
        last = count - 1
        ratio = x / ((last + 1) * (last + 1 + q))
        t = np.exp(logt - logt.max())
        if ratio < 0.5 and t[last] < tol * 1e-6 * t.sum():
            break
        count *= 2
    remainder = t[last] * ratio / (1 - ratio)
    # tails[N] = sum_{n > N} t_n
    tails = np.concatenate([np.cumsum(t[::-1])[::-1][1:], [0.0]]) + remainder
    bodies = np.cumsum(t)
    ok = np.nonzero(tails < tol * bodies)[0]
    return int(ok[0])


def pair_norm_squared(zeta_abs, q):
    """|zeta|^-q I_q(2|zeta|) = sum_n |zeta|^2n / (n!(n+q)!)."""
    if zeta_abs == 0:
        return math.exp(-lf(q))
    return bessel_i(q, 2 * zeta_abs).real * zeta_abs ** (-q)


def _coherent_coeffs(zeta, q, count):
    """zeta^k / sqrt(k! (k+q)!) for k < count."""
    zeta = complex(zeta)
    out = np.zeros(count, dtype=complex)
    if zeta == 0:
        out[0] = math.exp(-0.5 * lf(q))
        return out
    lz = np.log(zeta)
    for k in range(count):
        out[k] = np.exp(k * lz - 0.5 * (lf(k) + lf(k + q)))
    return out


@dataclass(frozen=True, eq=False)
class PairCoherentState:
    zeta: complex
    q: int
    amplitudes: PairAmplitudes
    normalization: str
    tail_tol: float = None

    @property
    def coeffs(self):
        return self.amplitudes.coeffs


def make_pair_coherent(zeta, q, cutoff=None, normalization="normalized", tail_tol=1e-12):
    """Pair coherent state on |n+q, n>, n <= cutoff.

    ``normalization="normalized"`` applies the analytic N_q; the
    ``"unnormalized"`` variant keeps the bare coefficients zeta^n/sqrt(n!(n+q)!).
    If ``cutoff`` is None it comes from :func:`tail_cutoff`.
    """
    if normalization not in ("normalized", "unnormalized"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if cutoff is None:
        cutoff = tail_cutoff(abs(zeta), q, tail_tol)
    coeffs = _coherent_coeffs(zeta, q, cutoff + 1)
    if normalization == "normalized":
        coeffs = coeffs / math.sqrt(pair_norm_squared(abs(zeta), q))
    amps = PairAmplitudes(SectorBasis(q, cutoff), coeffs)
    return PairCoherentState(complex(zeta), q, amps, normalization, tail_tol)


def pair_eigen_residual(state, include_edge=False):
    """||K- psi - zeta psi|| / ||psi|| for a pair coherent state.

    By default the top retained level is treated as padding: the
    comparison runs over levels below it, where the truncated K- is exact.
    With ``include_edge=True`` the truncation error at the top level is
    included as well (it scales like sqrt(tail_tol)).
    """
    c = state.coeffs
    diff = apply_pair_lowering(state.amplitudes).coeffs - state.zeta * c
    if not include_edge:
        diff = diff[:-1]
    return float(np.linalg.norm(diff) / np.linalg.norm(c))


@dataclass(frozen=True, eq=False)
class BiPairCoherentState:
    zeta: complex
    q1: int
    q2: int
    n: int
    kmax: int
    state: FourModeState
    construction: str
    tail_tol: float = None
    raw_norm: float = None
    meta: dict = field(default_factory=dict)

    @property
    def q(self):
        return _cg.coupled_charge(self.q1, self.q2, self.n)

    @property
    def lattice(self):
        return self.state.lattice

    @property
    def amp(self):
        return self.state.amp

    def analytic_norm(self):
        """[|zeta|^-q I_q(2|zeta|)]^(1/2), the norm of the bare coupled series."""
        return math.sqrt(pair_norm_squared(abs(self.zeta), self.q))


def _bipair_lattice(q1, q2, n, kmax):
    # one spare shell so that the Casimir and K+ act exactly on the support
    cut = n + kmax + 1
    return ProductLattice(q1, q2, cut, cut)


def _finish(amp, lattice, zeta, q1, q2, n, kmax, construction, tail_tol):
    raw = float(np.sqrt(np.vdot(amp, amp).real))
    lead = amp[n, 0]
    phase = abs(lead) / lead if lead != 0 else 1.0
    st = FourModeState(lattice, amp * (phase / raw), normalized=True)
    return BiPairCoherentState(complex(zeta), q1, q2, n, kmax, st, construction,
                               tail_tol, raw)


def _resolve_kmax(zeta, q1, q2, n, kmax, tail_tol):
    if kmax is None:
        kmax = tail_cutoff(abs(zeta), _cg.coupled_charge(q1, q2, n), tail_tol)
    return int(kmax)


def make_bipair_coupled(zeta, q1, q2, n, kmax=None, tail_tol=1e-12, cg="oracle", block=None):
    """Bi-pair coherent state assembled from coupled rows:

        psi = sum_k zeta^k / sqrt(k! (k+q)!) |q; k>

    ``cg`` selects the row source: ``"oracle"`` (lowest-weight
    construction) or ``"formula"`` (closed-form coefficients). A prebuilt
    ``block`` with at least kmax rows overrides both.
    """
    kmax = _resolve_kmax(zeta, q1, q2, n, kmax, tail_tol)
    if block is None:
        if cg == "oracle":
            block = _cg.lowest_weight_oracle(q1, q2, n, kmax)
        elif cg == "formula":
            block = _cg.cg_block(q1, q2, n, kmax)
        else:
            raise ValueError(f"unknown cg source {cg!r}")
    if block.kmax < kmax or (block.q1, block.q2, block.n) != (q1, q2, n):
        raise ValueError("CG block does not cover the requested state")
    q = _cg.coupled_charge(q1, q2, n)
    lattice = _bipair_lattice(q1, q2, n, kmax)
    weights = _coherent_coeffs(zeta, q, kmax + 1)
    amp = np.zeros(lattice.shape, dtype=complex)
    for k in range(kmax + 1):
        row = block.row(k)
        n1 = np.arange(n + k + 1)
        amp[n1, n + k - n1] += weights[k] * row
    return _finish(amp, lattice, zeta, q1, q2, n, kmax, f"coupled:{block.source}", tail_tol)


def _direct_sum(q1, q2, n, n1, n2, as_printed):
    # alternating l-sum of the direct expansion, log-space with exact rounding
    terms = []
    if as_printed:
        lo, hi = 0, min(n, n2, n1 - n, n + q1)
    else:
        lo, hi = max(0, n - n1), min(n, n2, n + q1)
    for l in range(lo, hi + 1):
        mid = n1 - n - l if as_printed else n1 - n + l
        logden = lf(l) + lf(q2 + l) + lf(n - l) + lf(n2 - l) + lf(mid) + lf(n + q1 - l)
        terms.append(((-1) ** l, -logden))
    return _cg._signed_logsum(terms)


def make_bipair_direct(zeta, q1, q2, n, kmax=None, tail_tol=1e-12, as_printed=False):
    """Bi-pair coherent state from the closed-form number-basis expansion

        psi(n1, n2) ~ zeta^k / (k+q)! * [n1! n2! (n1+q1)! (n2+q2)!]^(1/2)
                      * sum_l (-1)^l / [l! (q2+l)! (n-l)! (n2-l)! (n1-n+l)! (n+q1-l)!]

    with k = n1 + n2 - n. ``as_printed=True`` swaps (n1-n+l)! for the
    (n1-n-l)! that appears in the usual printed form, for comparison only.
    """
    kmax = _resolve_kmax(zeta, q1, q2, n, kmax, tail_tol)
    q = _cg.coupled_charge(q1, q2, n)
    lattice = _bipair_lattice(q1, q2, n, kmax)
    zeta = complex(zeta)
    lz = np.log(zeta) if zeta != 0 else None
    amp = np.zeros(lattice.shape, dtype=complex)
    for k in range(kmax + 1):
        if zeta == 0 and k > 0:
            break
        zk = np.exp(k * lz) if k else 1.0
        for n1 in range(n + k + 1):
            n2 = n + k - n1
            sign, logsum = _direct_sum(q1, q2, n, n1, n2, as_printed)
            if sign == 0:
                continue
            logmag = (0.5 * (lf(n1) + lf(n2) + lf(n1 + q1) + lf(n2 + q2))
                      - lf(k + q) + logsum)
            amp[n1, n2] = sign * zk * math.exp(logmag)
    label = "direct:as_printed" if as_printed else "direct"
    return _finish(amp, lattice, zeta, q1, q2, n, kmax, label, tail_tol)


def _below_top(state):
    return state.lattice.levels() < state.n + state.kmax


def eigen_residual(psi, include_edge=False):
    """||K- psi - zeta psi|| / ||psi|| for a bi-pair state.

    As for :func:`pair_eigen_residual`, the top retained level n + kmax is
    padding unless ``include_edge`` is set.
    """
    st = psi.state
    diff = apply_total_lowering(st).amp - psi.zeta * st.amp
    if not include_edge:
        diff = np.where(_below_top(psi), diff, 0)
    return float(np.linalg.norm(diff) / norm(st))


def casimir_residual(psi):
    """||C psi - (1-q^2)/4 psi|| / ||psi||."""
    st = psi.state
    lam = (1 - psi.q ** 2) / 4
    diff = apply_casimir(st).amp - lam * st.amp
    return float(np.linalg.norm(diff) / norm(st))


# --- analytic representation ------------------------------------------------

def _lowest_weight_poly(a, b, q1, q2, n):
    """(a+b)^n P_n^(q2,q1)((a-b)/(a+b)) expanded as a homogeneous polynomial."""
    return sum(math.comb(n + q2, n - j) * math.comb(n + q1, j) * (-b) ** j * a ** (n - j)
               for j in range(n + 1))


def overlap_f(zeta1_conj, zeta2_conj, zeta, q1, q2, n):
    """Overlap <<zeta1, q1| <<zeta2, q2| zeta, q>> up to a constant factor.

        f = 2^q g_q(4 zeta s) * s^n P_n^(q2,q1)((zeta1* - zeta2*)/s),   s = zeta1* + zeta2*

    with g_q(w) = w^(-q/2) I_q(sqrt(w)), so f is entire in all arguments.
    """
    a, b = complex(zeta1_conj), complex(zeta2_conj)
    q = _cg.coupled_charge(q1, q2, n)
    s = a + b
    return (2.0 ** q) * bessel_i_scaled(q, 4 * complex(zeta) * s) * _lowest_weight_poly(a, b, q1, q2, n)


def lattice_overlap(psi, zeta1_conj, zeta2_conj):
    """<<zeta1, q1| <<zeta2, q2| psi> summed over the lattice amplitudes."""
    lat = psi.lattice if isinstance(psi, BiPairCoherentState) else psi.lattice
    amp = psi.amp
    c1 = _coherent_coeffs(zeta1_conj, lat.q1, lat.N1 + 1) if zeta1_conj != 0 else _unit(lat.q1, lat.N1)
    c2 = _coherent_coeffs(zeta2_conj, lat.q2, lat.N2 + 1) if zeta2_conj != 0 else _unit(lat.q2, lat.N2)
    return complex(c1 @ amp @ c2)


def _unit(q, N):
    out = np.zeros(N + 1, dtype=complex)
    out[0] = math.exp(-0.5 * lf(q))
    return out


def _derivatives(f, a, b, h):
    f0 = f(a, b)
    fa_p, fa_m = f(a + h, b), f(a - h, b)
    fb_p, fb_m = f(a, b + h), f(a, b - h)
    d1 = (fa_p - fa_m) / (2 * h)
    d2 = (fb_p - fb_m) / (2 * h)
    d11 = (fa_p - 2 * f0 + fa_m) / h ** 2
    d22 = (fb_p - 2 * f0 + fb_m) / h ** 2
    d12 = (f(a + h, b + h) - f(a + h, b - h) - f(a - h, b + h) + f(a - h, b - h)) / (4 * h * h)
    return f0, d1, d2, d11, d22, d12


def _pde_terms(equation, zeta, q1, q2, n, a, b, h):
    f = lambda x, y: overlap_f(x, y, zeta, q1, q2, n)  # noqa: E731
    f0, d1, d2, d11, d22, d12 = _derivatives(f, a, b, h)
    if equation == "lowering":
        return [(q1 + 1) * d1, a * d11, (q2 + 1) * d2, b * d22, -zeta * f0]
    if equation == "casimir":
        q = _cg.coupled_charge(q1, q2, n)
        lam = (q ** 2 - (q1 + q2 + 1) ** 2) / 4
        return [a * b * d11, -2 * a * b * d12, a * b * d22,
                (q1 + 1) * b * (d1 - d2), -(q2 + 1) * a * (d1 - d2), lam * f0]
    raise ValueError(f"unknown equation {equation!r}")


def _pde_max(equation, zeta, q1, q2, n, samples, h):
    worst = 0.0
    for a, b in samples:
        terms = _pde_terms(equation, zeta, q1, q2, n, a, b, h)
        scale = sum(abs(t) for t in terms)
        if scale == 0:
            continue
        worst = max(worst, abs(sum(terms)) / scale)
    return worst


def pde_residual(zeta, q1, q2, n, sample_points, h=1e-4, equation="lowering", check_step=True):
    """Max relative residual of one of the two differential equations
    satisfied by :func:`overlap_f`, using central differences of step h.

    ``equation="lowering"``:  sum_i [(q_i+1) d_i + z_i d_i^2] f = zeta f
    ``equation="casimir"``:   z1 z2 (d1 - d2)^2 f + [(q1+1) z2 - (q2+1) z1](d1 - d2) f
                              = -[q^2/4 - (q1+q2+1)^2/4] f

    Each residual is divided by the sum of magnitudes of its terms. With
    ``check_step`` the run at h/2 must show the expected ~4x drop;
    cancellation- or truncation-dominated steps raise FiniteDifferenceError.
    """
    if not 1e-5 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-5, 1e-3]")
    samples = [(complex(a), complex(b)) for a, b in sample_points]
    r_h = _pde_max(equation, zeta, q1, q2, n, samples, h)
    if check_step:
        r_half = _pde_max(equation, zeta, q1, q2, n, samples, h / 2)
        # both tiny: the differences are exact to rounding, nothing to judge
        if max(r_h, r_half) > 1e-12:
            predicted = 4 * r_half
            if predicted == 0 or not 0.1 <= r_h / predicted <= 10:
                raise FiniteDifferenceError(
                    f"step h={h:g}: residual {r_h:.3e} vs Richardson prediction {predicted:.3e}")
    return r_h


# --- resolution of the identity --------------------------------------------

def _radial_integrand(q, n, measure):
    logc = math.log(4.0) - lf(n) - lf(n + q)

    if measure == "normalized":
        def g(r):
            # (2/pi) I_q K_q * N_q^2 r^2n / (n!(n+q)!) * 2 pi r
            i_q = bessel_i(q, 2 * r).real
            nq2 = r ** q / i_q
            return math.exp(logc + (2 * n + 1) * math.log(r)) * i_q * bessel_k(q, 2 * r) * nq2
    elif measure == "unnormalized":
        def g(r):
            return math.exp(logc + (2 * n + q + 1) * math.log(r)) * bessel_k(q, 2 * r)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return g


def completeness_diagonal(q, n, measure="normalized", rtol=1e-10, return_error=False):
    """Diagonal element <n| int d^2zeta w(zeta) |zeta><zeta| |n> of the resolution
    of the identity on the charge-q sector; the exact value is 1.

    ``measure="normalized"`` uses the normalized states with weight
    (2/pi) I_q(2|zeta|) K_q(2|zeta|); ``"unnormalized"`` uses the bare states
    with weight (2/pi) |zeta|^q K_q(2|zeta|). The angular integral is done
    analytically and the radial one by adaptive Gauss-Kronrod quadrature,
    split at the integrand peak and cut where it drops below 1e-18 of it.
    """
    g = _radial_integrand(q, n, measure)
    # locate peak and cutoff on the log integrand r^(2n+q+1) K_q(2r) ~ r^(2n+q+1/2) e^(-2r)
    p = 2 * n + q + 0.5
    r_peak = max(p / 2, 0.05)
    logpk = p * math.log(r_peak) - 2 * r_peak
    r_end = r_peak + 1.0
    while p * math.log(r_end) - 2 * r_end > logpk + math.log(1e-18):
        r_end += 1.0
    pieces = [(0.0, r_peak), (r_peak, r_end)]
    total, err = 0.0, 0.0
    for lo, hi in pieces:
        val, e = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=rtol, limit=200)
        total += val
        err += e
    if err > 1e3 * rtol * abs(total):
        raise QuadratureError(f"quadrature error estimate {err:.2e} for q={q}, n={n}")
    return (total, err) if return_error else total


def completeness_element(q, n, m, measure="normalized"):
    """Matrix element <n| ... |m>. The angular integral of e^{i(n-m)theta}
    is taken with an equispaced rule that is exact for that trigonometric
    degree, so off-diagonal elements come out as rounding-level zeros and
    the radial integral is only needed on the diagonal."""
    n_theta = 2 * (abs(n - m) + 1)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    angular = complex(np.exp(1j * (n - m) * theta).mean())
    if n != m:
        return angular
    return angular * completeness_diagonal(q, n, measure)
