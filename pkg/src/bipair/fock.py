"""Truncated charge-sector bases and the SU(1,1) generators acting on them.

A sector of charge q holds the two-mode states |n+q, n>, 0 <= n <= N. In
the two-boson realization K+ = a^dag b^dag, K- = ab, Kz = (a^dag a +
b^dag b + 1)/2 these act as

    K-|n> = sqrt(n (n+q)) |n-1>
    K+|n> = sqrt((n+1)(n+1+q)) |n+1>
    Kz|n> = (n + (q+1)/2) |n>

Four-mode states live on a product lattice of two such sectors, indexed by
(n1, n2). Operators are applied matrix-free as index shifts. Raising out of
the lattice discards amplitude, so algebraic identities only hold for
vectors supported away from the outer edge.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SectorBasis",
    "PairAmplitudes",
    "ProductLattice",
    "FourModeState",
    "LatticeMismatch",
    "apply_pair_lowering",
    "apply_pair_raising",
    "apply_pair_kz",
    "apply_pair_casimir",
    "apply_total_lowering",
    "apply_total_raising",
    "apply_total_kz",
    "apply_casimir",
    "inner",
    "norm",
    "basis_state",
    "lowering_matrix",
]


class LatticeMismatch(ValueError):
    pass


def _check_nonneg_int(name, v):
    if int(v) != v or v < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
    return int(v)


@dataclass(frozen=True)
class SectorBasis:
    q: int
    cutoff: int

    def __post_init__(self):
        object.__setattr__(self, "q", _check_nonneg_int("q", self.q))
        object.__setattr__(self, "cutoff", _check_nonneg_int("cutoff", self.cutoff))

    @property
    def dim(self):
        return self.cutoff + 1

    def lowering_weights(self):
        """sqrt(n (n+q)) for n = 1..N, the K- matrix elements."""
        n = np.arange(1, self.cutoff + 1)
        return np.sqrt(n * (n + self.q))

    def kz_diagonal(self):
        return np.arange(self.dim) + (self.q + 1) / 2


@dataclass(frozen=True, eq=False)
class PairAmplitudes:
    """coeffs[n] multiplies |n+q, n>."""

    basis: SectorBasis
    coeffs: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} coefficients, got shape {c.shape}")
        if self.normalized and abs(np.vdot(c, c).real - 1) > 1e-12:
            raise ValueError("coefficients flagged normalized but norm is not 1")
        object.__setattr__(self, "coeffs", c)

    def _new(self, coeffs):
        return PairAmplitudes(self.basis, coeffs)


@dataclass(frozen=True)
class ProductLattice:
    """Sites (n1, n2) standing for |n1+q1, n1>|n2+q2, n2>."""

    q1: int
    q2: int
    N1: int
    N2: int

    def __post_init__(self):
        for name in ("q1", "q2", "N1", "N2"):
            object.__setattr__(self, name, _check_nonneg_int(name, getattr(self, name)))

    @property
    def shape(self):
        return (self.N1 + 1, self.N2 + 1)

    @property
    def dim(self):
        return (self.N1 + 1) * (self.N2 + 1)

    @property
    def first(self):
        return SectorBasis(self.q1, self.N1)

    @property
    def second(self):
        return SectorBasis(self.q2, self.N2)

    def levels(self):
        """Array of n1 + n2 over the lattice."""
        n1, n2 = np.indices(self.shape)
        return n1 + n2

    def kz_diagonal(self):
        return self.levels() + (self.q1 + self.q2 + 2) / 2


@dataclass(frozen=True, eq=False)
class FourModeState:
    lattice: ProductLattice
    amp: np.ndarray
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.shape != self.lattice.shape:
            raise ValueError(f"amplitude shape {a.shape} != lattice shape {self.lattice.shape}")
        if self.normalized and abs(np.vdot(a, a).real - 1) > 1e-12:
            raise ValueError("amplitudes flagged normalized but norm is not 1")
        object.__setattr__(self, "amp", a)

    def _new(self, amp):
        return FourModeState(self.lattice, amp)

    def __add__(self, other):
        _same_lattice(self, other)
        return self._new(self.amp + other.amp)

    def __sub__(self, other):
        _same_lattice(self, other)
        return self._new(self.amp - other.amp)

    def __mul__(self, c):
        return self._new(c * self.amp)

    __rmul__ = __mul__

    def normalize(self):
        return FourModeState(self.lattice, self.amp / norm(self), normalized=True,
                             meta=dict(self.meta))


def _same_lattice(u, v):
    if u.lattice != v.lattice:
        raise LatticeMismatch(f"{u.lattice} vs {v.lattice}")


# --- single sector ---------------------------------------------------------

def _lower_axis(arr, w, axis):
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(None, -1)
    shape = [1] * arr.ndim
    shape[axis] = -1
    out[tuple(dst)] = w.reshape(shape) * arr[tuple(src)]
    return out


def _raise_axis(arr, w, axis):
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(None, -1)
    dst[axis] = slice(1, None)
    shape = [1] * arr.ndim
    shape[axis] = -1
    out[tuple(dst)] = w.reshape(shape) * arr[tuple(src)]
    return out


def apply_pair_lowering(state):
    w = state.basis.lowering_weights()
    return state._new(_lower_axis(state.coeffs, w, 0))


def apply_pair_raising(state):
    w = state.basis.lowering_weights()
    return state._new(_raise_axis(state.coeffs, w, 0))


def apply_pair_kz(state):
    return state._new(state.basis.kz_diagonal() * state.coeffs)


def apply_pair_casimir(state):
    """(K+K- + K-K+)/2 - Kz^2 within one sector; eigenvalue (1-q^2)/4 away from the edge."""
    up_down = apply_pair_raising(apply_pair_lowering(state))
    down_up = apply_pair_lowering(apply_pair_raising(state))
    kz2 = apply_pair_kz(apply_pair_kz(state))
    return state._new(0.5 * (up_down.coeffs + down_up.coeffs) - kz2.coeffs)


# --- product lattice -------------------------------------------------------

def apply_total_lowering(state):
    """K- = ab + cd."""
    lat = state.lattice
    a = state.amp
    out = _lower_axis(a, lat.first.lowering_weights(), 0)
    out += _lower_axis(a, lat.second.lowering_weights(), 1)
    return state._new(out)


def apply_total_raising(state):
    """K+ = a^dag b^dag + c^dag d^dag."""
    lat = state.lattice
    a = state.amp
    out = _raise_axis(a, lat.first.lowering_weights(), 0)
    out += _raise_axis(a, lat.second.lowering_weights(), 1)
    return state._new(out)


def apply_total_kz(state):
    return state._new(state.lattice.kz_diagonal() * state.amp)


def apply_casimir(state):
    """C = (K+K- + K-K+)/2 - Kz^2 built from the truncated generators.

    Exact for amplitudes with n1 < N1 and n2 < N2 (one raising step must
    stay on the lattice).
    """
    up_down = apply_total_raising(apply_total_lowering(state))
    down_up = apply_total_lowering(apply_total_raising(state))
    kz2 = apply_total_kz(apply_total_kz(state))
    return state._new(0.5 * (up_down.amp + down_up.amp) - kz2.amp)


def inner(u, v):
    """<u|v>, conjugate-linear in u."""
    _same_lattice(u, v)
    return complex(np.vdot(u.amp, v.amp))


def norm(v):
    return float(np.sqrt(np.vdot(v.amp, v.amp).real))


def basis_state(lattice, n1, n2):
    amp = np.zeros(lattice.shape, dtype=complex)
    amp[n1, n2] = 1.0
    return FourModeState(lattice, amp, normalized=True)


def lowering_matrix(lattice):
    """Sparse CSR matrix of K- on the row-major flattened lattice."""
    s1, s2 = lattice.shape
    idx = np.arange(lattice.dim).reshape(lattice.shape)
    w1 = lattice.first.lowering_weights()
    w2 = lattice.second.lowering_weights()
    rows = [idx[:-1, :].ravel(), idx[:, :-1].ravel()]
    cols = [idx[1:, :].ravel(), idx[:, 1:].ravel()]
    vals = [np.repeat(w1, s2), np.tile(w2, s1)]
    return sp.csr_matrix(
        (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lattice.dim, lattice.dim),
    )
