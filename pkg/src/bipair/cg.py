"""Clebsch-Gordan coefficients for D^{q1} x D^{q2} of SU(1,1).

The coupled representation with coupling index n has charge
q = q1 + q2 + 2n + 1. Its k-th state lives on the lattice anti-diagonal
n1 + n2 = n + k:

    |q; k> = sum_{n1} C[k][n1] |n1+q1, n1>|n2+q2, n2>,   n2 = n + k - n1.

Two routes are provided: a closed form evaluated in log-factorial space,
and a brute-force oracle that finds the lowest-weight vector as the kernel
of K- on the level-n subspace and raises it with K+.

Phase convention: at k = 0 the (n1, n2) = (n, 0) component is positive,
and row k is obtained from row k-1 by K+ with a positive factor.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    FourModeState,
    ProductLattice,
    apply_total_lowering,
    apply_total_raising,
    norm,
)
from .specfun import log_factorial as lf

__all__ = [
    "CGBlock",
    "BlockReport",
    "OracleError",
    "coupled_charge",
    "cg_coefficient",
    "cg_coefficient_as_printed",
    "cg_block",
    "lowest_weight_oracle",
    "oracle_blocks",
    "validate_block",
    "level_gram",
]

KERNEL_THRESHOLD = 1e-10


class OracleError(RuntimeError):
    """Kernel of K- has the wrong dimension (truncation or logic fault)."""


def coupled_charge(q1, q2, n):
    return q1 + q2 + 2 * n + 1


def _signed_logsum(terms):
    """Sum of ``sign * exp(logmag)`` pairs; returns (sign, log|sum|)."""
    if not terms:
        return 0, -math.inf
    top = max(lm for _, lm in terms)
    s = math.fsum(sg * math.exp(lm - top) for sg, lm in terms)
    if s == 0:
        return 0, -math.inf
    return (1 if s > 0 else -1), top + math.log(abs(s))


def _check_indices(q1, q2, n, k, n1):
    for v in (q1, q2, n, k, n1):
        if int(v) != v or v < 0:
            raise ValueError("CG indices must be nonnegative integers")
    n2 = n + k - n1
    if n2 < 0:
        raise ValueError(f"n1={n1} exceeds n+k={n + k}")
    return n2


def cg_coefficient(q1, q2, n, k, n1):
    """Coupling coefficient <n1, n2 | q; k> with n2 = n + k - n1.

        C = [n1! n2! (n1+q1)! (n2+q2)! k! / (k+q)!]^(1/2)
            * [(q1+q2+2n+1) n! (n+q1)! (n+q2)! (n+q1+q2)!]^(1/2)
            * sum_m (-1)^m / [m! (q2+m)! (n-m)! (n2-m)! (n1-n+m)! (n+q1-m)!]

    The sum runs over every m for which all factorial arguments are
    nonnegative; an empty range gives 0.
    """
    n2 = _check_indices(q1, q2, n, k, n1)
    q = coupled_charge(q1, q2, n)
    log_pre = 0.5 * (lf(n1) + lf(n2) + lf(n1 + q1) + lf(n2 + q2) + lf(k) - lf(k + q)
                     + math.log(q) + lf(n) + lf(n + q1) + lf(n + q2) + lf(n + q1 + q2))
    lo = max(0, n - n1)
    hi = min(n, n2, n + q1)
    terms = []
    for m in range(lo, hi + 1):
        logden = lf(m) + lf(q2 + m) + lf(n - m) + lf(n2 - m) + lf(n1 - n + m) + lf(n + q1 - m)
        terms.append(((-1) ** m, -logden))
    sign, logsum = _signed_logsum(terms)
    if sign == 0:
        return 0.0
    return sign * math.exp(log_pre + logsum)


def cg_coefficient_as_printed(q1, q2, n, k, n1):
    """The coefficient formula exactly as it is usually quoted for this coupling:

        [n1! n2! (n1+q1)! (n2+q2)! k! / (k+2n+q1+q2+1)!]^(1/2) ((n+q1)! (n+q2)!)^(1/2)
        * sum_m (-1)^m / [(q2+m)! (n-m)! (n2-m)! (n1-n-m)! (n+q1-m)!]

    Kept for the deviation report. At n = 0 it is :func:`cg_coefficient`
    divided by sqrt((q1+q2+1)!), so rows are not normalized unless
    q1 = q2 = 0; for n > 0 the m-sum itself differs.
    """
    n2 = _check_indices(q1, q2, n, k, n1)
    log_pre = 0.5 * (lf(n1) + lf(n2) + lf(n1 + q1) + lf(n2 + q2) + lf(k)
                     - lf(k + 2 * n + q1 + q2 + 1) + lf(n + q1) + lf(n + q2))
    hi = min(n, n2, n1 - n, n + q1)
    terms = []
    for m in range(0, hi + 1):
        logden = lf(q2 + m) + lf(n - m) + lf(n2 - m) + lf(n1 - n - m) + lf(n + q1 - m)
        terms.append(((-1) ** m, -logden))
    sign, logsum = _signed_logsum(terms)
    if sign == 0:
        return 0.0
    return sign * math.exp(log_pre + logsum)


@dataclass(frozen=True, eq=False)
class CGBlock:
    """table[k, n1] = C for row k; entries with n1 > n + k are zero."""

    q1: int
    q2: int
    n: int
    kmax: int
    table: np.ndarray
    source: str = "formula"

    @property
    def q(self):
        return coupled_charge(self.q1, self.q2, self.n)

    def row(self, k):
        return self.table[k, : self.n + k + 1]

    def row_state(self, k, lattice):
        """Row k embedded on a lattice (entries off the lattice are dropped)."""
        amp = np.zeros(lattice.shape, dtype=complex)
        for n1, c in enumerate(self.row(k)):
            n2 = self.n + k - n1
            if n1 <= lattice.N1 and n2 <= lattice.N2:
                amp[n1, n2] = c
        return FourModeState(lattice, amp)


def cg_block(q1, q2, n, kmax, coefficient=cg_coefficient):
    table = np.zeros((kmax + 1, n + kmax + 1))
    for k in range(kmax + 1):
        for n1 in range(n + k + 1):
            table[k, n1] = coefficient(q1, q2, n, k, n1)
    return CGBlock(q1, q2, n, kmax, table, source=getattr(coefficient, "__name__", "formula"))


def _level_sites(level):
    return [(n1, level - n1) for n1 in range(level + 1)]


def _restricted_lowering(lattice, level):
    """Matrix of K- from the level subspace to level-1, built from the lattice operator."""
    cols = []
    for n1, n2 in _level_sites(level):
        amp = np.zeros(lattice.shape, dtype=complex)
        amp[n1, n2] = 1
        out = apply_total_lowering(FourModeState(lattice, amp)).amp
        cols.append([out[a, b] for a, b in _level_sites(level - 1)])
    return np.array(cols, dtype=complex).T.reshape(level, level + 1)


def _read_level(state, level):
    return np.array([state.amp[a, b] for a, b in _level_sites(level)])


def oracle_blocks(q1, q2, nmax, kmax, lattice=None):
    """Lowest-weight construction for every coupling index 0..nmax.

    Returns a list of CGBlock with kmax rows each. Lattice cutoffs must be
    at least nmax + kmax + 1.
    """
    need = nmax + kmax + 1
    if lattice is None:
        lattice = ProductLattice(q1, q2, need, need)
    if (lattice.q1, lattice.q2) != (q1, q2):
        raise ValueError("lattice charges do not match")
    if min(lattice.N1, lattice.N2) < need:
        raise ValueError(f"lattice cutoffs must be >= {need}")

    rows = []  # rows[n'] = list of normalized FourModeStates, one per k
    for n in range(nmax + 1):
        if n == 0:
            kernel = np.ones((1, 1), dtype=complex)
        else:
            m = _restricted_lowering(lattice, n)
            _, s, vh = np.linalg.svd(m)
            scale = max(s.max(), 1.0)
            nz = int(np.sum(s > KERNEL_THRESHOLD * scale))
            kernel = vh[nz:].conj().T
        # Gram-Schmidt against rows of earlier blocks at this level
        prev = np.array([_read_level(rows[p][n - p], n) for p in range(n)]).reshape(n, n + 1)
        vecs = []
        for j in range(kernel.shape[1]):
            v = kernel[:, j] - prev.T @ (prev.conj() @ kernel[:, j])
            for u in vecs:
                v = v - u * np.vdot(u, v)
            nv = np.linalg.norm(v)
            if nv > KERNEL_THRESHOLD:
                vecs.append(v / nv)
        if len(vecs) != 1:
            raise OracleError(f"kernel of K- at level {n} has dimension {len(vecs)}, expected 1")
        v = vecs[0]
        lead = v[n]  # site (n, 0)
        v = v * (abs(lead) / lead)
        amp = np.zeros(lattice.shape, dtype=complex)
        for (a, b), c in zip(_level_sites(n), v):
            amp[a, b] = c
        state = FourModeState(lattice, amp)
        block_rows = [state]
        kneed = kmax + (nmax - n)  # earlier blocks feed Gram-Schmidt at higher levels
        for _ in range(kneed):
            state = apply_total_raising(state)
            state = state * (1.0 / norm(state))
            block_rows.append(state)
        rows.append(block_rows)

    blocks = []
    for n in range(nmax + 1):
        table = np.zeros((kmax + 1, n + kmax + 1))
        for k in range(kmax + 1):
            vals = _read_level(rows[n][k], n + k)
            table[k, : n + k + 1] = vals.real
        blocks.append(CGBlock(q1, q2, n, kmax, table, source="oracle"))
    return blocks


def lowest_weight_oracle(q1, q2, n, kmax, lattice=None):
    """Brute-force CG block for coupling index n (see :func:`oracle_blocks`)."""
    return oracle_blocks(q1, q2, n, kmax, lattice)[n]


@dataclass
class BlockReport:
    q1: int
    q2: int
    n: int
    kmax: int
    sign: int
    max_deviation: float
    tol: float = 1e-9

    @property
    def passed(self):
        return self.max_deviation <= self.tol


def validate_block(formula, oracle, tol=1e-9):
    """Compare two blocks up to one global sign."""
    key = (formula.q1, formula.q2, formula.n, formula.kmax)
    if key != (oracle.q1, oracle.q2, oracle.n, oracle.kmax):
        raise ValueError(f"block mismatch: {key} vs {(oracle.q1, oracle.q2, oracle.n, oracle.kmax)}")
    dev = {s: float(np.max(np.abs(s * formula.table - oracle.table))) for s in (1, -1)}
    sign = min(dev, key=dev.get)
    return BlockReport(*key, sign=sign, max_deviation=dev[sign], tol=tol)


def level_gram(blocks, level):
    """Gram matrix of the rows of ``blocks`` (indexed by n) at n1 + n2 = level."""
    vecs = []
    for b in blocks:
        k = level - b.n
        if 0 <= k <= b.kmax:
            vecs.append(b.row(k))
    v = np.array(vecs)
    return v @ v.T
