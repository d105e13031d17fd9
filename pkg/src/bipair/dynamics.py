"""Master equation for competing two-photon absorption and four-wave mixing.

    drho/dt = -K/2 (O^dag O rho - 2 O rho O^dag + rho O^dag O) - i [G (O^dag + O), rho]

with O = ab + cd on a fixed-charge product lattice. Writing C = O + 2iG/K
turns this into a pure dissipator in C, so states annihilated by C (K-
eigenstates with eigenvalue lambda = -2iG/K) are stationary.

Steady states are found either by integrating in time (RK4) or by
projecting rho0 onto the kernel of the Liouvillian with shifted inverse
iteration. The latter works in the frame rho -> W^dag rho W, W =
diag(i^(n1+n2)), where the Liouvillian is a real map commuting with
transposition; it is then solved separately on symmetric and
antisymmetric real matrices.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import states as _states
from .fock import FourModeState, LatticeMismatch, ProductLattice, lowering_matrix

__all__ = [
    "MasterEqParams",
    "DensityMatrix",
    "NonConvergence",
    "StepRejected",
    "EvolveResult",
    "SteadyStateResult",
    "liouvillian",
    "evolve",
    "steady_state",
    "dark_subspace",
    "dark_decomposition",
    "dark_condition_residual",
    "stability_scale",
]


class NonConvergence(RuntimeError):
    pass


class StepRejected(RuntimeError):
    """Trace drift per step above tolerance."""


@dataclass(frozen=True)
class MasterEqParams:
    kappa: float
    g: float
    q1: int = 0
    q2: int = 0
    N1: int = 12
    N2: int = 12

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def lattice(self):
        return ProductLattice(self.q1, self.q2, self.N1, self.N2)

    @property
    def eigenvalue(self):
        """lambda = -2iG/K, the K- eigenvalue selected by the steady state."""
        return -2j * self.g / self.kappa


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    lattice: ProductLattice
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.lattice.dim, self.lattice.dim):
            raise ValueError(f"entries must be {self.lattice.dim} x {self.lattice.dim}")
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_state(cls, state):
        v = state.amp.ravel()
        return cls(state.lattice, np.outer(v, v.conj()) / np.vdot(v, v).real)

    @classmethod
    def site(cls, lattice, n1=0, n2=0):
        e = np.zeros((lattice.dim, lattice.dim), dtype=complex)
        i = n1 * (lattice.N2 + 1) + n2
        e[i, i] = 1
        return cls(lattice, e)

    def trace(self):
        return complex(np.trace(self.entries))

    def purity(self):
        e = self.entries
        return float(np.vdot(e.conj().T, e).real)

    def hermiticity_error(self):
        e = self.entries
        return float(np.max(np.abs(e - e.conj().T)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2)[0])

    def expectation(self, state):
        v = state.amp.ravel()
        return float(np.vdot(v, self.entries @ v).real)

    def edge_population(self):
        """Population on sites with n1 = N1 or n2 = N2."""
        lat = self.lattice
        p = np.diag(self.entries).real.reshape(lat.shape)
        return float(p[-1, :].sum() + p[:-1, -1].sum())


@lru_cache(maxsize=16)
def _operators(params):
    O = lowering_matrix(params.lattice)
    Od = O.conj().T.tocsr()
    return O, Od, (Od @ O).tocsr(), (params.g * (O + Od)).tocsr()


def _entries(rho):
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def liouvillian(rho, params, form="standard"):
    """drho/dt as a complex matrix.

    ``form="standard"`` uses O and the four-wave-mixing Hamiltonian;
    ``form="shifted"`` uses the single jump operator C = O + 2iG/K,
    -K/2 (C^dag C rho + rho C^dag C - 2 C rho C^dag). The two agree exactly.
    A DensityMatrix input gives a DensityMatrix (not normalized) back; an
    array gives an array.
    """
    if isinstance(rho, DensityMatrix):
        if rho.lattice != params.lattice:
            raise LatticeMismatch(f"{rho.lattice} vs {params.lattice}")
        return DensityMatrix(rho.lattice, _liouvillian_array(rho.entries, params, form))
    return _liouvillian_array(np.asarray(rho, dtype=complex), params, form)


def _liouvillian_array(r, params, form):
    k = params.kappa
    O, Od, OdO, H = _operators(params)
    if form == "standard":
        diss = OdO @ r + (OdO.T @ r.T).T - 2 * (O @ ((O.conj() @ r.T).T))
        return -k / 2 * diss - 1j * (H @ r - (H.T @ r.T).T)
    if form == "shifted":
        C = (O + (2j * params.g / k) * sp.identity(O.shape[0], format="csr")).tocsr()
        CdC = (C.conj().T @ C).tocsr()
        diss = CdC @ r + (CdC.T @ r.T).T - 2 * (C @ ((C.conj() @ r.T).T))
        return -k / 2 * diss
    raise ValueError(f"unknown form {form!r}")


def stability_scale(params):
    """kappa (N1 + N2 + 2)^2, the step-size scale for explicit integration."""
    return params.kappa * (params.N1 + params.N2 + 2) ** 2


# --- compiled RK4 ----------------------------------------------------------
#
# Integration runs in the real frame, where the Liouvillian reads
#     L'(r) = -K/2 {O^T O, r} + K O r O^T + G [O - O^T, r]
# with real O. It maps symmetric to symmetric and antisymmetric to
# antisymmetric matrices, so each part is evolved separately and only its
# upper triangle is computed. ``sigma`` is +1 or -1 for the two parities.

@numba.njit(cache=True)
def _lindblad_real(r, out, A, w1, w2, N1, N2, kappa, g, sigma):
    s = N2 + 1
    d = r.shape[0]
    for a in range(d):
        i, j = a // s, a % s
        for b in range(d):
            acc = 0.0
            if i < N1:
                acc += w1[i] * r[a + s, b]
            if j < N2:
                acc += w2[j] * r[a + 1, b]
            A[a, b] = acc  # O r; r O^T is sigma * A^T
    for a in range(d):
        i, j = a // s, a % s
        for b in range(a, d):
            k, l = b // s, b % s
            otA = 0.0
            otr = 0.0
            if i >= 1:
                otA += w1[i - 1] * A[a - s, b]
                otr += w1[i - 1] * r[a - s, b]
            if j >= 1:
                otA += w2[j - 1] * A[a - 1, b]
                otr += w2[j - 1] * r[a - 1, b]
            bO = 0.0
            rO = 0.0
            if k >= 1:
                bO += w1[k - 1] * A[b - s, a]
                rO += w1[k - 1] * r[a, b - s]
            if l >= 1:
                bO += w2[l - 1] * A[b - 1, a]
                rO += w2[l - 1] * r[a, b - 1]
            oB = 0.0
            if i < N1:
                oB += w1[i] * A[b, a + s]
            if j < N2:
                oB += w2[j] * A[b, a + 1]
            v = (-0.5 * kappa * (otA + sigma * bO) + kappa * sigma * oB
                 + g * (A[a, b] - otr - rO + sigma * A[b, a]))
            if a == b:
                out[a, a] = v if sigma > 0 else 0.0
            else:
                out[a, b] = v
                out[b, a] = sigma * v


@numba.njit(cache=True)
def _rk4_real(r, steps, dt, w1, w2, N1, N2, kappa, g, sigma):
    d = r.shape[0]
    k1 = np.empty_like(r)
    k2 = np.empty_like(r)
    k3 = np.empty_like(r)
    k4 = np.empty_like(r)
    tmp = np.empty_like(r)
    A = np.empty_like(r)
    drift = 0.0
    h = 0.5 * dt
    for _ in range(steps):
        _lindblad_real(r, k1, A, w1, w2, N1, N2, kappa, g, sigma)
        for a in range(d):
            for b in range(d):
                tmp[a, b] = r[a, b] + h * k1[a, b]
        _lindblad_real(tmp, k2, A, w1, w2, N1, N2, kappa, g, sigma)
        for a in range(d):
            for b in range(d):
                tmp[a, b] = r[a, b] + h * k2[a, b]
        _lindblad_real(tmp, k3, A, w1, w2, N1, N2, kappa, g, sigma)
        for a in range(d):
            for b in range(d):
                tmp[a, b] = r[a, b] + dt * k3[a, b]
        _lindblad_real(tmp, k4, A, w1, w2, N1, N2, kappa, g, sigma)
        dtr = 0.0
        for a in range(d):
            for b in range(d):
                inc = (dt / 6.0) * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
                r[a, b] += inc
                if a == b:
                    dtr += inc
        drift = max(drift, abs(dtr))
    return drift


def _weights(params):
    lat = params.lattice
    return lat.first.lowering_weights(), lat.second.lowering_weights()


def _frame(lattice):
    return np.array([1, 1j, -1, -1j])[lattice.levels().ravel() % 4]  # W = diag(i^(n1+n2))


def _to_real_frame(r, w):
    return (w.conj()[:, None] * r) * w[None, :]


def _from_real_frame(r, w):
    return (w[:, None] * r) * w.conj()[None, :]


def _apply_real(part, params, sigma):
    out, A = np.empty_like(part), np.empty_like(part)
    w1, w2 = _weights(params)
    _lindblad_real(np.ascontiguousarray(part), out, A, w1, w2, params.N1, params.N2,
                   float(params.kappa), float(params.g), float(sigma))
    return out


def _compiled_liouvillian(rho, params):
    """Same map as :func:`liouvillian`, through the compiled real-frame kernel."""
    r = _entries(rho)
    w = _frame(params.lattice)
    rf = _to_real_frame(r, w)
    out = np.zeros_like(rf)
    for unit, part in ((1.0, rf.real), (1j, rf.imag)):
        sym, anti = (part + part.T) / 2, (part - part.T) / 2
        out += unit * (_apply_real(sym, params, 1) + _apply_real(anti, params, -1))
    return _from_real_frame(out, w)


@dataclass
class EvolveResult:
    rho: DensityMatrix
    t: float
    steps: int
    trajectory: list = field(default_factory=list)
    max_trace_drift: float = 0.0


def evolve(rho0, params, dt, steps, log_every=None, dark_state=None, stop_below=None,
           drift_tol=1e-12):
    """Integrate with classical RK4.

    rho0 is replaced by its Hermitian part. Requires
    dt * stability_scale(params) <= 0.1. Every ``log_every`` steps a
    trajectory row (t, trace, purity, liouvillian_norm, dark_overlap,
    min_eigenvalue) is recorded; ``dark_overlap`` is <psi|rho|psi> for the
    given ``dark_state``. If ``stop_below`` is set, integration stops at the
    first logged point where ||L(rho)||_F falls below it.
    """
    if dt <= 0 or dt * stability_scale(params) > 0.1:
        raise ValueError(f"dt={dt:g} violates dt * kappa (N1+N2+2)^2 <= 0.1")
    lat = params.lattice
    r0 = _entries(rho0)
    w = _frame(lat)
    rf = _to_real_frame((r0 + r0.conj().T) / 2, w)
    sym = np.ascontiguousarray((rf.real + rf.real.T) / 2)
    anti = np.ascontiguousarray((rf.imag - rf.imag.T) / 2)
    has_anti = np.max(np.abs(anti)) > 0
    w1, w2 = _weights(params)
    args = (params.N1, params.N2, float(params.kappa), float(params.g))
    log_every = log_every or steps
    traj = []
    done = 0
    worst = 0.0

    def current():
        return DensityMatrix(lat, _from_real_frame(sym + 1j * anti, w))

    def record():
        dm = current()
        row = {
            "t": done * dt,
            "trace": dm.trace().real,
            "purity": dm.purity(),
            "liouvillian_norm": float(np.linalg.norm(liouvillian(dm.entries, params))),
            "dark_overlap": dm.expectation(dark_state) if dark_state is not None else math.nan,
            "min_eigenvalue": dm.min_eigenvalue(),
        }
        traj.append(row)
        return row

    row = record()
    while done < steps:
        if stop_below is not None and row["liouvillian_norm"] < stop_below:
            break
        chunk = min(log_every, steps - done)
        drift = _rk4_real(sym, chunk, float(dt), w1, w2, *args, 1.0)
        if has_anti:
            _rk4_real(anti, chunk, float(dt), w1, w2, *args, -1.0)
        worst = max(worst, drift)
        if drift > drift_tol:
            raise StepRejected(f"trace drift {drift:.2e} per step exceeds {drift_tol:g}")
        done += chunk
        row = record()
    return EvolveResult(current(), done * dt, done, traj, worst)


# --- kernel projection -----------------------------------------------------

def _real_frame_superop(params):
    """Real Liouvillian acting on row-major vec of W^dag rho W."""
    O, _, OdO, _ = _operators(params)
    O = O.real.tocsr()
    OdO = OdO.real.tocsr()
    D = (O - O.T).tocsr()
    eye = sp.identity(O.shape[0], format="csr")
    k, g = params.kappa, params.g
    return (-k / 2 * (sp.kron(OdO, eye) + sp.kron(eye, OdO.T)) + k * sp.kron(O, O)
            + g * (sp.kron(D, eye) - sp.kron(eye, D.T))).tocsr()


def _packing(d, antisymmetric):
    """(S, P): S maps packed triangle -> full vec, P picks the packed triangle."""
    iu = np.triu_indices(d, 1 if antisymmetric else 0)
    m = len(iu[0])
    upper = iu[0] * d + iu[1]
    lower = iu[1] * d + iu[0]
    sign = -1.0 if antisymmetric else 1.0
    diag = iu[0] == iu[1]
    rows = np.concatenate([upper, lower[~diag]])
    cols = np.concatenate([np.arange(m), np.arange(m)[~diag]])
    vals = np.concatenate([np.ones(m), sign * np.ones(int((~diag).sum()))])
    S = sp.csr_matrix((vals, (rows, cols)), shape=(d * d, m))
    P = sp.csr_matrix((np.ones(m), (np.arange(m), upper)), shape=(m, d * d))
    return S, P


@dataclass
class SteadyStateResult:
    rho: DensityMatrix
    method: str
    liouvillian_norm: float
    converged: bool
    t: float = math.nan
    steps: int = 0
    trajectory: list = field(default_factory=list)
    kernel_dim: int = None
    edge_population: float = math.nan
    notes: list = field(default_factory=list)


def _project_to_kernel(L, x0, shift, iterations, want_kernel_dim):
    m = L.shape[0]
    lu = sla.splu((L - shift * sp.identity(m, format="csc")).tocsc(), permc_spec="COLAMD")
    x = x0.copy()
    for _ in range(iterations):
        # kernel components are kept, a mode with eigenvalue mu (Re mu <= 0)
        # is scaled by shift / |mu - shift| <= 1
        x = -shift * lu.solve(x)
    kdim = None
    if want_kernel_dim:
        op = sla.LinearOperator((m, m), matvec=lu.solve, dtype=float)
        nu = sla.eigs(op, k=min(16, m - 2), which="LM", return_eigenvectors=False)
        mu = 1 / nu + shift
        kdim = int(np.sum(np.abs(mu) < 1e-3 * shift))
    return x, kdim


def _steady_nullspace(params, rho0, shift, iterations, kernel_dim):
    lat = params.lattice
    d = lat.dim
    w = _frame(lat)
    rf = _to_real_frame(_entries(rho0), w)
    L = _real_frame_superop(params)
    out = np.zeros((d, d), dtype=complex)
    kdims = []
    for part, anti in ((rf.real, False), (rf.imag, True)):
        piece = (part - part.T) / 2 if anti else (part + part.T) / 2
        if np.max(np.abs(piece)) < 1e-15:
            continue
        S, P = _packing(d, anti)
        Lp = (P @ L @ S).tocsc()
        x, kd = _project_to_kernel(Lp, P @ piece.ravel(), shift, iterations, kernel_dim)
        kdims.append(kd)
        full = (S @ x).reshape(d, d)
        out += (1j * full) if anti else full
    rho = _from_real_frame(out, w)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    kd = sum(k for k in kdims if k is not None) if kernel_dim and kdims else None
    return rho, kd


def steady_state(params, rho0, method="nullspace", dt=None, max_steps=1_000_000, tol=1e-10,
                 log_every=2000, dark_state=None, shift=1e-5, iterations=4, kernel_dim=False):
    """Steady state reached from ``rho0``.

    ``method="evolve"`` integrates until ||L(rho)||_F < tol.
    ``method="nullspace"`` applies -shift (L - shift)^-1 a few times, which
    keeps the kernel component of rho0 and damps a mode with eigenvalue mu
    by shift / |mu - shift| per pass. The shift is a trade-off: solve errors
    of relative size ~eps / shift land in the (degenerate) kernel and are
    never damped, while modes slower than ~shift survive the passes and
    show up in the residual. With ``kernel_dim`` the number of Liouvillian
    eigenvalues below 1e-3 * shift is estimated among the 16 smallest (only
    within the symmetry sectors that rho0 touches).
    """
    lat = params.lattice
    r0 = _entries(rho0)
    if method == "evolve":
        dt = dt or 0.1 / stability_scale(params)
        res = evolve(r0, params, dt, max_steps, log_every=log_every, dark_state=dark_state,
                     stop_below=tol)
        lnorm = res.trajectory[-1]["liouvillian_norm"]
        ok = lnorm < tol
        if not ok:
            raise NonConvergence(f"||L(rho)|| = {lnorm:.2e} after {res.steps} steps")
        out = SteadyStateResult(res.rho, "evolve", lnorm, ok, res.t, res.steps, res.trajectory)
    elif method == "nullspace":
        rho, kd = _steady_nullspace(params, r0, shift, iterations, kernel_dim)
        lnorm = float(np.linalg.norm(liouvillian(rho, params)))
        ok = lnorm < tol
        if not ok:
            raise NonConvergence(f"||L(rho)|| = {lnorm:.2e} after kernel projection")
        out = SteadyStateResult(DensityMatrix(lat, rho), "nullspace", lnorm, ok, kernel_dim=kd)
        if kd is not None and kd > 1:
            out.notes.append(f"kernel dimension {kd}; result depends on rho0")
    else:
        raise ValueError(f"unknown method {method!r}")
    out.edge_population = out.rho.edge_population()
    if out.edge_population >= 1e-10:
        out.notes.append(f"edge population {out.edge_population:.2e}: cutoffs too small")
    return out


# --- dark states -----------------------------------------------------------

def _embed(state, lattice):
    amp = np.zeros(lattice.shape, dtype=complex)
    a = state.amp
    m1, m2 = min(a.shape[0], lattice.shape[0]), min(a.shape[1], lattice.shape[1])
    amp[:m1, :m2] = a[:m1, :m2]
    return FourModeState(lattice, amp)


def dark_subspace(params, zeta=None, nmax=None, tail_tol=1e-16):
    """Orthonormalized bi-pair states |zeta; n>, n = 0..nmax, on the params lattice.

    zeta defaults to -2iG/K. nmax defaults to the largest n whose lowest
    weight fits on the lattice.
    """
    lat = params.lattice
    zeta = params.eigenvalue if zeta is None else zeta
    if nmax is None:
        nmax = min(lat.N1, lat.N2)
    vecs = []
    for n in range(nmax + 1):
        psi = _states.make_bipair_coupled(zeta, lat.q1, lat.q2, n, tail_tol=tail_tol, cg="formula")
        vecs.append(_embed(psi.state, lat).amp.ravel())
    q, _ = np.linalg.qr(np.array(vecs).T)
    # undo the arbitrary QR phases so each member matches its source state
    q = q * np.array([np.vdot(q[:, i], vecs[i]) / abs(np.vdot(q[:, i], vecs[i]))
                      for i in range(len(vecs))])[None, :]
    return [FourModeState(lat, q[:, i].reshape(lat.shape), normalized=True)
            for i in range(len(vecs))]


def dark_decomposition(rho, family):
    """(coefficient matrix <psi_n|rho|psi_m>, ||rho - Pi rho Pi||_F)."""
    r = _entries(rho)
    V = np.array([s.amp.ravel() for s in family]).T
    coeffs = V.conj().T @ r @ V
    proj = V @ coeffs @ V.conj().T
    return coeffs, float(np.linalg.norm(r - proj))


def dark_condition_residual(rho, params):
    """||(O + 2iG/K) rho||_F."""
    O, _, _, _ = _operators(params)
    r = _entries(rho)
    return float(np.linalg.norm(O @ r - params.eigenvalue * r))
