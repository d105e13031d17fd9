import numpy as np
import pytest
import scipy.sparse as sp

from bipair.fock import (
    FourModeState,
    LatticeMismatch,
    PairAmplitudes,
    ProductLattice,
    SectorBasis,
    apply_casimir,
    apply_pair_casimir,
    apply_pair_kz,
    apply_pair_lowering,
    apply_pair_raising,
    apply_total_kz,
    apply_total_lowering,
    apply_total_raising,
    basis_state,
    inner,
    lowering_matrix,
    norm,
)


def random_interior(lat, rng, margin=2):
    amp = np.zeros(lat.shape, dtype=complex)
    m1, m2 = lat.shape[0] - margin, lat.shape[1] - margin
    amp[:m1, :m2] = rng.normal(size=(m1, m2)) + 1j * rng.normal(size=(m1, m2))
    return FourModeState(lat, amp)


def test_sector_weights():
    b = SectorBasis(2, 4)
    assert np.allclose(b.lowering_weights(), np.sqrt([3, 8, 15, 24]))
    assert np.allclose(b.kz_diagonal(), [1.5, 2.5, 3.5, 4.5, 5.5])


def test_sector_rejects_negative_charge():
    with pytest.raises(ValueError):
        SectorBasis(-1, 3)


def test_pair_lowering_on_basis_vector():
    b = SectorBasis(1, 5)
    c = np.zeros(6)
    c[3] = 1
    out = apply_pair_lowering(PairAmplitudes(b, c)).coeffs
    assert out[2] == pytest.approx(np.sqrt(3 * 4))
    assert np.count_nonzero(out) == 1


def test_pair_lowering_kills_ground():
    b = SectorBasis(3, 4)
    c = np.zeros(5)
    c[0] = 1
    assert not np.any(apply_pair_lowering(PairAmplitudes(b, c)).coeffs)


def test_pair_commutator_and_casimir():
    rng = np.random.default_rng(1)
    for q in range(4):
        b = SectorBasis(q, 12)
        c = np.zeros(13, dtype=complex)
        c[:10] = rng.normal(size=10) + 1j * rng.normal(size=10)
        s = PairAmplitudes(b, c)
        comm = apply_pair_lowering(apply_pair_raising(s)).coeffs - apply_pair_raising(apply_pair_lowering(s)).coeffs
        assert np.allclose(comm, 2 * apply_pair_kz(s).coeffs, atol=1e-12)
        cas = apply_pair_casimir(s).coeffs
        assert np.allclose(cas, (1 - q * q) / 4 * c, atol=1e-11)


def test_total_commutators():
    rng = np.random.default_rng(2)
    lat = ProductLattice(1, 3, 9, 8)
    for _ in range(20):
        v = random_interior(lat, rng)
        lo, up, kz = apply_total_lowering, apply_total_raising, apply_total_kz
        scale = norm(up(up(v)))
        assert norm(lo(up(v)) - up(lo(v)) - 2 * kz(v)) <= 1e-12 * scale
        assert norm(kz(up(v)) - up(kz(v)) - up(v)) <= 1e-12 * scale
        assert norm(kz(lo(v)) - lo(kz(v)) + lo(v)) <= 1e-12 * scale


def test_raising_is_adjoint_of_lowering():
    rng = np.random.default_rng(3)
    lat = ProductLattice(2, 0, 6, 7)
    u = random_interior(lat, rng, margin=0)
    v = random_interior(lat, rng, margin=0)
    assert inner(u, apply_total_lowering(v)) == pytest.approx(inner(apply_total_raising(u), v), rel=1e-13)


def test_casimir_commutes_with_lowering():
    rng = np.random.default_rng(4)
    lat = ProductLattice(0, 2, 10, 10)
    v = random_interior(lat, rng, margin=3)
    a = apply_casimir(apply_total_lowering(v))
    b = apply_total_lowering(apply_casimir(v))
    assert norm(a - b) <= 1e-11 * norm(a)


def test_casimir_on_vacuum_site():
    # |q1,0>|q2,0> is the lowest weight of charge q1 + q2 + 1
    lat = ProductLattice(1, 2, 3, 3)
    v = basis_state(lat, 0, 0)
    q = 1 + 2 + 1
    assert np.allclose(apply_casimir(v).amp, (1 - q * q) / 4 * v.amp)


def test_lowering_matrix_matches_matrix_free():
    rng = np.random.default_rng(5)
    lat = ProductLattice(1, 2, 5, 4)
    v = random_interior(lat, rng, margin=0)
    m = lowering_matrix(lat)
    assert sp.issparse(m)
    assert np.allclose(m @ v.amp.ravel(), apply_total_lowering(v).amp.ravel(), atol=1e-13)


def test_lattice_mismatch():
    a = basis_state(ProductLattice(0, 0, 2, 2), 0, 0)
    b = basis_state(ProductLattice(1, 0, 2, 2), 0, 0)
    with pytest.raises(LatticeMismatch):
        inner(a, b)
    with pytest.raises(LatticeMismatch):
        a + b


def test_normalized_flag_is_checked():
    lat = ProductLattice(0, 0, 1, 1)
    with pytest.raises(ValueError):
        FourModeState(lat, np.ones(lat.shape), normalized=True)
    assert FourModeState(lat, np.ones(lat.shape) / 2, normalized=True).normalized


def test_wrong_shape():
    with pytest.raises(ValueError):
        FourModeState(ProductLattice(0, 0, 2, 2), np.zeros((2, 2)))
