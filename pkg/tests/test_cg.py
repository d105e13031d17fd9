import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipair.cg import (
    CGBlock,
    OracleError,
    cg_block,
    cg_coefficient,
    cg_coefficient_as_printed,
    coupled_charge,
    level_gram,
    lowest_weight_oracle,
    oracle_blocks,
    validate_block,
)
from bipair.fock import ProductLattice, apply_total_lowering, norm

# q1=1, q2=2, n=1: lowest weight ~ 6|1,0> - (12/sqrt 6)|0,1>, then raised once
FROZEN = {
    (1, 2, 1, 0, 0): -math.sqrt(24 / 60),
    (1, 2, 1, 0, 1): math.sqrt(36 / 60),
    (1, 2, 1, 1, 0): -math.sqrt(16 / 35),
    (1, 2, 1, 1, 1): math.sqrt(1 / 35),
    (1, 2, 1, 1, 2): math.sqrt(18 / 35),
}


@pytest.mark.parametrize("key,val", FROZEN.items())
def test_frozen_values(key, val):
    assert cg_coefficient(*key) == pytest.approx(val, abs=1e-14)
    blk = lowest_weight_oracle(1, 2, 1, 1)
    _, _, _, k, n1 = key
    assert blk.table[k, n1] == pytest.approx(val, abs=1e-13)


def test_uncharged_lowest_coupling_is_uniform():
    for k in range(12):
        for n1 in range(k + 1):
            assert cg_coefficient(0, 0, 0, k, n1) == pytest.approx(1 / math.sqrt(k + 1), abs=1e-12)


def test_charge_arithmetic():
    assert coupled_charge(0, 0, 0) == 1
    assert coupled_charge(2, 3, 4) == 14


def test_formula_matches_oracle_everywhere():
    for q1 in range(4):
        for q2 in range(4):
            oracles = oracle_blocks(q1, q2, 3, 6)
            for n, orc in enumerate(oracles):
                rep = validate_block(cg_block(q1, q2, n, 6), orc)
                assert rep.passed, (q1, q2, n, rep.max_deviation)
                assert rep.sign == 1


def test_rows_are_orthonormal_across_blocks():
    blocks = [cg_block(2, 1, n, 6) for n in range(4)]
    for level in range(10):
        g = level_gram(blocks, level)
        assert np.allclose(g, np.eye(len(g)), atol=1e-12)


def test_lowering_steps_down_a_row():
    q1, q2, n, kmax = 1, 3, 2, 5
    blk = cg_block(q1, q2, n, kmax)
    lat = ProductLattice(q1, q2, n + kmax + 1, n + kmax + 1)
    q = blk.q
    for k in range(1, kmax + 1):
        lowered = apply_total_lowering(blk.row_state(k, lat))
        expect = math.sqrt(k * (k + q)) * blk.row_state(k - 1, lat)
        assert norm(lowered - expect) <= 1e-12 * norm(expect)


def test_as_printed_form_is_a_rescaling_at_zero_coupling():
    for q1, q2 in [(0, 0), (1, 2), (3, 1)]:
        scale = math.sqrt(math.factorial(q1 + q2 + 1))
        for k in range(4):
            for n1 in range(k + 1):
                assert scale * cg_coefficient_as_printed(q1, q2, 0, k, n1) == pytest.approx(
                    cg_coefficient(q1, q2, 0, k, n1), abs=1e-13)
    printed = cg_block(1, 1, 1, 3, coefficient=cg_coefficient_as_printed)
    rep = validate_block(printed, cg_block(1, 1, 1, 3))
    assert rep.max_deviation > 0.1


def test_bad_indices():
    with pytest.raises(ValueError):
        cg_coefficient(0, 0, 1, 0, 3)
    with pytest.raises(ValueError):
        cg_coefficient(-1, 0, 0, 0, 0)


def test_oracle_needs_room():
    with pytest.raises(ValueError):
        oracle_blocks(0, 0, 2, 3, lattice=ProductLattice(0, 0, 4, 4))


def test_oracle_rejects_charge_mismatch():
    with pytest.raises(ValueError):
        oracle_blocks(0, 1, 1, 1, lattice=ProductLattice(0, 0, 5, 5))


def test_validate_block_aligns_sign():
    blk = cg_block(1, 0, 1, 3)
    flipped = CGBlock(1, 0, 1, 3, -blk.table, "oracle")
    rep = validate_block(blk, flipped)
    assert rep.sign == -1 and rep.max_deviation == 0


def test_validate_block_shape_mismatch():
    with pytest.raises(ValueError):
        validate_block(cg_block(0, 0, 0, 2), cg_block(0, 0, 0, 3))


def test_oracle_error_is_runtime_error():
    assert issubclass(OracleError, RuntimeError)


@settings(max_examples=40, deadline=None)
@given(q1=st.integers(0, 6), q2=st.integers(0, 6), n=st.integers(0, 6), k=st.integers(0, 20))
def test_rows_have_unit_norm(q1, q2, n, k):
    row = [cg_coefficient(q1, q2, n, k, n1) for n1 in range(n + k + 1)]
    assert math.fsum(c * c for c in row) == pytest.approx(1.0, abs=1e-12)
