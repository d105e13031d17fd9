"""Bi-pair coherent states of SU(1,1) x SU(1,1): construction, statistics, dynamics."""

from .cg import cg_block, cg_coefficient, oracle_blocks, validate_block
from .dynamics import (
    DensityMatrix,
    MasterEqParams,
    dark_decomposition,
    dark_subspace,
    evolve,
    liouvillian,
    steady_state,
)
from .fock import FourModeState, ProductLattice, SectorBasis
from .states import (
    casimir_residual,
    eigen_residual,
    make_bipair_coupled,
    make_bipair_direct,
    make_pair_coherent,
    overlap_f,
)
from .stats import joint_pk, mandel_q_closed, mandel_q_numeric, marginal

__version__ = "0.1.0"
