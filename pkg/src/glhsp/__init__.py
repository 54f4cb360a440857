"""Exact simulation and algorithms for hidden parabolic-type subgroups of
GL_n(F_q), with the classical query-complexity experiments."""

from .fq import FieldCtx, FieldElem, field_ctx
from .fqla import (
    BilinearForm,
    Flag,
    FqMatrix,
    Subspace,
    enumerate_subspaces,
    gauss_binom,
    perp,
    random_flag,
    random_invertible,
    random_subspace,
    standard_form,
    trace_form,
)
from .oracles import (
    AffineComplement,
    AffineG,
    AffineN,
    FullUnipotentOfFlag,
    HidingOracle,
    ParabolicOfFlag,
    PointwiseStabilizer,
    SpaceL,
    SpaceLPrime,
    SubgroupSpec,
    hyperplane_stabilizer_n,
    make_oracle,
    setwise_stabilizer,
)
from .qsim import (
    KERNEL_BACKEND,
    MatrixSpace,
    StateVector,
    VectorSpace,
    distribution,
    measure,
    postselect_invertible,
    prepare_coset_state,
    qft_phi,
    subset_state,
)
from .hsp import (
    AlgoConfig,
    Containment,
    HSPResult,
    abelian_hsp_linear,
    find_complement,
    find_max_parabolic,
    find_parabolic,
    find_parabolic_dual_recursion,
    find_unipotent,
    guess_subspaces,
    run_hsp,
    verify_subspace,
)
from .bounds import (
    adversary_game,
    adversary_threshold,
    count_stabilized,
    deterministic_search,
    randomized_bound_experiment,
)

__version__ = "0.1.0"
