"""The hidden-subgroup algorithms over GL_n(F_q).

Every routine consumes a hiding oracle (left cosets unless stated) and the
exact simulator.  Probabilistic stages retry up to a configured budget; every
returned object has passed an oracle-side verification, so a wrong answer
from an under-sampled stage is rejected and retried rather than propagated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import RepetitionBudgetExceeded
from .fqla import (
    Flag,
    FqMatrix,
    Subspace,
    mat_mul,
    mat_rank,
    mat_inverse,
    perp,
    random_hyperplane,
    solve_left,
    standard_form,
    trace_form,
    _DT,
)
from .oracles import (
    AffineG,
    AffineRestrictedOracle,
    DualOracle,
    OracleBase,
    ParabolicOfFlag,
    PointwiseStabilizer,
    RestrictedOracle,
    RestrictedVectorOracle,
    SideFlipOracle,
    SpaceL,
    SpaceLPrime,
    hyperplane_stabilizer_n,
    setwise_stabilizer,
)
from .qsim import (
    DEFAULT_DENSE_BUDGET,
    VectorSpace,
    measure,
    prepare_coset_state,
    prepare_vector_coset_state,
    qft_phi,
    subset_state,
)


@dataclass
class AlgoConfig:
    """Budgets for the probabilistic stages.

    The default repetition cap is sized from the weakest per-iteration
    success bound (1/64): ceil(64 ln(3/delta)) attempts push the failure
    probability of a stage below delta.
    """

    delta: float = 1e-6
    max_repetitions: int = 0
    inner_repetitions: int = 64
    certify_retries: int = 16
    dense_budget: int = DEFAULT_DENSE_BUDGET
    enum_budget: int = 10**6

    def __post_init__(self):
        if self.max_repetitions <= 0:
            self.max_repetitions = math.ceil(64 * math.log(3.0 / self.delta))

    def inner(self) -> "AlgoConfig":
        return AlgoConfig(
            delta=self.delta,
            max_repetitions=self.inner_repetitions,
            inner_repetitions=self.inner_repetitions,
            certify_retries=self.certify_retries,
            dense_budget=self.dense_budget,
            enum_budget=self.enum_budget,
        )


@dataclass
class HSPResult:
    value: object
    trials: int
    queries: int
    success: bool | None = None


def run_hsp(finder, oracle, rng, cfg=None, trace=None) -> HSPResult:
    """Run a finder and package its answer with the oracle-query delta.

    `trials` counts the per-stage trace records emitted during the run;
    `success` is left for the harness to set after comparing with the
    hidden instance.
    """
    trace_list = [] if trace is None else trace
    before = oracle.query_count
    value = finder(oracle, rng, cfg, trace_list)
    return HSPResult(
        value=value,
        trials=len(trace_list),
        queries=oracle.query_count - before,
    )


class Containment(enum.Enum):
    NOT_CONTAINED = "not_contained"
    CONTAINED_PROPER = "contained_proper"
    EQUAL = "equal"


def _trace(trace, stage, trial, outcome, oracle):
    if trace is not None:
        trace.append(
            {
                "stage": stage,
                "trial": trial,
                "outcome": outcome,
                "queries": oracle.query_count,
            }
        )


def _as_left(oracle: OracleBase) -> OracleBase:
    return oracle if oracle.side == "left" else SideFlipOracle(oracle)


def _gens_constant(oracle: OracleBase, gens) -> bool:
    base = oracle.query(oracle.identity())
    return all(oracle.query(g) == base for g in gens)


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def restrict_fixing(oracle: OracleBase, active: Subspace, fixed: Subspace):
    """Restrict the oracle to {X : X(active) <= active, (X - I)(fixed) = 0},
    an ambient group isomorphic to GL(active).

    Returns (restricted oracle over GL_m, lift) where lift maps subspaces of
    the coordinate space F_q^m back into the original ambient space.
    """
    ctx, n = oracle.ctx, oracle.n
    m = active.dim
    if m + fixed.dim != n or (active + fixed).dim != n:
        raise ValueError("active and fixed must be direct complements")
    P = np.vstack([active.basis, fixed.basis]).T.copy().astype(_DT)
    Pinv = mat_inverse(ctx, P)

    def embed(Xp: FqMatrix) -> FqMatrix:
        block = np.eye(n, dtype=_DT)
        block[:m, :m] = Xp.a
        return FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, P, block), Pinv))

    def lift(S: Subspace) -> Subspace:
        if S.dim == 0:
            return Subspace.zero(ctx, n)
        return Subspace(ctx, n, mat_mul(ctx, S.basis, active.basis))

    return RestrictedOracle(oracle, embed, m), lift


def _functional_for(ctx, Uprime: Subspace, c_row):
    """Row functional vanishing on U' with value 1 on the complement vector."""
    Q = np.vstack([Uprime.basis, c_row[None, :]]).astype(_DT)
    return mat_inverse(ctx, Q.T)[Uprime.n - 1]


def affine_restriction(oracle: OracleBase, Uprime: Subspace):
    """Present H cap G_{U'} as a right-coset instance over the affine group.

    G_{U'} (the pointwise stabilizer of the hyperplane U') is identified with
    the matrices [[b, 0], [v, I]] through a basis (c, basis of U').  Returns
    (right-side oracle, line_from_v) where line_from_v rebuilds the candidate
    subspace <c + v . basis(U')> from a recovered complement parameter v.
    """
    ctx, n = oracle.ctx, oracle.n
    comp = Uprime.direct_complement()
    c_row = comp.basis[0]
    f_row = _functional_for(ctx, Uprime, c_row)

    def embed(M: FqMatrix) -> FqMatrix:
        b, w = AffineG.decompose(M)
        col = ctx.ADD[
            ctx.MUL[np.int16(ctx.sub(b, 1)), c_row],
            mat_mul(ctx, w[None, :], Uprime.basis)[0],
        ]
        Y = mat_mul(ctx, col[:, None], f_row[None, :])
        return FqMatrix(ctx, ctx.ADD[np.eye(n, dtype=_DT), Y])

    def line_from_v(v) -> Subspace:
        row = ctx.ADD[c_row, mat_mul(ctx, np.asarray(v, dtype=_DT)[None, :], Uprime.basis)[0]]
        return Subspace(ctx, n, row[None, :])

    return AffineRestrictedOracle(oracle, embed, n), line_from_v


# ---------------------------------------------------------------------------
# the abelian HSP on linear spaces
# ---------------------------------------------------------------------------


def abelian_hsp_linear(voracle, rng, cfg: AlgoConfig | None = None, trace=None) -> Subspace:
    """Recover a hidden subspace W of the additive group F_q^m.

    Repeats coset-state preparation + QFT + measurement; the samples are
    uniform over W-perp, and sampling stops once m consecutive draws fail to
    grow their span.  The result perp(span) contains W, with equality once
    the span has saturated; callers that need certainty certify the answer
    against the oracle.
    """
    cfg = cfg or AlgoConfig()
    ctx, m = voracle.ctx, voracle.m
    span = Subspace.zero(ctx, m)
    stall = 0
    for t in range(cfg.max_repetitions):
        st = prepare_vector_coset_state(voracle, rng, budget=cfg.dense_budget)
        out = measure(qft_phi(st, standard_form()), rng)
        u = np.asarray(out.value, dtype=_DT)
        if span.contains_vector(u):
            stall += 1
            if stall >= m:
                break
        else:
            span = span + Subspace(ctx, m, u[None, :])
            stall = 0
            if span.dim == m:
                break
    else:
        raise RepetitionBudgetExceeded("abelian HSP sampling budget exhausted")
    _trace(trace, "abelian", 0, f"span_dim={span.dim}", voracle)
    return perp(span, standard_form())


# ---------------------------------------------------------------------------
# maximal parabolic subgroups
# ---------------------------------------------------------------------------


def find_max_parabolic(oracle: OracleBase, rng, cfg: AlgoConfig | None = None, trace=None) -> Subspace:
    """Recover U for a hidden setwise stabilizer G_{U}, 0 < U < V.

    Alternates the left-coset run with the dual (transpose-inverse) run so
    that one of the two always operates in its favourable dimension regime;
    every candidate is verified by label constancy on a generating set of its
    stabilizer, which is conclusive because maximal parabolic subgroups admit
    no mutual inclusions.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    n, ctx = oracle.n, oracle.ctx
    dual = DualOracle(oracle)
    tform = trace_form(n)
    for rep in range(cfg.max_repetitions):
        for name, orc, dualize in (("left", oracle, False), ("dual", dual, True)):
            st = prepare_coset_state(orc, rng, budget=cfg.dense_budget)
            out = measure(qft_phi(st, tform), rng)
            X: FqMatrix = out.value
            img = X.image()
            if not 0 < img.dim < n:
                _trace(trace, f"max_parabolic/{name}", rep, "degenerate_rank", oracle)
                continue
            cand = perp(img, standard_form()) if dualize else img
            if _gens_constant(oracle, setwise_stabilizer(cand).generators()):
                _trace(trace, f"max_parabolic/{name}", rep, "verified", oracle)
                return cand
            _trace(trace, f"max_parabolic/{name}", rep, "rejected", oracle)
    raise RepetitionBudgetExceeded("max-parabolic search budget exhausted")


# ---------------------------------------------------------------------------
# complements in small stabilizers
# ---------------------------------------------------------------------------


def _affine_coset_state(aff_oracle, rng, budget):
    """Right-coset state of the affine instance, hosted in the n-dimensional
    space of shifted matrices (coordinates (b - 1, v))."""
    ctx, n = aff_oracle.ctx, aff_oracle.n
    from .qsim import _random_ambient

    A = _random_ambient(aff_oracle, rng)
    aff_oracle.query(A)
    support = aff_oracle._coset_support(A)
    space = VectorSpace(ctx, n)
    shifted = []
    for M in support:
        b, w = AffineG.decompose(M)
        shifted.append(np.concatenate([[ctx.sub(b, 1)], w]).astype(_DT))
    return subset_state(space, shifted, budget=budget)


def find_complement(aff_oracle, rng, cfg: AlgoConfig | None = None, trace=None):
    """Recover v for a hidden complement H_v of the affine normal subgroup,
    via right cosets.

    Each batch takes n-1 samples in the shifted matrix space; when the tail
    coordinates span, the candidate v is solved linearly and verified by a
    single oracle comparison on the cyclic generator of H_v.
    """
    cfg = cfg or AlgoConfig()
    ctx, n = aff_oracle.ctx, aff_oracle.n
    affine = AffineG(ctx, n)
    base_label = None
    for rep in range(cfg.max_repetitions):
        rows = []
        heads = []
        for _ in range(n - 1):
            st = _affine_coset_state(aff_oracle, rng, cfg.dense_budget)
            out = measure(qft_phi(st, standard_form()), rng)
            u = np.asarray(out.value, dtype=_DT)
            heads.append(int(u[0]))
            rows.append(u[1:])
        R = np.vstack(rows) if rows else np.zeros((0, n - 1), dtype=_DT)
        if n > 1 and mat_rank(ctx, R) != n - 1:
            _trace(trace, "complement", rep, "batch_not_spanning", aff_oracle)
            continue
        b = np.array([ctx.neg(h) for h in heads], dtype=_DT)
        v = solve_left(ctx, R.T, b) if n > 1 else np.zeros(0, dtype=_DT)
        if v is None:
            continue
        gen_b = ctx.generator
        gen = affine.compose(gen_b, ctx.MUL[np.int16(ctx.sub(gen_b, 1)), v])
        if base_label is None:
            base_label = aff_oracle.query(affine.compose(1, np.zeros(n - 1, dtype=_DT)))
        if aff_oracle.query(gen) == base_label:
            _trace(trace, "complement", rep, "verified", aff_oracle)
            return v
        _trace(trace, "complement", rep, "rejected", aff_oracle)
    raise RepetitionBudgetExceeded("complement search budget exhausted")


# ---------------------------------------------------------------------------
# guessing a piece of the flag
# ---------------------------------------------------------------------------


def guess_subspaces(oracle: OracleBase, rng, cfg: AlgoConfig | None = None, trace=None):
    """One guessing round: returns (W1, W2, W3), each a candidate nonzero
    subspace of the hidden flag's smallest member, or None.

    W1 comes from the abelian HSP on the unipotent hyperplane stabilizer N;
    W2 from the affine-complement tool inside G_{U'}; W3 from the dimension-1
    shortcut or a speculative maximal-parabolic recursion inside the subspace
    recovered by W1's stage.  Candidates are not verified here.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    ctx, n = oracle.ctx, oracle.n
    Uprime = random_hyperplane(ctx, n, rng)
    N = hyperplane_stabilizer_n(Uprime)
    vor = RestrictedVectorOracle(oracle, N.from_coords, N.coord_dim)
    try:
        S_coords = abelian_hsp_linear(vor, rng, cfg)
    except RepetitionBudgetExceeded:
        S_coords = Subspace.zero(ctx, N.coord_dim)
    if S_coords.dim:
        S = Subspace(ctx, n, mat_mul(ctx, S_coords.basis, Uprime.basis))
    else:
        S = Subspace.zero(ctx, n)
    W1 = S if 0 < S.dim < n else None

    W2 = None
    try:
        aff, line_from_v = affine_restriction(oracle, Uprime)
        v = find_complement(aff, rng, cfg.inner(), trace)
        W2 = line_from_v(v)
    except RepetitionBudgetExceeded:
        pass

    W3 = None
    if S.dim == 1:
        W3 = S
    elif 2 <= S.dim <= n - 1:
        try:
            sub, lift = restrict_fixing(oracle, S, S.direct_complement())
            W3 = lift(find_max_parabolic(sub, rng, cfg.inner(), trace))
        except RepetitionBudgetExceeded:
            pass
    _trace(
        trace,
        "guess",
        0,
        f"W1={getattr(W1, 'dim', None)} W2={getattr(W2, 'dim', None)} W3={getattr(W3, 'dim', None)}",
        oracle,
    )
    return W1, W2, W3


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _intersection_trivial(oracle, lp: SpaceLPrime, rng, cfg) -> bool:
    """Decide whether the hidden subgroup meets the abelian group lp trivially.

    The abelian HSP answer is one-sided: a full sample span proves the
    intersection trivial, and a nonzero claim is certified by membership
    queries on its basis; an uncertified claim is resampled.
    """
    base = oracle.query(oracle.identity())
    for _ in range(cfg.certify_retries):
        vor = RestrictedVectorOracle(oracle, lp.from_coords, lp.coord_dim)
        claim = abelian_hsp_linear(vor, rng, cfg)
        if claim.dim == 0:
            return True
        if all(oracle.query(lp.from_coords(x)) == base for x in claim.basis):
            return False
    raise RepetitionBudgetExceeded("intersection test failed to certify")


def verify_subspace(oracle: OracleBase, W: Subspace, rng, cfg: AlgoConfig | None = None) -> Containment:
    """Decide W <= T and, when contained, W = T, for the smallest flag member T.

    Containment holds exactly when the hidden subgroup contains
    {X : (X - I)V <= W}, checked by label constancy on its generators;
    equality holds exactly when the hidden subgroup meets
    {X : (X - I)V <= W', (X - I)W' = 0} trivially.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    if not 0 < W.dim < oracle.n:
        raise ValueError("verification needs a proper nonzero subspace")
    if not _gens_constant(oracle, SpaceL(W).generators()):
        return Containment.NOT_CONTAINED
    lp = SpaceLPrime(W, W.direct_complement())
    if _intersection_trivial(oracle, lp, rng, cfg):
        return Containment.EQUAL
    return Containment.CONTAINED_PROPER


# ---------------------------------------------------------------------------
# the main algorithm
# ---------------------------------------------------------------------------


def _is_full_group(oracle: OracleBase) -> bool:
    gl = ParabolicOfFlag(Flag(oracle.ctx, oracle.n, []))
    return _gens_constant(oracle, gl.generators())


def _dedup(cands):
    seen = set()
    out = []
    for W in cands:
        if W is not None and W not in seen:
            seen.add(W)
            out.append(W)
    return out


def find_parabolic(oracle: OracleBase, rng, cfg: AlgoConfig | None = None, trace=None) -> Flag:
    """Recover the full hidden flag of a parabolic subgroup.

    Guess-verify loop for a nonzero W <= T, then recursion into the group
    acting on a complement of W (isomorphic to GL(V/W)), with the flag
    reassembled as U_i = <U_i' union W>.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    ctx, n = oracle.ctx, oracle.n
    if _is_full_group(oracle):
        _trace(trace, "parabolic", 0, "trivial_flag", oracle)
        return Flag(ctx, n, [])
    for rep in range(cfg.max_repetitions):
        cands = guess_subspaces(oracle, rng, cfg, trace)
        for W in _dedup(cands):
            if not 0 < W.dim < n:
                continue
            try:
                res = verify_subspace(oracle, W, rng, cfg)
            except RepetitionBudgetExceeded:
                continue
            if res is Containment.NOT_CONTAINED:
                _trace(trace, "parabolic", rep, f"candidate_rejected dim={W.dim}", oracle)
                continue
            _trace(trace, "parabolic", rep, f"candidate_{res.value} dim={W.dim}", oracle)
            sub, lift = restrict_fixing(oracle, W.direct_complement(), W)
            subflag = find_parabolic(sub, rng, cfg, trace)
            members = [lift(U) + W for U in subflag.chain]
            if res is Containment.EQUAL:
                members.append(W)
            return Flag(ctx, n, members)
    raise RepetitionBudgetExceeded("parabolic guess budget exhausted")


# ---------------------------------------------------------------------------
# full unipotent subgroups
# ---------------------------------------------------------------------------


def find_unipotent(oracle: OracleBase, rng, cfg: AlgoConfig | None = None, trace=None) -> Flag:
    """Recover the complete flag of a hidden full unipotent subgroup.

    A random hyperplane W' gives the abelian group N = {X : (X-I)V <= W',
    (X-I)W' = 0}; when W' separates the two smallest flag members, the
    abelian HSP on N reveals U_{n-1}.  A guess is accepted only if the
    matching linear-space group lies inside the hidden subgroup, then the
    search recurses on a complement.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    ctx, n = oracle.ctx, oracle.n
    if n == 1:
        return Flag(ctx, 1, [])
    for rep in range(cfg.max_repetitions):
        Wprime = random_hyperplane(ctx, n, rng)
        N = hyperplane_stabilizer_n(Wprime)
        vor = RestrictedVectorOracle(oracle, N.from_coords, N.coord_dim)
        try:
            S_coords = abelian_hsp_linear(vor, rng, cfg)
        except RepetitionBudgetExceeded:
            continue
        if S_coords.dim != 1:
            _trace(trace, "unipotent", rep, f"guess_dim={S_coords.dim}", oracle)
            continue
        S = Subspace(ctx, n, mat_mul(ctx, S_coords.basis, Wprime.basis))
        probe = SpaceLPrime(S.direct_complement(), S)
        if not _gens_constant(oracle, probe.generators()):
            _trace(trace, "unipotent", rep, "guess_rejected", oracle)
            continue
        _trace(trace, "unipotent", rep, "guess_verified", oracle)
        sub, lift = restrict_fixing(oracle, S.direct_complement(), S)
        subflag = find_unipotent(sub, rng, cfg, trace)
        members = [lift(U) + S for U in subflag.chain] + [S]
        return Flag(ctx, n, members)
    raise RepetitionBudgetExceeded("unipotent guess budget exhausted")


# ---------------------------------------------------------------------------
# the dual recursion scheme
# ---------------------------------------------------------------------------


def contains_largest_member(oracle: OracleBase, W: Subspace, rng, cfg: AlgoConfig | None = None) -> Containment:
    """Decide U_1 <= W and, when contained, U_1 = W, for the largest flag member.

    Containment holds exactly when the hidden subgroup contains the pointwise
    stabilizer of W; the equality test is the same trivial-intersection test
    as in the primal verification.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    if not 0 < W.dim < oracle.n:
        raise ValueError("verification needs a proper nonzero subspace")
    if not _gens_constant(oracle, PointwiseStabilizer(W).generators()):
        return Containment.NOT_CONTAINED
    lp = SpaceLPrime(W, W.direct_complement())
    if _intersection_trivial(oracle, lp, rng, cfg):
        return Containment.EQUAL
    return Containment.CONTAINED_PROPER


def find_parabolic_dual_recursion(oracle: OracleBase, rng, cfg: AlgoConfig | None = None, trace=None) -> Flag:
    """Alternative recursion: find W containing the largest member U_1, then
    recurse in {X : XW <= W, (X - I)W' = 0}, isomorphic to GL(W).

    Candidates for W come from guessing against the transposed oracle, whose
    hidden flag has smallest member U_1-perp.
    """
    cfg = cfg or AlgoConfig()
    oracle = _as_left(oracle)
    ctx, n = oracle.ctx, oracle.n
    if _is_full_group(oracle):
        return Flag(ctx, n, [])
    dual = DualOracle(oracle)
    for rep in range(cfg.max_repetitions):
        cands = guess_subspaces(dual, rng, cfg, trace)
        for Wt in _dedup(cands):
            if not 0 < Wt.dim < n:
                continue
            W = perp(Wt, standard_form())
            try:
                res = contains_largest_member(oracle, W, rng, cfg)
            except RepetitionBudgetExceeded:
                continue
            if res is Containment.NOT_CONTAINED:
                continue
            _trace(trace, "parabolic_dual", rep, f"candidate_{res.value} dim={W.dim}", oracle)
            sub, lift = restrict_fixing(oracle, W, W.direct_complement())
            subflag = find_parabolic_dual_recursion(sub, rng, cfg, trace)
            members = [lift(U) for U in subflag.chain]
            if res is Containment.EQUAL:
                members = [W] + members
            return Flag(ctx, n, members)
    raise RepetitionBudgetExceeded("dual-recursion guess budget exhausted")
