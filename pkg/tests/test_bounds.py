"""Classical search and the query-complexity experiments."""

import numpy as np
import pytest

from glhsp.fq import field_ctx
from glhsp.fqla import (
    FqMatrix,
    Subspace,
    enumerate_subspaces,
    gauss_binom,
    random_subspace,
)
from glhsp.oracles import enumerate_gl, make_oracle, setwise_stabilizer
from glhsp.bounds import (
    AdversaryReport,
    adversary_game,
    adversary_threshold,
    count_stabilized,
    deterministic_search,
    is_scalar,
    randomized_bound_experiment,
    reference_strategy,
    stabilized_bound,
    stabilized_mask,
)

F2 = field_ctx(2)
F3 = field_ctx(3)
F4 = field_ctx(2, 2)
F5 = field_ctx(5)


# -- deterministic search ---------------------------------------------------------


def test_deterministic_search_2_2():
    rng = np.random.default_rng(0)
    U = Subspace(F2, 2, [[0, 1]])
    orc = make_oracle(setwise_stabilizer(U), "left")
    assert deterministic_search(orc, 1) == U
    # 3 hyperplanes, each containment test costs |gens|+1 <= 4 queries
    assert orc.query_count <= 3 * 4


def test_deterministic_search_hyperplane_no_descend():
    rng = np.random.default_rng(1)
    U = random_subspace(F3, 3, 2, rng)
    orc = make_oracle(setwise_stabilizer(U), "left")
    assert deterministic_search(orc, 2) == U


def test_deterministic_search_3_3():
    rng = np.random.default_rng(2)
    U = random_subspace(F3, 3, 1, rng)
    orc = make_oracle(setwise_stabilizer(U), "left")
    assert deterministic_search(orc, 1) == U
    # 13 hyperplanes at the top level, 4 at the next; generator sets are small
    assert orc.query_count <= (13 + 4) * 30


def test_deterministic_search_grid():
    rng = np.random.default_rng(3)
    for ctx, n, d in [(F2, 3, 1), (F2, 4, 2), (F4, 2, 1), (F5, 2, 1), (F2, 4, 3)]:
        U = random_subspace(ctx, n, d, rng)
        orc = make_oracle(setwise_stabilizer(U), "left")
        assert deterministic_search(orc, d) == U


# -- stabilized-subspace counting ---------------------------------------------------


def test_count_stabilized_scalar():
    lam = FqMatrix(F3, [[2, 0], [0, 2]])
    assert count_stabilized(lam, 1) == gauss_binom(2, 1, 3)
    assert is_scalar(lam)


def test_count_stabilized_examples():
    A = FqMatrix(F3, [[1, 0], [0, 2]])
    assert count_stabilized(A, 1) == 2 == stabilized_bound(2, 1, 3)
    J = FqMatrix(F2, [[1, 0], [1, 1]])
    assert count_stabilized(J, 1) == 1 <= stabilized_bound(2, 1, 2)


def test_stabilized_mask_matches_brute():
    rng = np.random.default_rng(4)
    subs = list(enumerate_subspaces(F3, 3, 1)) + list(enumerate_subspaces(F3, 3, 2))
    gl = enumerate_gl(F3, 2)
    mats = []
    big = enumerate_gl(F3, 3)
    mats = [big[int(i)] for i in rng.integers(0, len(big), 25)]
    mask = stabilized_mask(F3, mats, subs)
    for mi, M in enumerate(mats):
        for si, W in enumerate(subs):
            assert mask[mi, si] == (W.apply(M) == W)


@pytest.mark.parametrize("ctx,n", [(F2, 2), (F3, 2), (F2, 3), (F3, 3), (F2, 4)])
def test_counting_claim_exhaustive(ctx, n):
    # every non-scalar invertible matrix stabilizes at most
    # (n-1 choose d)_q + (n-1 choose d-1)_q subspaces of dimension d
    gl = enumerate_gl(ctx, n)
    nonscalar = [M for M in gl if not is_scalar(M)]
    for d in range(1, n):
        subs = list(enumerate_subspaces(ctx, n, d))
        bound = stabilized_bound(n, d, ctx.q)
        chunk = 2048
        for start in range(0, len(nonscalar), chunk):
            mask = stabilized_mask(ctx, nonscalar[start : start + chunk], subs)
            counts = mask.sum(axis=1)
            assert counts.max() <= bound, (n, ctx.q, d, counts.max(), bound)


def test_pascal_and_monotonicity_grid():
    for q in (2, 3, 4, 5):
        for n in range(1, 13):
            for d in range(1, n + 1):
                assert gauss_binom(n, d, q) == q**d * gauss_binom(n - 1, d, q) + gauss_binom(n - 1, d - 1, q)
                if d <= n / 2:
                    assert gauss_binom(n - 1, d - 1, q) <= gauss_binom(n - 1, d, q)


# -- the adversary game ----------------------------------------------------------------


def test_adversary_zero_queries_two_consistent():
    def guess_now(transcript):
        return ("guess", None)

    rep = adversary_game(guess_now, F2, 2, 1)
    assert rep.outcome == "guess_refuted"
    assert rep.queries == 0
    assert rep.uncovered == gauss_binom(2, 1, 2)
    assert len(rep.witnesses) == 2
    w1, w2 = rep.witnesses
    assert w1 != w2


def test_adversary_soundness_witnesses():
    # while the adversary is alive, it can exhibit two consistent subspaces
    pool = reference_strategy(F3, 3)
    seen = []

    def probing(transcript):
        if len(transcript) >= 2:
            return ("guess", None)
        return pool(transcript)

    rep = adversary_game(probing, F3, 3, 1)
    if rep.outcome == "guess_refuted":
        assert rep.uncovered >= 2
        assert len(rep.witnesses) == 2


def test_adversary_scalar_quotients_merged():
    # querying a scalar multiple must reuse the previous label
    lam = FqMatrix(F3, [[2, 0], [0, 2]])
    I = FqMatrix.identity(F3, 2)
    seq = [I, lam]

    def strategy(transcript):
        if len(transcript) < 2:
            return ("query", seq[len(transcript)])
        return ("guess", None)

    rep = adversary_game(strategy, F3, 2, 1)
    # the scalar pair adds no coverage, so everything stays uncovered
    assert rep.uncovered == gauss_binom(2, 1, 3)


def test_certificate_example_4_2_2():
    # N^2 * 14 < 35 only guarantees freshness through N = 1; exact coverage
    # gives a larger true threshold
    total = gauss_binom(4, 2, 2)
    bound = stabilized_bound(4, 2, 2)
    assert bound == 14 and total == 35
    assert total - 1 * 1 * bound >= 2
    assert total - 2 * 2 * bound < 2
    rep = adversary_threshold(F2, 4, 2)
    assert rep.accountant == "exact"
    assert rep.queries > 2


def test_adversary_thresholds_nondecreasing_small():
    reps = [adversary_threshold(F2, 3, 1), adversary_threshold(F3, 3, 1)]
    assert reps[0].queries <= reps[1].queries
    for r in reps:
        assert r.outcome == "exhausted"


# -- the randomized experiment ------------------------------------------------------------


def test_randomized_zero_queries_accuracy():
    rep = randomized_bound_experiment(F2, 4, 2, query_counts=[0])
    assert rep.rows[0] == (0, 1 / gauss_binom(4, 2, 2))


def test_randomized_exhaustive_strategy_accuracy_one():
    gl = enumerate_gl(F2, 2)
    rep = randomized_bound_experiment(F2, 2, 1, query_counts=[len(gl)], strategy_mats=gl)
    assert rep.rows[0][1] == 1.0


def test_randomized_minimal_queries_monotone_small():
    m2 = randomized_bound_experiment(F2, 3, 1, query_counts=[0, 1, 2, 3, 4, 6, 8, 12], eps=0.25)
    m3 = randomized_bound_experiment(F3, 3, 1, query_counts=[0, 1, 2, 3, 4, 6, 8, 12], eps=0.25)
    assert m2.minimal_queries is not None and m3.minimal_queries is not None
    assert m2.minimal_queries <= m3.minimal_queries


def test_randomized_sampled_mode():
    rng = np.random.default_rng(5)
    rep = randomized_bound_experiment(F3, 4, 2, query_counts=[0, 8], trials=40, rng=rng)
    assert rep.sampled
    assert 0.0 <= rep.rows[0][1] <= 1.0
    assert rep.rows[1][1] >= rep.rows[0][1]
