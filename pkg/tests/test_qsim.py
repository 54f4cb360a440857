"""Exact simulator: superpositions, the character-transform QFT,
post-selection, measurement, and coset-state preparation."""

import itertools
import math

import numpy as np
import pytest

from glhsp.errors import BudgetExceeded, EmptySet, ZeroMass
from glhsp.fq import field_ctx
from glhsp.fqla import (
    Flag,
    FqMatrix,
    Subspace,
    perp,
    random_flag,
    random_invertible,
    random_subspace,
    standard_form,
    trace_form,
)
from glhsp.oracles import (
    AffineComplement,
    AffineG,
    ParabolicOfFlag,
    enumerate_gl,
    gl_order,
    make_oracle,
    setwise_stabilizer,
)
from glhsp.qsim import (
    KERNEL_BACKEND,
    MatrixSpace,
    MeasurementOutcome,
    StateVector,
    VectorSpace,
    basis_state,
    distribution,
    measure,
    naive_qft_phi,
    postselect_invertible,
    prepare_coset_state,
    qft_phi,
    subset_state,
)

F2 = field_ctx(2)
F3 = field_ctx(3)
F4 = field_ctx(2, 2)
F5 = field_ctx(5)


def random_state(space, rng):
    a = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    a /= np.linalg.norm(a)
    return StateVector(space, a)


# -- encodings and subset states ------------------------------------------------


def test_space_encode_decode_roundtrip():
    rng = np.random.default_rng(0)
    sp = MatrixSpace(F3, 2)
    for _ in range(30):
        M = random_invertible(F3, 2, rng)
        assert sp.decode(sp.encode(M)) == M
    vp = VectorSpace(F4, 3)
    for _ in range(30):
        v = rng.integers(0, 4, size=3, dtype=np.int64).astype(np.int16)
        assert np.array_equal(vp.decode(vp.encode(v)), v)


def test_subset_state_examples():
    sp = VectorSpace(F2, 3)
    z = basis_state(sp, np.zeros(3, dtype=np.int16))
    assert z.amps[0] == 1 and np.count_nonzero(z.amps) == 1

    full = subset_state(sp, list(Subspace.full(F2, 3).enumerate_vectors()))
    assert np.allclose(full.amps, 2 ** (-1.5))

    rng = np.random.default_rng(1)
    msp = MatrixSpace(F2, 2)
    borel = ParabolicOfFlag(Flag(F2, 2, [Subspace(F2, 2, [[0, 1]])]))
    A = random_invertible(F2, 2, rng)
    coset = [A @ h for h in borel.enumerate()]
    st = subset_state(msp, coset)
    nz = np.flatnonzero(st.amps)
    assert len(nz) == 2
    assert np.allclose(np.abs(st.amps[nz]), 1 / math.sqrt(2))


def test_subset_state_errors():
    sp = VectorSpace(F2, 2)
    with pytest.raises(EmptySet):
        subset_state(sp, [])
    with pytest.raises(BudgetExceeded):
        subset_state(VectorSpace(F2, 30), [np.zeros(30, dtype=np.int16)])
    with pytest.raises(ValueError):
        subset_state(sp, [np.zeros(2, dtype=np.int16)] * 2)


# -- the QFT -----------------------------------------------------------------


def test_qft_of_zero_is_uniform():
    for space in (VectorSpace(F3, 2), MatrixSpace(F2, 2)):
        z = basis_state(space, np.zeros((space.axes,), dtype=np.int16).reshape(
            (space.n, space.n) if isinstance(space, MatrixSpace) else -1))
        form = trace_form(space.n) if isinstance(space, MatrixSpace) else standard_form()
        u = qft_phi(z, form)
        assert np.allclose(u.amps, space.dim ** -0.5)


@pytest.mark.parametrize(
    "space,form",
    [
        (VectorSpace(F2, 6), standard_form()),
        (VectorSpace(F3, 4), standard_form()),
        (VectorSpace(F4, 3), standard_form()),
        (VectorSpace(F5, 3), standard_form()),
        (MatrixSpace(F2, 2), trace_form(2)),
        (MatrixSpace(F3, 2), trace_form(2)),
        (MatrixSpace(F4, 2), trace_form(2)),
        (MatrixSpace(F2, 3), trace_form(3)),
    ],
)
def test_fast_matches_naive(space, form):
    rng = np.random.default_rng(2)
    for _ in range(5):
        st = random_state(space, rng)
        fast = qft_phi(st, form)
        slow = naive_qft_phi(st, form)
        assert np.abs(fast.amps - slow.amps).max() < 1e-9
        assert abs(fast.norm() - 1.0) < 1e-9


def test_backends_agree():
    rng = np.random.default_rng(3)
    for space in (VectorSpace(F2, 10), VectorSpace(F3, 6), VectorSpace(F4, 5)):
        st = random_state(space, rng)
        a = qft_phi(st, standard_form())
        b = qft_phi(st, standard_form(), backend="python")
        assert np.abs(a.amps - b.amps).max() < 1e-12
    assert KERNEL_BACKEND in ("compiled", "python")


def test_subspace_coset_to_perp_uniform():
    rng = np.random.default_rng(4)
    for ctx, m in [(F2, 4), (F2, 6), (F3, 3), (F4, 2), (F5, 2)]:
        sp = VectorSpace(ctx, m)
        for d in range(m + 1):
            W = random_subspace(ctx, m, d, rng)
            Wp = perp(W, standard_form())
            perp_idx = {sp.encode(v) for v in Wp.enumerate_vectors()}
            for _ in range(3):
                v0 = rng.integers(0, ctx.q, size=m, dtype=np.int64).astype(np.int16)
                st = subset_state(sp, list(W.enumerate_vectors()), offset=v0)
                p = distribution(qft_phi(st, standard_form()))
                inside = sum(p[i] for i in perp_idx)
                assert abs(inside - 1.0) < 1e-9
                for i in perp_idx:
                    assert abs(p[i] - 1.0 / len(perp_idx)) < 1e-9


def test_subset_amplitude_formula():
    # |c_u| for u in W-perp when the state is a coset of a subset of W
    rng = np.random.default_rng(5)
    for trial in range(100):
        ctx, m = [(F2, 5), (F3, 3), (F4, 3), (F5, 2)][trial % 4]
        sp = VectorSpace(ctx, m)
        W = random_subspace(ctx, m, int(rng.integers(1, m + 1)), rng)
        wvecs = list(W.enumerate_vectors())
        size = int(rng.integers(1, len(wvecs) + 1))
        chosen = [wvecs[i] for i in rng.choice(len(wvecs), size=size, replace=False)]
        v0 = rng.integers(0, ctx.q, size=m, dtype=np.int64).astype(np.int16)
        st = subset_state(sp, chosen, offset=v0)
        out = qft_phi(st, standard_form())
        Wp = perp(W, standard_form())
        want = math.sqrt(len(chosen)) / math.sqrt(len(wvecs)) / math.sqrt(ctx.q**Wp.dim)
        assert abs(want - math.sqrt(len(chosen) / sp.dim)) < 1e-12
        for u in Wp.enumerate_vectors():
            assert abs(abs(out.amps[sp.encode(u)]) - want) < 1e-9


def test_qft_unitary_moderate_spaces():
    rng = np.random.default_rng(6)
    for space in (VectorSpace(F2, 12), VectorSpace(F3, 7), MatrixSpace(F3, 2), MatrixSpace(F2, 3)):
        for _ in range(5):
            st = random_state(space, rng)
            form = trace_form(space.n) if isinstance(space, MatrixSpace) else standard_form()
            assert abs(qft_phi(st, form).norm() - 1.0) < 1e-9


def test_qft_unitary_hundred_states_per_space():
    rng = np.random.default_rng(60)
    for space in (VectorSpace(F2, 8), VectorSpace(F3, 5), VectorSpace(F4, 4), MatrixSpace(F2, 2), MatrixSpace(F5, 2)):
        form = trace_form(space.n) if isinstance(space, MatrixSpace) else standard_form()
        for _ in range(100):
            st = random_state(space, rng)
            assert abs(qft_phi(st, form).norm() - 1.0) < 1e-9


def test_trace_qft_basis_invariance():
    # conjugating state labels and the event set leaves the QFT mass unchanged
    rng = np.random.default_rng(7)
    n, ctx = 2, F3
    sp = MatrixSpace(ctx, n)
    U = random_subspace(ctx, n, 1, rng)
    H = setwise_stabilizer(U)
    A = random_invertible(ctx, n, rng)
    coset = [A @ h for h in H.enumerate()]
    st = subset_state(sp, coset)
    event = [
        FqMatrix(ctx, M.a)
        for M in (sp.decode(i) for i in range(sp.dim))
        if U.contains(M.image()) and not M.apply(U.basis[0]).any()
    ]
    event = [M @ A.inverse() for M in event]
    p = distribution(qft_phi(st, trace_form(n)))
    mass = sum(p[sp.encode(M)] for M in event)

    P = random_invertible(ctx, n, rng)
    Pinv = P.inverse()
    conj_state = np.zeros(sp.dim, dtype=complex)
    for i in np.flatnonzero(st.amps):
        X = sp.decode(int(i))
        conj_state[sp.encode(P @ X @ Pinv)] = st.amps[i]
    p2 = distribution(qft_phi(StateVector(sp, conj_state), trace_form(n)))
    mass2 = sum(p2[sp.encode(P @ M @ Pinv)] for M in event)
    assert abs(mass - mass2) < 1e-9


# -- post-selection -------------------------------------------------------------


def test_postselect_examples():
    sp = MatrixSpace(F2, 2)
    uniform = StateVector(sp, np.full(16, 0.25, dtype=complex))
    st, prob = postselect_invertible(uniform)
    assert abs(prob - 6 / 16) < 1e-12
    assert abs(st.norm() - 1.0) < 1e-12

    sp3 = MatrixSpace(F3, 2)
    _, prob3 = postselect_invertible(StateVector(sp3, np.full(81, 1 / 9, dtype=complex)))
    assert abs(prob3 - 48 / 81) < 1e-12

    gl = enumerate_gl(F2, 2)
    st_gl = subset_state(sp, gl)
    _, prob_gl = postselect_invertible(st_gl)
    assert abs(prob_gl - 1.0) < 1e-12


def test_postselect_zero_mass():
    sp = MatrixSpace(F2, 2)
    amps = np.zeros(16, dtype=complex)
    amps[0] = 1.0  # the zero matrix
    with pytest.raises(ZeroMass):
        postselect_invertible(StateVector(sp, amps))


def test_postselect_matches_gl_order():
    for ctx, n in [(F2, 2), (F2, 3), (F3, 2), (F4, 2), (F5, 2), (F3, 3)]:
        sp = MatrixSpace(ctx, n)
        uniform = StateVector(sp, np.full(sp.dim, sp.dim**-0.5, dtype=complex))
        _, prob = postselect_invertible(uniform)
        assert abs(prob - gl_order(ctx.q, n) / sp.dim) < 1e-12


# -- measurement ----------------------------------------------------------------


def test_measure_basis_state():
    sp = VectorSpace(F3, 2)
    v = np.array([2, 1], dtype=np.int16)
    st = basis_state(sp, v)
    out = measure(st, np.random.default_rng(8))
    assert isinstance(out, MeasurementOutcome)
    assert np.array_equal(out.value, v)
    assert abs(out.probability - 1.0) < 1e-12


def test_distribution_uniform_on_perp():
    W = Subspace(F2, 4, [[1, 0, 0, 1], [0, 1, 1, 0]])
    sp = VectorSpace(F2, 4)
    st = subset_state(sp, list(W.enumerate_vectors()))
    p = distribution(qft_phi(st, standard_form()))
    nz = p[p > 1e-12]
    assert len(nz) == 4
    assert np.allclose(nz, 0.25)


def test_measure_distribution_consistency():
    rng = np.random.default_rng(9)
    sp = VectorSpace(F3, 2)
    st = random_state(sp, rng)
    p = distribution(st)
    counts = np.zeros(sp.dim)
    for _ in range(4000):
        counts[measure(st, rng).index] += 1
    assert np.abs(counts / 4000 - p).max() < 0.05


# -- coset-state preparation -----------------------------------------------------


def test_prepare_coset_full_group():
    rng = np.random.default_rng(10)
    orc = make_oracle(ParabolicOfFlag(Flag(F2, 2, [])), "left")
    st = prepare_coset_state(orc, rng)
    nz = np.flatnonzero(np.abs(st.amps))
    assert len(nz) == 6  # |GL_2(F_2)|
    assert np.allclose(np.abs(st.amps[nz]), 6**-0.5)


def test_prepare_coset_borel_two_points():
    rng = np.random.default_rng(11)
    borel = ParabolicOfFlag(Flag(F2, 2, [Subspace(F2, 2, [[0, 1]])]))
    orc = make_oracle(borel, "left")
    before = orc.query_count
    st = prepare_coset_state(orc, rng)
    assert orc.query_count == before + 1
    sp = MatrixSpace(F2, 2)
    nz = np.flatnonzero(np.abs(st.amps))
    assert len(nz) == 2
    labels = {orc._label(sp.decode(int(i))) for i in nz}
    assert len(labels) == 1


def test_distribution_binary_dump(tmp_path):
    import struct

    from glhsp.qsim import dump_distribution, load_distribution

    W = Subspace(F2, 3, [[1, 1, 0]])
    sp = VectorSpace(F2, 3)
    st = qft_phi(subset_state(sp, list(W.enumerate_vectors())), standard_form())
    p = distribution(st)
    path = tmp_path / "dist.bin"
    dump_distribution(st, path)
    raw = path.read_bytes()
    assert len(raw) == 8 * sp.dim
    # little-endian doubles in index order
    for i in range(sp.dim):
        (val,) = struct.unpack("<d", raw[8 * i : 8 * i + 8])
        assert abs(val - p[i]) < 1e-15
    back = load_distribution(path)
    assert np.array_equal(back, p.astype("<f8"))


def test_prepare_coset_right_affine():
    rng = np.random.default_rng(12)
    spec = AffineComplement(F5, 2, np.array([3], dtype=np.int16))
    orc = make_oracle(spec, "right")
    st = prepare_coset_state(orc, rng)
    sp = MatrixSpace(F5, 2)
    nz = np.flatnonzero(np.abs(st.amps))
    assert len(nz) == 4  # |H_v| = q - 1
    labels = {orc._label(sp.decode(int(i))) for i in nz}
    assert len(labels) == 1
