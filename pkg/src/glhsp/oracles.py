"""Subgroup families of GL_n(F_q) and the coset-labelling oracles that hide them.

Each family knows how to test membership, produce a verified generating set,
enumerate itself within a budget, and label cosets in closed form.  A
:class:`HidingOracle` seals the family member away from algorithm code: the
only counted operation is ``query``, which returns an opaque byte string that
is equal across two matrices exactly when they lie in the same (left or
right) coset.
"""

from __future__ import annotations

import itertools
import struct
import threading

import numpy as np

from .errors import BudgetExceeded, UnsupportedFamily
from .fq import FieldCtx
from .fqla import (
    DEFAULT_ENUM_BUDGET,
    Flag,
    FqMatrix,
    Subspace,
    mat_inverse,
    mat_mul,
    mat_rref,
    batched_det,
    perp,
    reduce_vector,
    standard_form,
    _DT,
)


def _label_bytes(kind: str, payload: str) -> bytes:
    body = f"{kind}|{payload}".encode()
    return struct.pack(">I", len(body)) + body


def gl_order(q: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= q**m - q**i
    return out


_GL_CACHE = {}


def enumerate_gl(ctx: FieldCtx, m: int, budget=DEFAULT_ENUM_BUDGET):
    """All of GL_m(F_q) as a list of FqMatrix, in index order (cached)."""
    key = (ctx.p, ctx.r, m)
    if key in _GL_CACHE:
        return _GL_CACHE[key]
    total = ctx.q ** (m * m)
    if total > budget:
        raise BudgetExceeded(f"GL_{m}(F_{ctx.q}) scan needs {total} candidates")
    idx = np.arange(total)
    digits = np.empty((total, m * m), dtype=_DT)
    for i in range(m * m):
        digits[:, i] = (idx // ctx.q ** (m * m - 1 - i)) % ctx.q
    stack = digits.reshape(total, m, m)
    dets = batched_det(ctx, stack)
    keep = stack[dets != 0]
    out = [FqMatrix(ctx, keep[i]) for i in range(keep.shape[0])]
    assert len(out) == gl_order(ctx.q, m)
    _GL_CACHE[key] = out
    return out


def _field_basis_indices(ctx):
    """Indices of 1, t, t^2, ..., an F_p-basis of F_q."""
    return [ctx.p**e for e in range(ctx.r)]


def _adapted_basis(ctx, n, members):
    """Invertible P whose last dim(U) columns span U, for each U in the
    decreasing list `members` (proper subspaces, smallest last)."""
    vecs = []
    span = Subspace.zero(ctx, n)
    for U in reversed(list(members)):
        fresh = []
        for row in U.basis:
            if not span.contains_vector(row):
                fresh.append(row)
                span = span + Subspace(ctx, n, row[None, :])
        vecs = fresh + vecs
    for row in np.eye(n, dtype=_DT):
        if not span.contains_vector(row):
            vecs.insert(0, row)
            span = span + Subspace(ctx, n, row[None, :])
    P = np.vstack(vecs).T.copy()
    return P, mat_inverse(ctx, P)


def _gens_from_positions(ctx, n, positions, diag_offsets, P, Pinv):
    """Transvections at the given (row, col) positions over an F_p-basis of
    F_q, plus one primitive-element diagonal per offset, conjugated by P."""
    gens = []
    scalars = _field_basis_indices(ctx)
    for i, j in positions:
        for s in scalars:
            M = np.eye(n, dtype=_DT)
            M[i, j] = s
            gens.append(FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, P, M), Pinv)))
    if ctx.generator != 1:
        for o in diag_offsets:
            M = np.eye(n, dtype=_DT)
            M[o, o] = ctx.generator
            gens.append(FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, P, M), Pinv)))
    if not gens:
        gens.append(FqMatrix.identity(ctx, n))
    return gens


def _block_index(shape):
    out = []
    for b, size in enumerate(shape):
        out.extend([b] * size)
    return out


def _free_fills(ctx, count):
    return itertools.product(range(ctx.q), repeat=count)


class SubgroupSpec:
    """Base class: a symbolic description of one subgroup family member."""

    ctx: FieldCtx
    n: int

    def contains(self, X: FqMatrix) -> bool:
        raise NotImplementedError

    def generators(self):
        raise NotImplementedError

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        raise NotImplementedError

    def order(self) -> int:
        raise NotImplementedError

    def label(self, X: FqMatrix, side: str) -> bytes:
        raise NotImplementedError

    def identity(self) -> FqMatrix:
        return FqMatrix.identity(self.ctx, self.n)


# ---------------------------------------------------------------------------
# flag stabilizers
# ---------------------------------------------------------------------------


class ParabolicOfFlag(SubgroupSpec):
    def __init__(self, flag: Flag):
        self.flag = flag
        self.ctx = flag.ctx
        self.n = flag.n
        self._P, self._Pinv = _adapted_basis(self.ctx, self.n, flag.chain)

    def contains(self, X):
        return all(U.apply(X) == U for U in self.flag.chain)

    def _positions(self):
        shape = self.flag.parameter
        blk = _block_index(shape)
        return [
            (i, j)
            for i in range(self.n)
            for j in range(self.n)
            if i != j and blk[i] >= blk[j]
        ]

    def generators(self):
        shape = self.flag.parameter
        offs = list(itertools.accumulate((0,) + shape[:-1]))
        return _gens_from_positions(self.ctx, self.n, self._positions(), offs, self._P, self._Pinv)

    def order(self):
        shape = self.flag.parameter
        q = self.ctx.q
        out = 1
        for s in shape:
            out *= gl_order(q, s)
        blk = _block_index(shape)
        below = sum(1 for i in range(self.n) for j in range(self.n) if blk[i] > blk[j])
        return out * q**below

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded(f"subgroup order {self.order()} exceeds budget")
        ctx, n = self.ctx, self.n
        shape = self.flag.parameter
        blk = _block_index(shape)
        offs = list(itertools.accumulate((0,) + shape[:-1]))
        below = [(i, j) for i in range(n) for j in range(n) if blk[i] > blk[j]]
        block_lists = [enumerate_gl(ctx, s) for s in shape]
        for diag in itertools.product(*block_lists):
            base = np.zeros((n, n), dtype=_DT)
            for o, s, D in zip(offs, shape, diag):
                base[o : o + s, o : o + s] = D.a
            for fill in _free_fills(ctx, len(below)):
                M = base.copy()
                for (i, j), v in zip(below, fill):
                    M[i, j] = v
                yield FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, self._P, M), self._Pinv))

    def label(self, X, side):
        Y = X if side == "left" else X.inverse()
        img = self.flag.apply(Y)
        return _label_bytes("flag", img.encode())


def setwise_stabilizer(U: Subspace) -> ParabolicOfFlag:
    """The maximal parabolic G_{U}: stabilizer of the length-2 flag V > U > 0."""
    return ParabolicOfFlag(Flag(U.ctx, U.n, [U]))


class FullUnipotentOfFlag(SubgroupSpec):
    def __init__(self, flag: Flag):
        if not flag.is_complete():
            raise ValueError("full unipotent groups require a complete flag")
        self.flag = flag
        self.ctx = flag.ctx
        self.n = flag.n
        self._P, self._Pinv = _adapted_basis(self.ctx, self.n, flag.chain)

    def contains(self, X):
        members = [Subspace.full(self.ctx, self.n)] + list(self.flag.chain) + [
            Subspace.zero(self.ctx, self.n)
        ]
        XI = X - FqMatrix.identity(self.ctx, self.n)
        for U, Unext in zip(members, members[1:]):
            img = Subspace(self.ctx, self.n, mat_mul(self.ctx, U.basis, XI.a.T))
            if not Unext.contains(img):
                return False
        return True

    def generators(self):
        positions = [(i, j) for i in range(self.n) for j in range(i)]
        return _gens_from_positions(self.ctx, self.n, positions, [], self._P, self._Pinv)

    def order(self):
        return self.ctx.q ** (self.n * (self.n - 1) // 2)

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("unipotent group too large")
        ctx, n = self.ctx, self.n
        positions = [(i, j) for i in range(n) for j in range(i)]
        for fill in _free_fills(ctx, len(positions)):
            M = np.eye(n, dtype=_DT)
            for (i, j), v in zip(positions, fill):
                M[i, j] = v
            yield FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, self._P, M), self._Pinv))

    def _reduce(self, M):
        """Canonical representative of M modulo right multiplication by unit
        lower triangular matrices: rightmost-first column reduction."""
        ctx, n = self.ctx, self.n
        R = M.astype(_DT).copy()
        pivots = []  # (row, col) of processed columns, newest first
        for j in range(n - 1, -1, -1):
            for prow, pcol in pivots:
                if R[prow, j]:
                    lam = ctx.mul(int(R[prow, j]), ctx.inv(int(R[prow, pcol])))
                    R[:, j] = ctx.ADD[R[:, j], ctx.MUL[ctx.NEG[np.int16(lam)], R[:, pcol]]]
            nz = np.nonzero(R[:, j])[0]
            pivots.append((int(nz[0]), j))
        return R

    def label(self, X, side):
        Y = X if side == "left" else X.inverse()
        M = mat_mul(self.ctx, mat_mul(self.ctx, self._Pinv, Y.a), self._P)
        red = self._reduce(M)
        return _label_bytes("unip", FqMatrix(self.ctx, red).encode())


# ---------------------------------------------------------------------------
# pointwise stabilizers and the affine family
# ---------------------------------------------------------------------------


class PointwiseStabilizer(SubgroupSpec):
    def __init__(self, U: Subspace):
        self.U = U
        self.ctx = U.ctx
        self.n = U.n
        self._P, self._Pinv = _adapted_basis(self.ctx, self.n, [U])

    def contains(self, X):
        img = mat_mul(self.ctx, self.U.basis, X.a.T)
        return np.array_equal(img, self.U.basis)

    def generators(self):
        d = self.U.dim
        m = self.n - d
        positions = [(i, j) for i in range(m) for j in range(m) if i != j]
        positions += [(i, j) for i in range(m, self.n) for j in range(m)]
        offs = [0] if m else []
        return _gens_from_positions(self.ctx, self.n, positions, offs, self._P, self._Pinv)

    def order(self):
        d = self.U.dim
        m = self.n - d
        return gl_order(self.ctx.q, m) * self.ctx.q ** (d * m)

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("pointwise stabilizer too large")
        ctx, n = self.ctx, self.n
        d = self.U.dim
        m = n - d
        below = [(i, j) for i in range(m, n) for j in range(m)]
        for B in enumerate_gl(ctx, m) if m else [FqMatrix(ctx, np.zeros((0, 0), dtype=_DT))]:
            base = np.eye(n, dtype=_DT)
            base[:m, :m] = B.a
            for fill in _free_fills(ctx, len(below)):
                M = base.copy()
                for (i, j), v in zip(below, fill):
                    M[i, j] = v
                yield FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, self._P, M), self._Pinv))

    def label(self, X, side):
        Y = X if side == "left" else X.inverse()
        img = mat_mul(self.ctx, self.U.basis, Y.a.T)
        return _label_bytes("pstab", FqMatrix(self.ctx, img).encode())


def _standard_hyperplane(ctx, n):
    return Subspace(ctx, n, np.eye(n, dtype=_DT)[1:])


class AffineG(SubgroupSpec):
    """Matrices [[b, 0], [v, I]]: the pointwise stabilizer of <e_2, ..., e_n>."""

    def __init__(self, ctx, n):
        self.ctx = ctx
        self.n = n
        self._inner = PointwiseStabilizer(_standard_hyperplane(ctx, n))

    def contains(self, X):
        return self._inner.contains(X)

    def generators(self):
        return self._inner.generators()

    def order(self):
        return (self.ctx.q - 1) * self.ctx.q ** (self.n - 1)

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("affine group too large")
        ctx, n = self.ctx, self.n
        for b in range(1, ctx.q):
            for v in itertools.product(range(ctx.q), repeat=n - 1):
                M = np.eye(n, dtype=_DT)
                M[0, 0] = b
                M[1:, 0] = v
                yield FqMatrix(ctx, M)

    def label(self, X, side):
        return self._inner.label(X, side)

    @staticmethod
    def decompose(X: FqMatrix):
        """Return (b, v) for an affine-form matrix, validating the shape."""
        n = X.rows
        a = X.a
        eye = np.eye(n, dtype=_DT)
        if a[0, 0] == 0 or not np.array_equal(a[:, 1:], eye[:, 1:]):
            raise ValueError("matrix is not in the affine ambient group")
        return int(a[0, 0]), a[1:, 0].copy()

    def compose(self, b, v):
        M = np.eye(self.n, dtype=_DT)
        M[0, 0] = b
        M[1:, 0] = np.asarray(v, dtype=_DT)
        return FqMatrix(self.ctx, M)


def _linear_space_label(ctx, X, side, yspace_mats, tag):
    """Coset label for a subgroup of the shape (I + Y-space) intersect GL.

    The coset through X is the affine matrix space X + X.Yspace (left) or
    X + Yspace.X (right); the label is that affine space in canonical form.
    """
    n = X.rows
    rows = []
    for Y in yspace_mats:
        prod = mat_mul(ctx, X.a, Y) if side == "left" else mat_mul(ctx, Y, X.a)
        rows.append(prod.reshape(-1))
    if rows:
        basis, pivots = mat_rref(ctx, np.vstack(rows))
        basis = basis[: len(pivots)]
    else:
        basis, pivots = np.zeros((0, n * n), dtype=_DT), []
    rep = reduce_vector(ctx, basis, pivots, X.a.reshape(-1))
    payload = (
        ",".join(str(int(x)) for x in basis.reshape(-1))
        + ";"
        + ",".join(str(int(x)) for x in rep)
    )
    return _label_bytes(tag, payload)


def _outer_products(ctx, cols_basis, rows_basis):
    """Matrices c^T r for c in cols_basis rows, r in rows_basis rows."""
    out = []
    for c in cols_basis:
        for f in rows_basis:
            out.append(mat_mul(ctx, c[:, None].astype(_DT), f[None, :].astype(_DT)))
    return out


class AffineN(SubgroupSpec):
    """The abelian normal subgroup [[1, 0], [v, I]] of the affine group."""

    def __init__(self, ctx, n):
        self.ctx = ctx
        self.n = n
        eye = np.eye(n, dtype=_DT)
        self._yspace = _outer_products(ctx, eye[1:], eye[:1])

    def contains(self, X):
        a = X.a
        eye = np.eye(self.n, dtype=_DT)
        return bool(a[0, 0] == 1 and np.array_equal(a[:, 1:], eye[:, 1:]))

    def generators(self):
        gens = []
        for s in _field_basis_indices(self.ctx):
            for i in range(1, self.n):
                M = np.eye(self.n, dtype=_DT)
                M[i, 0] = s
                gens.append(FqMatrix(self.ctx, M))
        return gens

    def order(self):
        return self.ctx.q ** (self.n - 1)

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("affine normal subgroup too large")
        for v in itertools.product(range(self.ctx.q), repeat=self.n - 1):
            M = np.eye(self.n, dtype=_DT)
            M[1:, 0] = v
            yield FqMatrix(self.ctx, M)

    def label(self, X, side):
        return _linear_space_label(self.ctx, X, side, self._yspace, "affn")


class AffineComplement(SubgroupSpec):
    """H_v = {[[b, 0], [(b-1)v, I]] : b nonzero}, a complement of AffineN."""

    def __init__(self, ctx, n, v):
        self.ctx = ctx
        self.n = n
        self.v = np.asarray(v, dtype=_DT)
        if self.v.shape != (n - 1,):
            raise ValueError("v must have length n-1")

    def contains(self, X):
        try:
            b, w = AffineG.decompose(X)
        except ValueError:
            return False
        want = self.ctx.MUL[np.int16(self.ctx.sub(b, 1)), self.v]
        return np.array_equal(w, want)

    def generators(self):
        g = self.ctx.generator
        coeff = np.int16(self.ctx.sub(g, 1))
        M = np.eye(self.n, dtype=_DT)
        M[0, 0] = g
        M[1:, 0] = self.ctx.MUL[coeff, self.v]
        return [FqMatrix(self.ctx, M)]

    def order(self):
        return self.ctx.q - 1

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        for b in range(1, self.ctx.q):
            M = np.eye(self.n, dtype=_DT)
            M[0, 0] = b
            M[1:, 0] = self.ctx.MUL[np.int16(self.ctx.sub(b, 1)), self.v]
            yield FqMatrix(self.ctx, M)

    def label(self, X, side):
        b, w = AffineG.decompose(X)
        ctx = self.ctx
        if side == "right":
            # H_v X has a unique member with unit top-left entry: its lower
            # column is w + (1 - b) v.
            coeff = np.int16(ctx.sub(1, b))
            rep = ctx.ADD[w, ctx.MUL[coeff, self.v]]
        else:
            binv = ctx.inv(b)
            rep = ctx.ADD[ctx.MUL[np.int16(binv), w], ctx.MUL[np.int16(ctx.sub(binv, 1)), self.v]]
        return _label_bytes("affc", ",".join(str(int(x)) for x in rep))


# ---------------------------------------------------------------------------
# linear-space subgroups from the verification lemma
# ---------------------------------------------------------------------------


class SpaceL(SubgroupSpec):
    """{X in GL(V) : (X - I)V <= W}."""

    def __init__(self, W: Subspace):
        if W.dim == 0 or W.dim == W.n:
            raise ValueError("W must be a proper nonzero subspace")
        self.W = W
        self.ctx = W.ctx
        self.n = W.n
        eye = np.eye(self.n, dtype=_DT)
        self._yspace = _outer_products(self.ctx, W.basis, eye)
        self._P, self._Pinv = _adapted_basis(self.ctx, self.n, [W])

    def contains(self, X):
        if not X.is_invertible():
            return False
        XI = X - FqMatrix.identity(self.ctx, self.n)
        img = Subspace(self.ctx, self.n, XI.a.T)
        return self.W.contains(img)

    def generators(self):
        d = self.W.dim
        m = self.n - d
        positions = [(i, j) for i in range(m, self.n) for j in range(m)]
        positions += [(i, j) for i in range(m, self.n) for j in range(m, self.n) if i != j]
        offs = [m]
        return _gens_from_positions(self.ctx, self.n, positions, offs, self._P, self._Pinv)

    def order(self):
        d = self.W.dim
        return gl_order(self.ctx.q, d) * self.ctx.q ** (d * (self.n - d))

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("subgroup too large")
        ctx, n = self.ctx, self.n
        d = self.W.dim
        m = n - d
        cpos = [(i, j) for i in range(m, n) for j in range(m)]
        for D in enumerate_gl(ctx, d):
            base = np.eye(n, dtype=_DT)
            base[m:, m:] = D.a
            for fill in _free_fills(ctx, len(cpos)):
                M = base.copy()
                for (i, j), v in zip(cpos, fill):
                    M[i, j] = v
                yield FqMatrix(ctx, mat_mul(ctx, mat_mul(ctx, self._P, M), self._Pinv))

    def label(self, X, side):
        return _linear_space_label(self.ctx, X, side, self._yspace, "spl")


class SpaceLPrime(SubgroupSpec):
    """{X : (X - I)V <= W' and (X - I)W' = 0} for a complement W' of W.

    Abelian, isomorphic to the additive group of Hom(V/W', W').
    """

    def __init__(self, W: Subspace, Wprime: Subspace):
        if (W + Wprime).dim != W.n or W.dim + Wprime.dim != W.n:
            raise ValueError("W and W' must be direct complements")
        self.W = W
        self.Wprime = Wprime
        self.ctx = W.ctx
        self.n = W.n
        funcs = perp(Wprime, standard_form()).basis
        self._yspace = _outer_products(self.ctx, Wprime.basis, funcs)

    def contains(self, X):
        XI = X - FqMatrix.identity(self.ctx, self.n)
        img = Subspace(self.ctx, self.n, XI.a.T)
        if not self.Wprime.contains(img):
            return False
        killed = mat_mul(self.ctx, self.Wprime.basis, XI.a.T)
        return not killed.any()

    def generators(self):
        gens = []
        for s in _field_basis_indices(self.ctx):
            for Y in self._yspace:
                M = self.ctx.ADD[np.eye(self.n, dtype=_DT), self.ctx.MUL[np.int16(s), Y]]
                gens.append(FqMatrix(self.ctx, M))
        return gens

    def basis_elem(self, idx, scalar=1):
        """I + scalar * Y_idx, the idx-th coordinate direction of the group."""
        M = self.ctx.ADD[
            np.eye(self.n, dtype=_DT), self.ctx.MUL[np.int16(scalar), self._yspace[idx]]
        ]
        return FqMatrix(self.ctx, M)

    @property
    def coord_dim(self):
        return len(self._yspace)

    def from_coords(self, x):
        M = np.eye(self.n, dtype=_DT)
        for c, Y in zip(x, self._yspace):
            M = self.ctx.ADD[M, self.ctx.MUL[np.int16(int(c)), Y]]
        return FqMatrix(self.ctx, M)

    def order(self):
        return self.ctx.q ** len(self._yspace)

    def enumerate(self, budget=DEFAULT_ENUM_BUDGET):
        if self.order() > budget:
            raise BudgetExceeded("subgroup too large")
        for coords in itertools.product(range(self.ctx.q), repeat=len(self._yspace)):
            yield self.from_coords(coords)

    def label(self, X, side):
        return _linear_space_label(self.ctx, X, side, self._yspace, "splp")


def hyperplane_stabilizer_n(Uprime: Subspace) -> SpaceLPrime:
    """The unipotent pointwise-stabiliser N of a hyperplane: {X : (X-I)V <= U'
    and X fixes U' pointwise}, isomorphic to F_q^(n-1)."""
    if Uprime.dim != Uprime.n - 1:
        raise ValueError("N is defined for hyperplanes")
    return SpaceLPrime(Uprime.direct_complement(), Uprime)


# ---------------------------------------------------------------------------
# module-level operation surface
# ---------------------------------------------------------------------------


def membership(X: FqMatrix, spec: SubgroupSpec) -> bool:
    return spec.contains(X)


def generators(spec: SubgroupSpec):
    return spec.generators()


def enumerate_subgroup(spec: SubgroupSpec, budget=DEFAULT_ENUM_BUDGET):
    return spec.enumerate(budget=budget)


def closure(gens, budget=DEFAULT_ENUM_BUDGET):
    """BFS closure of a generating set; for desk-scale verification."""
    if not gens:
        raise ValueError("closure of an empty generating set")
    ident = FqMatrix.identity(gens[0].ctx, gens[0].rows)
    seen = {ident}
    frontier = [ident]
    while frontier:
        new = []
        for X in frontier:
            for g in gens:
                Y = X @ g
                if Y not in seen:
                    seen.add(Y)
                    new.append(Y)
                    if len(seen) > budget:
                        raise BudgetExceeded("closure exceeded budget")
        frontier = new
    return seen


# ---------------------------------------------------------------------------
# hiding oracles
# ---------------------------------------------------------------------------


def _random_affine(ctx, n, rng):
    """Uniform element of the affine ambient group [[b, 0], [v, I]]."""
    M = np.eye(n, dtype=_DT)
    M[0, 0] = rng.integers(1, ctx.q)
    M[1:, 0] = rng.integers(0, ctx.q, size=n - 1, dtype=np.int64).astype(_DT)
    return FqMatrix(ctx, M)


class OracleBase:
    """Common interface: counted queries plus sealed helpers for the simulator."""

    n: int
    ctx: FieldCtx
    side: str

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def query(self, X: FqMatrix) -> bytes:
        with self._lock:
            self._count += 1
        return self._label(X)

    @property
    def query_count(self) -> int:
        return self._count

    def _label(self, X) -> bytes:
        raise NotImplementedError

    def _ambient(self):
        """Sealed: iterate the oracle's ambient group."""
        raise NotImplementedError

    def _coset_support(self, A: FqMatrix):
        """Sealed: all ambient elements sharing A's label (A's coset)."""
        want = self._label(A)
        return [X for X in self._ambient() if self._label(X) == want]

    def identity(self):
        return FqMatrix.identity(self.ctx, self.n)


class HidingOracle(OracleBase):
    """Oracle for a sealed SubgroupSpec, labelling left or right cosets."""

    def __init__(self, spec: SubgroupSpec, side: str = "left"):
        if side not in ("left", "right"):
            raise ValueError(side)
        super().__init__()
        self.__spec = spec
        self.side = side
        self.n = spec.n
        self.ctx = spec.ctx

    def _label(self, X):
        return self.__spec.label(X, self.side)

    def _ambient(self):
        if isinstance(self.__spec, (AffineComplement,)):
            return AffineG(self.ctx, self.n).enumerate()
        return enumerate_gl(self.ctx, self.n)

    def _ambient_random(self, rng):
        if isinstance(self.__spec, (AffineComplement,)):
            return _random_affine(self.ctx, self.n, rng)
        return None

    def _coset_support(self, A):
        if self.side == "left":
            return [A @ h for h in self.__spec.enumerate()]
        return [h @ A for h in self.__spec.enumerate()]

    def unseal(self) -> SubgroupSpec:
        """Test-harness hook; algorithm code must not call this."""
        return self.__spec


def make_oracle(spec: SubgroupSpec, side: str = "left") -> HidingOracle:
    if not isinstance(spec, SubgroupSpec):
        raise UnsupportedFamily(f"not a subgroup family: {spec!r}")
    return HidingOracle(spec, side)


class SideFlipOracle(OracleBase):
    """Presents a right-coset oracle as a left-coset one (and vice versa)
    by composing with matrix inversion."""

    def __init__(self, parent: OracleBase):
        super().__init__()
        self.parent = parent
        self.side = "left" if parent.side == "right" else "right"
        self.n = parent.n
        self.ctx = parent.ctx

    def query(self, X):
        return self.parent.query(X.inverse())

    @property
    def query_count(self):
        return self.parent.query_count

    def _label(self, X):
        return self.parent._label(X.inverse())

    def _ambient(self):
        return self.parent._ambient()


class DualOracle(OracleBase):
    """Left-hides the transposed subgroup H^T given a left oracle for H.

    f((X^-1)^T) is constant exactly on left cosets of {h^T : h in H}; for a
    setwise stabilizer of U the dual group stabilizes U-perp.
    """

    def __init__(self, parent: OracleBase):
        if parent.side != "left":
            raise ValueError("dual wrapper expects a left-coset oracle")
        super().__init__()
        self.parent = parent
        self.side = "left"
        self.n = parent.n
        self.ctx = parent.ctx

    def _transform(self, X):
        return X.inverse().T

    def query(self, X):
        return self.parent.query(self._transform(X))

    @property
    def query_count(self):
        return self.parent.query_count

    def _label(self, X):
        return self.parent._label(self._transform(X))

    def _ambient(self):
        return enumerate_gl(self.ctx, self.n)


class RestrictedOracle(OracleBase):
    """The parent oracle composed with a group embedding GL_m -> GL_n.

    Hides the pullback of the parent's hidden subgroup; queries count against
    the parent (and thus the root) counter.
    """

    def __init__(self, parent: OracleBase, embed, m: int):
        if parent.side != "left":
            raise ValueError("restriction expects a left-coset oracle")
        super().__init__()
        self.parent = parent
        self.embed = embed
        self.side = "left"
        self.n = m
        self.ctx = parent.ctx

    def query(self, X):
        return self.parent.query(self.embed(X))

    @property
    def query_count(self):
        return self.parent.query_count

    def _label(self, X):
        return self.parent._label(self.embed(X))

    def _ambient(self):
        return enumerate_gl(self.ctx, self.n)


class AffineRestrictedOracle(OracleBase):
    """Right-coset oracle over the affine ambient group, from a left oracle
    for H composed with an embedding of the affine group into GL(V)."""

    def __init__(self, parent: OracleBase, embed, n: int):
        if parent.side != "left":
            raise ValueError("affine restriction expects a left-coset oracle")
        super().__init__()
        self.parent = parent
        self.embed = embed
        self.side = "right"
        self.n = n
        self.ctx = parent.ctx

    def _transform(self, M):
        return self.embed(M).inverse()

    def query(self, M):
        return self.parent.query(self._transform(M))

    @property
    def query_count(self):
        return self.parent.query_count

    def _label(self, M):
        return self.parent._label(self._transform(M))

    def _ambient(self):
        return AffineG(self.ctx, self.n).enumerate()

    def _ambient_random(self, rng):
        return _random_affine(self.ctx, self.n, rng)


# ---------------------------------------------------------------------------
# vector-group oracles (additive groups F_q^m)
# ---------------------------------------------------------------------------


class VectorOracleBase:
    m: int
    ctx: FieldCtx

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def query(self, x) -> bytes:
        with self._lock:
            self._count += 1
        return self._label(x)

    @property
    def query_count(self):
        return self._count

    def _label(self, x) -> bytes:
        raise NotImplementedError

    def _coset_support(self, x0, budget=2**16):
        if self.ctx.q**self.m > budget:
            raise BudgetExceeded("vector oracle domain too large to scan")
        want = self._label(x0)
        out = []
        for coords in itertools.product(range(self.ctx.q), repeat=self.m):
            x = np.array(coords, dtype=_DT)
            if self._label(x) == want:
                out.append(x)
        return out


class SubspaceVectorOracle(VectorOracleBase):
    """Hides a linear subspace W of the additive group F_q^m."""

    def __init__(self, W: Subspace):
        super().__init__()
        self.__W = W
        self.ctx = W.ctx
        self.m = W.n

    def _label(self, x):
        rep = reduce_vector(self.ctx, self.__W.basis, self.__W.pivots, np.asarray(x, dtype=_DT))
        return _label_bytes("vec", ",".join(str(int(c)) for c in rep))

    def _coset_support(self, x0, budget=2**16):
        return [self.ctx.ADD[np.asarray(x0, dtype=_DT), w] for w in self.__W.enumerate_vectors()]

    def unseal(self):
        return self.__W


class RestrictedVectorOracle(VectorOracleBase):
    """The parent matrix oracle composed with a homomorphism F_q^m -> GL(V).

    If the parent hides H, this hides the subspace psi^{-1}(H intersect im psi).
    """

    def __init__(self, parent: OracleBase, psi, m: int):
        super().__init__()
        self.parent = parent
        self.psi = psi
        self.m = m
        self.ctx = parent.ctx

    def query(self, x):
        return self.parent.query(self.psi(x))

    @property
    def query_count(self):
        return self.parent.query_count

    def _label(self, x):
        return self.parent._label(self.psi(x))
