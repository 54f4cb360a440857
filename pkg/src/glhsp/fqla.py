"""Linear algebra over F_q: matrices, subspaces, flags, bilinear forms,
subspace sampling and the Grassmannian combinatorics.

Conventions
-----------
Vectors of F_q^n are column vectors and matrices act on the left, so the
image of a row-encoded vector v under X is ``v @ X.T``.  A :class:`Subspace`
stores its basis as the rows of a reduced-row-echelon matrix; that canonical
form makes subspace equality, hashing and flag comparison exact.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import AmbientMismatch, BudgetExceeded, CtxMismatch, ShapeMismatch, Singular
from .fq import FieldCtx, FieldElem

_DT = np.int16

DEFAULT_ENUM_BUDGET = 10**6


# ---------------------------------------------------------------------------
# raw-array core (entries are element indices)
# ---------------------------------------------------------------------------


def _as_array(ctx, data):
    a = np.asarray(data, dtype=_DT)
    if a.ndim == 1:
        a = a[None, :]
    if np.any(a < 0) or np.any(a >= ctx.q):
        raise ValueError("entry index out of range")
    return a


def mat_mul(ctx, A, B):
    if A.shape[1] != B.shape[0]:
        raise ShapeMismatch(f"{A.shape} @ {B.shape}")
    out = np.zeros((A.shape[0], B.shape[1]), dtype=_DT)
    for k in range(A.shape[1]):
        out = ctx.ADD[out, ctx.MUL[A[:, k][:, None], B[k, :][None, :]]]
    return out


def mat_rref(ctx, M):
    """Reduced row echelon form; returns (rref, pivot column list)."""
    R = M.astype(_DT).copy()
    rows, cols = R.shape
    pivots = []
    pr = 0
    for c in range(cols):
        pivot = None
        for rr in range(pr, rows):
            if R[rr, c]:
                pivot = rr
                break
        if pivot is None:
            continue
        if pivot != pr:
            R[[pr, pivot]] = R[[pivot, pr]]
        R[pr] = ctx.MUL[ctx.INV[R[pr, c]], R[pr]]
        for rr in range(rows):
            if rr != pr and R[rr, c]:
                R[rr] = ctx.ADD[R[rr], ctx.MUL[ctx.NEG[R[rr, c]], R[pr]]]
        pivots.append(c)
        pr += 1
        if pr == rows:
            break
    return R, pivots


def mat_rank(ctx, M):
    return len(mat_rref(ctx, M)[1])


def mat_det(ctx, M):
    if M.shape[0] != M.shape[1]:
        raise ShapeMismatch("determinant of a non-square matrix")
    R = M.astype(_DT).copy()
    n = R.shape[0]
    det = 1
    for c in range(n):
        pivot = None
        for rr in range(c, n):
            if R[rr, c]:
                pivot = rr
                break
        if pivot is None:
            return 0
        if pivot != c:
            R[[c, pivot]] = R[[pivot, c]]
            det = ctx.neg(det)
        det = ctx.mul(det, int(R[c, c]))
        inv = ctx.INV[R[c, c]]
        for rr in range(c + 1, n):
            if R[rr, c]:
                f = ctx.MUL[inv, R[rr, c]]
                R[rr] = ctx.ADD[R[rr], ctx.MUL[ctx.NEG[f], R[c]]]
    return det


def mat_inverse(ctx, M):
    n = M.shape[0]
    if M.shape[0] != M.shape[1]:
        raise ShapeMismatch("inverse of a non-square matrix")
    aug = np.hstack([M, np.eye(n, dtype=_DT)])
    R, pivots = mat_rref(ctx, aug)
    if pivots[: n if len(pivots) >= n else len(pivots)] != list(range(n)):
        raise Singular("matrix is not invertible")
    return R[:, n:].copy()


def mat_kernel_basis(ctx, M):
    """RREF basis (rows) of {x : M x = 0}."""
    R, pivots = mat_rref(ctx, M)
    n = M.shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=_DT)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = ctx.neg(int(R[i, f]))
    B, _ = mat_rref(ctx, basis)
    return B[: len(free)]


def reduce_vector(ctx, basis, pivots, v):
    """Residue of row vector v modulo the row space of an RREF basis."""
    out = v.astype(_DT).copy()
    for i, pc in enumerate(pivots):
        if out[pc]:
            out = ctx.ADD[out, ctx.MUL[ctx.NEG[out[pc]], basis[i]]]
    return out


def batched_det(ctx, E):
    """Determinants of a stack of matrices, shape (N, n, n) -> (N,).

    Laplace expansion along the first row with memoised minors; all steps are
    table lookups vectorised over the stack.
    """
    n = E.shape[1]
    memo = {}

    def rec(row, cols):
        if len(cols) == 1:
            return E[:, row, cols[0]]
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = np.zeros(E.shape[0], dtype=_DT)
        for k, c in enumerate(cols):
            minor = rec(row + 1, cols[:k] + cols[k + 1 :])
            term = ctx.MUL[E[:, row, c], minor]
            if k % 2:
                term = ctx.NEG[term]
            acc = ctx.ADD[acc, term]
        memo[key] = acc
        return acc

    return rec(0, tuple(range(n)))


# ---------------------------------------------------------------------------
# FqMatrix
# ---------------------------------------------------------------------------


class FqMatrix:
    __slots__ = ("ctx", "a")

    def __init__(self, ctx: FieldCtx, data):
        self.ctx = ctx
        self.a = _as_array(ctx, data)
        self.a.setflags(write=False)

    @classmethod
    def identity(cls, ctx, n):
        return cls(ctx, np.eye(n, dtype=_DT))

    @classmethod
    def zeros(cls, ctx, rows, cols):
        return cls(ctx, np.zeros((rows, cols), dtype=_DT))

    @property
    def rows(self):
        return self.a.shape[0]

    @property
    def cols(self):
        return self.a.shape[1]

    def _check(self, other):
        if self.ctx != other.ctx:
            raise CtxMismatch("matrices from different field contexts")

    def __matmul__(self, other):
        self._check(other)
        return FqMatrix(self.ctx, mat_mul(self.ctx, self.a, other.a))

    def __add__(self, other):
        self._check(other)
        if self.a.shape != other.a.shape:
            raise ShapeMismatch(f"{self.a.shape} + {other.a.shape}")
        return FqMatrix(self.ctx, self.ctx.ADD[self.a, other.a])

    def __sub__(self, other):
        self._check(other)
        if self.a.shape != other.a.shape:
            raise ShapeMismatch(f"{self.a.shape} - {other.a.shape}")
        return FqMatrix(self.ctx, self.ctx.ADD[self.a, self.ctx.NEG[other.a]])

    @property
    def T(self):
        return FqMatrix(self.ctx, self.a.T.copy())

    def inverse(self):
        return FqMatrix(self.ctx, mat_inverse(self.ctx, self.a))

    def det(self) -> FieldElem:
        return FieldElem(self.ctx, mat_det(self.ctx, self.a))

    def is_invertible(self) -> bool:
        return self.rows == self.cols and mat_det(self.ctx, self.a) != 0

    def rank(self) -> int:
        return mat_rank(self.ctx, self.a)

    def rref(self):
        return FqMatrix(self.ctx, mat_rref(self.ctx, self.a)[0])

    def kernel(self) -> "Subspace":
        return Subspace(self.ctx, self.cols, mat_kernel_basis(self.ctx, self.a))

    def image(self) -> "Subspace":
        """Column space."""
        return Subspace.from_rows(self.ctx, self.rows, self.a.T)

    def apply(self, v):
        """Image of a row-encoded vector under this matrix (acting on columns)."""
        v = np.asarray(v, dtype=_DT)
        return mat_mul(self.ctx, v[None, :], self.a.T)[0]

    def encode(self) -> str:
        flat = ",".join(str(int(x)) for x in self.a.reshape(-1))
        return f"{self.rows}x{self.cols}:{flat}"

    @classmethod
    def decode(cls, ctx, text):
        shape, flat = text.split(":")
        rows, cols = (int(x) for x in shape.split("x"))
        data = np.array([int(x) for x in flat.split(",")], dtype=_DT).reshape(rows, cols)
        return cls(ctx, data)

    def __eq__(self, other):
        return (
            isinstance(other, FqMatrix)
            and self.ctx == other.ctx
            and self.a.shape == other.a.shape
            and np.array_equal(self.a, other.a)
        )

    def __hash__(self):
        return hash((self.ctx.q, self.a.shape, self.a.tobytes()))

    def __repr__(self):
        return f"FqMatrix(q={self.ctx.q},\n{self.a})"


# ---------------------------------------------------------------------------
# Subspace
# ---------------------------------------------------------------------------


class Subspace:
    """A subspace of F_q^n held as a canonical RREF row basis."""

    __slots__ = ("ctx", "n", "basis")

    def __init__(self, ctx: FieldCtx, n: int, basis):
        self.ctx = ctx
        self.n = n
        b = np.asarray(basis, dtype=_DT).reshape(-1, n)
        R, pivots = mat_rref(ctx, b)
        self.basis = R[: len(pivots)].copy()
        self.basis.setflags(write=False)

    @classmethod
    def from_rows(cls, ctx, n, rows):
        return cls(ctx, n, rows)

    @classmethod
    def zero(cls, ctx, n):
        return cls(ctx, n, np.zeros((0, n), dtype=_DT))

    @classmethod
    def full(cls, ctx, n):
        return cls(ctx, n, np.eye(n, dtype=_DT))

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def pivots(self):
        return [int(np.argmax(self.basis[i] != 0)) for i in range(self.dim)]

    def _check(self, other):
        if self.ctx != other.ctx or self.n != other.n:
            raise AmbientMismatch(f"ambient {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        return Subspace(self.ctx, self.n, np.vstack([self.basis, other.basis]))

    def __and__(self, other):
        """Intersection by the Zassenhaus block trick."""
        self._check(other)
        n = self.n
        top = np.hstack([self.basis, self.basis])
        bot = np.hstack([other.basis, np.zeros_like(other.basis)])
        R, pivots = mat_rref(self.ctx, np.vstack([top, bot]))
        rows = [R[i, n:] for i, pc in enumerate(pivots) if pc >= n]
        if not rows:
            return Subspace.zero(self.ctx, n)
        return Subspace(self.ctx, n, np.vstack(rows))

    def contains_vector(self, v) -> bool:
        v = np.asarray(v, dtype=_DT)
        return not reduce_vector(self.ctx, self.basis, self.pivots, v).any()

    def contains(self, other) -> bool:
        self._check(other)
        return all(self.contains_vector(other.basis[i]) for i in range(other.dim))

    def __ge__(self, other):
        return self.contains(other)

    def __le__(self, other):
        return other.contains(self)

    def __lt__(self, other):
        return self.dim < other.dim and other.contains(self)

    def __gt__(self, other):
        return other < self

    def direct_complement(self) -> "Subspace":
        """Span of the standard basis vectors at the non-pivot columns.

        Deterministic; complements the RREF pivot structure exactly.
        """
        piv = set(self.pivots)
        rows = [np.eye(self.n, dtype=_DT)[j] for j in range(self.n) if j not in piv]
        if not rows:
            return Subspace.zero(self.ctx, self.n)
        return Subspace(self.ctx, self.n, np.vstack(rows))

    def apply(self, X: FqMatrix) -> "Subspace":
        """Image subspace X . self."""
        return Subspace(self.ctx, self.n, mat_mul(self.ctx, self.basis, X.a.T))

    def enumerate_vectors(self):
        """All q^dim vectors, coefficient tuples in index order."""
        q, d = self.ctx.q, self.dim
        for coeffs in itertools.product(range(q), repeat=d):
            v = np.zeros(self.n, dtype=_DT)
            for c, row in zip(coeffs, self.basis):
                v = self.ctx.ADD[v, self.ctx.MUL[np.int16(c), row]]
            yield v

    def encode(self) -> str:
        flat = ",".join(str(int(x)) for x in self.basis.reshape(-1))
        return f"{self.dim}/{self.n}:{flat}"

    @classmethod
    def decode(cls, ctx, text):
        head, flat = text.split(":")
        dim, n = (int(x) for x in head.split("/"))
        if dim == 0:
            return cls.zero(ctx, n)
        data = np.array([int(x) for x in flat.split(",")], dtype=_DT).reshape(dim, n)
        return cls(ctx, n, data)

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.ctx == other.ctx
            and self.n == other.n
            and self.basis.shape == other.basis.shape
            and np.array_equal(self.basis, other.basis)
        )

    def __hash__(self):
        return hash((self.ctx.q, self.n, self.basis.tobytes()))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, n={self.n})"


# ---------------------------------------------------------------------------
# Flag
# ---------------------------------------------------------------------------


class Flag:
    """A strictly decreasing chain of proper nonzero subspaces.

    The ambient space and 0 are implicit, so the trivial flag has an empty
    chain.  The parameter lists the consecutive dimension drops.
    """

    __slots__ = ("ctx", "n", "chain")

    def __init__(self, ctx: FieldCtx, n: int, chain=()):
        chain = tuple(chain)
        dims = [n] + [u.dim for u in chain] + [0]
        for u in chain:
            if u.ctx != ctx or u.n != n:
                raise AmbientMismatch("flag member in wrong ambient space")
        if any(d2 >= d1 for d1, d2 in zip(dims, dims[1:])):
            raise ValueError(f"flag dimensions not strictly decreasing: {dims}")
        for u1, u2 in zip(chain, chain[1:]):
            if not u1.contains(u2):
                raise ValueError("flag chain is not nested")
        self.ctx = ctx
        self.n = n
        self.chain = chain

    @property
    def length(self):
        return len(self.chain) + 1

    @property
    def parameter(self):
        dims = [self.n] + [u.dim for u in self.chain] + [0]
        return tuple(d1 - d2 for d1, d2 in zip(dims, dims[1:]))

    @property
    def smallest(self):
        """The last proper member (None for the trivial flag)."""
        return self.chain[-1] if self.chain else None

    def is_complete(self):
        return self.length == self.n

    def apply(self, X: FqMatrix) -> "Flag":
        return Flag(self.ctx, self.n, [u.apply(X) for u in self.chain])

    def encode(self) -> str:
        return "flag:" + "|".join(u.encode() for u in self.chain)

    @classmethod
    def decode(cls, ctx, text):
        assert text.startswith("flag:")
        body = text[len("flag:") :]
        if not body:
            raise ValueError("flag encoding must carry the ambient dimension")
        parts = body.split("|")
        subs = [Subspace.decode(ctx, p) for p in parts if p]
        if not subs:
            raise ValueError("cannot decode a trivial flag without ambient info")
        return cls(ctx, subs[0].n, subs)

    def __eq__(self, other):
        return (
            isinstance(other, Flag)
            and self.ctx == other.ctx
            and self.n == other.n
            and self.chain == other.chain
        )

    def __hash__(self):
        return hash((self.ctx.q, self.n, self.chain))

    def __repr__(self):
        dims = [u.dim for u in self.chain]
        return f"Flag(n={self.n}, dims={dims})"


# ---------------------------------------------------------------------------
# Bilinear forms and perpendicular spaces
# ---------------------------------------------------------------------------


class BilinearForm:
    """Either the standard inner product on F_q^m or the trace form tr(AB)
    on Mat_n(F_q) seen as F_q^(n^2) with row-major coordinates."""

    STANDARD = "standard"
    TRACE = "trace"

    def __init__(self, kind, n=None):
        if kind not in (self.STANDARD, self.TRACE):
            raise ValueError(kind)
        if kind == self.TRACE and n is None:
            raise ValueError("trace form needs the matrix size n")
        self.kind = kind
        self.n = n

    def __repr__(self):
        return f"BilinearForm({self.kind})"


def standard_form():
    return BilinearForm(BilinearForm.STANDARD)


def trace_form(n):
    return BilinearForm(BilinearForm.TRACE, n)


def transpose_permutation(n):
    """Permutation of row-major matrix coordinates induced by transposition."""
    perm = np.empty(n * n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            perm[i * n + j] = j * n + i
    return perm


def perp(W: Subspace, form: BilinearForm) -> Subspace:
    """Perpendicular subspace with respect to a nonsingular form.

    For the trace form tr(AB) on Mat_n, perpendicularity against B is the
    standard inner product against B^T, so the basis columns are permuted by
    the transpose map before taking a kernel.
    """
    basis = W.basis
    if form.kind == BilinearForm.TRACE:
        if W.n != form.n * form.n:
            raise AmbientMismatch("trace form ambient must be n^2")
        basis = basis[:, transpose_permutation(form.n)]
    if W.dim == 0:
        return Subspace.full(W.ctx, W.n)
    return Subspace(W.ctx, W.n, mat_kernel_basis(W.ctx, basis))


# ---------------------------------------------------------------------------
# Random sampling
# ---------------------------------------------------------------------------


def random_matrix(ctx, rows, cols, rng) -> FqMatrix:
    return FqMatrix(ctx, rng.integers(0, ctx.q, size=(rows, cols), dtype=np.int64))


def random_invertible(ctx, n, rng) -> FqMatrix:
    """Uniform over GL_n(F_q) by rejection on the determinant.

    The acceptance rate is at least 0.288 for every (n, q), so the expected
    number of draws is below 4.
    """
    while True:
        M = random_matrix(ctx, n, n, rng)
        if mat_det(ctx, M.a) != 0:
            return M


def random_subspace(ctx, n, d, rng) -> Subspace:
    """Uniform d-dimensional subspace of F_q^n.

    A uniform d x n matrix conditioned on full rank hits every subspace
    through equally many matrices, so rejection plus canonicalisation is
    exactly uniform on the Grassmannian.
    """
    if not 0 <= d <= n:
        raise ValueError(f"dimension {d} out of range for ambient {n}")
    if d == 0:
        return Subspace.zero(ctx, n)
    while True:
        M = rng.integers(0, ctx.q, size=(d, n), dtype=np.int64).astype(_DT)
        if mat_rank(ctx, M) == d:
            return Subspace(ctx, n, M)


def random_hyperplane(ctx, n, rng) -> Subspace:
    return random_subspace(ctx, n, n - 1, rng)


def random_flag(ctx, n, shape, rng) -> Flag:
    """Uniformly conjugated flag with the given parameter shape."""
    if sum(shape) != n or any(s <= 0 for s in shape):
        raise ValueError(f"shape {shape} is not a composition of {n}")
    M = random_invertible(ctx, n, rng)
    chain = []
    dim = n
    for part in shape[:-1]:
        dim -= part
        chain.append(Subspace(ctx, n, M.a[n - dim :, :]))
    return Flag(ctx, n, chain)


# ---------------------------------------------------------------------------
# Grassmannian combinatorics
# ---------------------------------------------------------------------------


def gauss_binom(a: int, b: int, q: int) -> int:
    """Number of b-dimensional subspaces of F_q^a, as an exact integer."""
    if a < 0 or b < 0:
        raise ValueError("negative arguments")
    if b > a:
        return 0
    num = 1
    den = 1
    for i in range(b):
        num *= q**a - q**i
        den *= q**b - q**i
    assert num % den == 0
    return num // den


def enumerate_subspaces(ctx, n, d, budget=DEFAULT_ENUM_BUDGET):
    """Yield every d-dimensional subspace of F_q^n exactly once.

    Each subspace appears through its unique RREF basis; the stream is sorted
    by the flattened canonical basis, so the order is reproducible.
    """
    q = ctx.q
    count = gauss_binom(n, d, q)
    if count > budget:
        raise BudgetExceeded(f"{count} subspaces exceed budget {budget}")
    if d == 0:
        yield Subspace.zero(ctx, n)
        return
    out = []
    for pivots in itertools.combinations(range(n), d):
        free = [
            (i, j)
            for i in range(d)
            for j in range(n)
            if j not in pivots and j > pivots[i]
        ]
        base = np.zeros((d, n), dtype=_DT)
        for i, pc in enumerate(pivots):
            base[i, pc] = 1
        for fill in itertools.product(range(q), repeat=len(free)):
            B = base.copy()
            for (i, j), v in zip(free, fill):
                B[i, j] = v
            out.append(B)
    out.sort(key=lambda B: B.reshape(-1).tobytes())
    for B in out:
        s = Subspace.__new__(Subspace)
        s.ctx = ctx
        s.n = n
        B.setflags(write=False)
        s.basis = B
        yield s


def solve_left(ctx, A, b):
    """One solution x (row) of x @ A = b, or None if inconsistent."""
    # x @ A = b  <=>  A^T x^T = b^T: solve via RREF of [A^T | b^T]
    At = A.T.astype(_DT)
    aug = np.hstack([At, np.asarray(b, dtype=_DT)[:, None]])
    R, pivots = mat_rref(ctx, aug)
    cols = A.shape[0]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=_DT)
    for i, pc in enumerate(pivots):
        x[pc] = R[i, cols]
    return x
