"""Exact amplitude-level simulation of the quantum steps: uniform
superpositions over subsets of Mat_n(F_q) or F_q^m, the character-transform
QFT for the standard and trace bilinear forms, determinant post-selection,
and measurement.

States are dense complex arrays indexed by the mixed-radix encoding of the
entries (row-major, first entry most significant).  The transform is the
tensor-factorised character transform: one q x q kernel applied along every
axis, which costs O(dim . q . axes) instead of O(dim^2).  A compiled kernel
is used when available, with a numpy fallback selected at import time.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, EmptySet, ZeroMass
from .fq import FieldCtx
from .fqla import FqMatrix, batched_det, transpose_permutation, BilinearForm, _DT
from .fqla import random_invertible
from .oracles import OracleBase, VectorOracleBase

try:
    from ._transform_c import apply_axis_kernels as _apply_axis_kernels

    KERNEL_BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build environment
    from ._transform_py import apply_axis_kernels as _apply_axis_kernels

    KERNEL_BACKEND = "python"

from ._transform_py import apply_axis_kernels as _apply_axis_kernels_py

DEFAULT_DENSE_BUDGET = 2**25
DEFAULT_MASK_BUDGET = 2**20
NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixSpace:
    ctx: FieldCtx
    n: int

    @property
    def axes(self):
        return self.n * self.n

    @property
    def dim(self):
        return self.ctx.q**self.axes

    def encode(self, X) -> int:
        a = X.a if isinstance(X, FqMatrix) else np.asarray(X, dtype=_DT)
        digits = a.reshape(-1)
        idx = 0
        for d in digits:
            idx = idx * self.ctx.q + int(d)
        return idx

    def decode(self, idx: int) -> FqMatrix:
        digits = np.empty(self.axes, dtype=_DT)
        for i in range(self.axes - 1, -1, -1):
            digits[i] = idx % self.ctx.q
            idx //= self.ctx.q
        return FqMatrix(self.ctx, digits.reshape(self.n, self.n))

    def digit_stack(self):
        """All indices decoded at once, shape (dim, n, n)."""
        q, m = self.ctx.q, self.axes
        idx = np.arange(self.dim)
        digits = np.empty((self.dim, m), dtype=_DT)
        for i in range(m):
            digits[:, i] = (idx // q ** (m - 1 - i)) % q
        return digits.reshape(self.dim, self.n, self.n)


@dataclass(frozen=True)
class VectorSpace:
    ctx: FieldCtx
    m: int

    @property
    def axes(self):
        return self.m

    @property
    def dim(self):
        return self.ctx.q**self.m

    def encode(self, v) -> int:
        digits = np.asarray(v, dtype=_DT).reshape(-1)
        idx = 0
        for d in digits:
            idx = idx * self.ctx.q + int(d)
        return idx

    def decode(self, idx: int):
        digits = np.empty(self.m, dtype=_DT)
        for i in range(self.m - 1, -1, -1):
            digits[i] = idx % self.ctx.q
            idx //= self.ctx.q
        return digits

    def digit_stack(self):
        q, m = self.ctx.q, self.m
        idx = np.arange(self.dim)
        digits = np.empty((self.dim, m), dtype=_DT)
        for i in range(m):
            digits[:, i] = (idx // q ** (m - 1 - i)) % q
        return digits


class StateVector:
    __slots__ = ("space", "amps")

    def __init__(self, space, amps, check_norm=True):
        self.space = space
        self.amps = np.asarray(amps, dtype=np.complex128)
        if self.amps.shape != (space.dim,):
            raise ValueError("amplitude array has the wrong length")
        if check_norm and abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised: |norm-1| = {abs(self.norm()-1.0):.2e}")

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def __repr__(self):
        return f"StateVector(dim={self.space.dim})"


@dataclass
class MeasurementOutcome:
    index: int
    value: object
    probability: float
    sampled: bool = True  # False when taken from distribution() rather than drawn


# ---------------------------------------------------------------------------
# state construction
# ---------------------------------------------------------------------------


def subset_state(space, items, offset=None, budget=DEFAULT_DENSE_BUDGET) -> StateVector:
    """Uniform superposition over a set of matrices or vectors, optionally
    shifted elementwise by `offset` before indexing."""
    if space.dim > budget:
        raise BudgetExceeded(f"dense dim {space.dim} exceeds budget {budget}")
    ctx = space.ctx
    indices = []
    for it in items:
        raw = it.a if isinstance(it, FqMatrix) else np.asarray(it, dtype=_DT)
        if offset is not None:
            off = offset.a if isinstance(offset, FqMatrix) else np.asarray(offset, dtype=_DT)
            raw = ctx.ADD[raw, off]
        indices.append(space.encode(raw))
    if not indices:
        raise EmptySet("subset state over the empty set")
    uniq = set(indices)
    if len(uniq) != len(indices):
        raise ValueError("subset contains duplicates")
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[list(uniq)] = 1.0 / math.sqrt(len(indices))
    return StateVector(space, amps)


def basis_state(space, item, budget=DEFAULT_DENSE_BUDGET) -> StateVector:
    return subset_state(space, [item], budget=budget)


# ---------------------------------------------------------------------------
# the QFT
# ---------------------------------------------------------------------------


def _character_kernel(ctx):
    return ctx.CHAR[ctx.MUL] / math.sqrt(ctx.q)


def qft_phi(state: StateVector, form: BilinearForm, backend=None) -> StateVector:
    """QFT with respect to the given nonsingular symmetric form.

    Standard form: the tensor power of the length-q character transform along
    every coordinate.  Trace form on a matrix space: the same transform
    followed by the transpose permutation of the matrix entries.
    """
    space = state.space
    ctx = space.ctx
    out = state.amps.copy()
    apply = _apply_axis_kernels_py if backend == "python" else _apply_axis_kernels
    apply(out, _character_kernel(ctx), space.axes)
    if form.kind == BilinearForm.TRACE:
        if not isinstance(space, MatrixSpace):
            raise ValueError("trace form requires a matrix space")
        perm = transpose_permutation(space.n)
        out = (
            out.reshape((ctx.q,) * space.axes)
            .transpose(perm)
            .reshape(-1)
            .copy()
        )
    return StateVector(space, out)


def naive_qft_phi(state: StateVector, form: BilinearForm, budget=4096) -> StateVector:
    """Independent O(dim^2) realisation of the transform, for cross-checks.

    Builds the form table phi(u, v) row-block by row-block straight from the
    definition; never touches the tensor factorisation used by qft_phi.
    """
    space = state.space
    ctx = space.ctx
    dim = space.dim
    if dim > budget:
        raise BudgetExceeded("naive transform is quadratic in the dimension")
    digits = space.digit_stack().reshape(dim, space.axes)
    if form.kind == BilinearForm.TRACE:
        pair = digits[:, transpose_permutation(space.n)]
    else:
        pair = digits
    out = np.empty(dim, dtype=np.complex128)
    scale = 1.0 / math.sqrt(dim)
    block = 256
    for start in range(0, dim, block):
        stop = min(start + block, dim)
        phi = np.zeros((stop - start, dim), dtype=_DT)
        for k in range(space.axes):
            phi = ctx.ADD[phi, ctx.MUL[digits[start:stop, k][:, None], pair[None, :, k]]]
        out[start:stop] = scale * (ctx.CHAR[phi] @ state.amps)
    return StateVector(space, out, check_norm=False)


# ---------------------------------------------------------------------------
# post-selection, measurement
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _invertible_mask_cached(p, r, n, budget):
    from .fq import field_ctx

    ctx = field_ctx(p, r)
    space = MatrixSpace(ctx, n)
    if space.dim > budget:
        raise BudgetExceeded(f"invertibility mask for dim {space.dim} exceeds budget")
    dets = batched_det(ctx, space.digit_stack())
    return dets != 0


def invertible_mask(space: MatrixSpace, budget=DEFAULT_MASK_BUDGET):
    return _invertible_mask_cached(space.ctx.p, space.ctx.r, space.n, budget)


def postselect_invertible(state: StateVector, budget=DEFAULT_MASK_BUDGET):
    """Project onto invertible matrices and renormalise.

    Returns (new_state, success_probability); the caller accounts for the
    abort branch explicitly.
    """
    space = state.space
    if not isinstance(space, MatrixSpace):
        raise ValueError("post-selection needs a matrix-space state")
    mask = invertible_mask(space, budget)
    kept = state.amps * mask
    prob = float(np.vdot(kept, kept).real)
    if prob < 1e-15:
        raise ZeroMass("no amplitude on invertible matrices")
    return StateVector(space, kept / math.sqrt(prob)), prob


def distribution(state: StateVector):
    p = np.abs(state.amps) ** 2
    return p


def dump_distribution(state_or_probs, path):
    """Binary dump of a distribution: little-endian doubles, index order."""
    p = state_or_probs
    if isinstance(p, StateVector):
        p = distribution(p)
    with open(path, "wb") as fh:
        fh.write(np.asarray(p, dtype="<f8").tobytes())


def load_distribution(path):
    with open(path, "rb") as fh:
        return np.frombuffer(fh.read(), dtype="<f8").copy()


def measure(state: StateVector, rng) -> MeasurementOutcome:
    p = distribution(state)
    total = p.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError("measuring an unnormalised state")
    idx = int(rng.choice(state.space.dim, p=p / total))
    return MeasurementOutcome(idx, state.space.decode(idx), float(p[idx]))


# ---------------------------------------------------------------------------
# coset-state preparation
# ---------------------------------------------------------------------------


def _random_ambient(oracle: OracleBase, rng):
    amb = getattr(oracle, "_ambient_random", None)
    if amb is not None:
        drawn = amb(rng)
        if drawn is not None:
            return drawn
    return random_invertible(oracle.ctx, oracle.n, rng)


def prepare_coset_state(
    oracle, rng, budget=DEFAULT_DENSE_BUDGET, cross_checks=8
) -> StateVector:
    """One run of the prepare-evaluate-measure pipeline, exactly.

    Draws a uniform ambient element A, uses the oracle's seal to enumerate
    the coset through A, and returns the uniform superposition over it.
    Counts exactly one oracle query.  A few support elements are cross-checked
    against A's label.
    """
    if isinstance(oracle, VectorOracleBase):
        return prepare_vector_coset_state(oracle, rng, budget=budget)
    ctx, n = oracle.ctx, oracle.n
    space = MatrixSpace(ctx, n)
    if space.dim > budget:
        raise BudgetExceeded(f"dense dim {space.dim} exceeds budget {budget}")
    A = _random_ambient(oracle, rng)
    want = oracle.query(A)
    support = oracle._coset_support(A)
    take = min(cross_checks, len(support))
    for k in rng.choice(len(support), size=take, replace=False):
        assert oracle._label(support[int(k)]) == want, "coset support fails label check"
    return subset_state(space, support, budget=budget)


def prepare_vector_coset_state(voracle, rng, budget=DEFAULT_DENSE_BUDGET) -> StateVector:
    ctx, m = voracle.ctx, voracle.m
    space = VectorSpace(ctx, m)
    if space.dim > budget:
        raise BudgetExceeded(f"dense dim {space.dim} exceeds budget {budget}")
    x0 = rng.integers(0, ctx.q, size=m, dtype=np.int64).astype(_DT)
    voracle.query(x0)
    support = voracle._coset_support(x0)
    return subset_state(space, support, budget=budget)
