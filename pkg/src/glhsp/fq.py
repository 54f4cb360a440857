"""Arithmetic in F_q = F_{p^r}, the trace map down to F_p, and the additive character.

Elements are integer indices in [0, q).  An index encodes the coefficient
tuple (c_0, ..., c_{r-1}) of a residue polynomial c_0 + c_1 t + ... in base p
with c_0 least significant, so index order is the lexicographic order on
reversed coefficient tuples.  All arithmetic goes through precomputed q x q
tables, which keeps element operations O(1) and lets matrix code over F_q
vectorise with numpy fancy indexing.
"""

from __future__ import annotations

import cmath
import functools

import numpy as np

from .errors import CtxMismatch

_TABLE_DTYPE = np.int16
_MAX_Q = 4096  # tables are dense q x q


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


# -- polynomial helpers over F_p (little-endian coefficient tuples) --------


def _poly_trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _poly_trim(out)


def _poly_mod(a, m, p):
    a = list(a)
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm and a:
        a = _poly_trim(a)
        if len(a) - 1 < dm:
            break
        shift = len(a) - 1 - dm
        factor = (a[-1] * inv_lead) % p
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - factor * c) % p
        a = _poly_trim(a)
    return a


def poly_is_irreducible(coeffs, p) -> bool:
    """Exhaustive trial division by every monic polynomial of degree <= deg/2."""
    poly = _poly_trim(coeffs)
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        for idx in range(p**d):
            div = [(idx // p**i) % p for i in range(d)] + [1]
            if not _poly_mod(poly, div, p):
                return False
    return True


def _find_modulus(p: int, r: int):
    """Smallest monic irreducible of degree r, by base-p index of the low coefficients."""
    for idx in range(p**r):
        coeffs = [(idx // p**i) % p for i in range(r)] + [1]
        if poly_is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise AssertionError("no irreducible polynomial found")  # cannot happen


class FieldCtx:
    """Immutable context for F_{p^r} with dense arithmetic tables.

    Use :func:`field_ctx` to construct; contexts are cached per (p, r) and are
    safe to share freely across threads.
    """

    def __init__(self, p: int, r: int):
        if not is_prime(p):
            raise ValueError(f"p={p} is not prime")
        if r < 1:
            raise ValueError(f"r={r} must be positive")
        q = p**r
        if q > _MAX_Q:
            raise ValueError(f"q={q} exceeds the table budget {_MAX_Q}")
        self.p = p
        self.r = r
        self.q = q
        self.modulus = _find_modulus(p, r)
        assert poly_is_irreducible(self.modulus, p)

        # digit decomposition of every element index, shape (q, r)
        idx = np.arange(q)
        digits = np.empty((q, r), dtype=_TABLE_DTYPE)
        for i in range(r):
            digits[:, i] = (idx // p**i) % p
        self._digits = digits
        self._weights = np.array([p**i for i in range(r)], dtype=np.int64)

        self.ADD = self._encode((digits[:, None, :] + digits[None, :, :]) % p)
        self.NEG = self._encode((-digits) % p)
        self.SUB = self.ADD[:, self.NEG]
        self.MUL = self._build_mul()
        self.INV = self._build_inv()

        # trace Tr(x) = sum of the r Frobenius iterates x^(p^i)
        frob = self._pow_all(p)
        acc = np.arange(q, dtype=_TABLE_DTYPE)
        tr = acc.copy()
        for _ in range(r - 1):
            acc = frob[acc]
            tr = self.ADD[tr, acc]
        assert np.all(tr < p), "trace landed outside the prime subfield"
        self.TRACE = tr
        omega = cmath.exp(2j * cmath.pi / p)
        self.CHAR = np.array([omega ** int(t) for t in tr], dtype=np.complex128)

        self.zero = 0
        self.one = 1
        self.generator = self._find_generator()

    # -- construction helpers ----------------------------------------------

    def _encode(self, digit_array):
        return np.tensordot(digit_array.astype(np.int64), self._weights, axes=([-1], [0])).astype(
            _TABLE_DTYPE
        )

    def _mul_by_t(self, coeffs):
        p, r = self.p, self.r
        out = [0] + list(coeffs)
        if out[r]:
            c = out[r]
            for i in range(r):
                out[i] = (out[i] - c * self.modulus[i]) % p
        return out[:r]

    def _build_mul(self):
        p, r, q = self.p, self.r, self.q
        # SHIFT[a][j] = index of t^a * elem_j
        shift = np.empty((r, q), dtype=np.int64)
        shift[0] = np.arange(q)
        for a in range(1, r):
            for j in range(q):
                coeffs = [int(self._digits[shift[a - 1, j], i]) for i in range(r)]
                coeffs = self._mul_by_t(coeffs)
                shift[a, j] = int(np.dot(coeffs, self._weights))
        # scalar (prime subfield) times element table, shape (p, q)
        smul = self._encode((np.arange(self.p)[:, None, None] * self._digits[None, :, :]) % p)
        mul = np.zeros((q, q), dtype=_TABLE_DTYPE)
        for a in range(r):
            mul = self.ADD[mul, smul[self._digits[:, a][:, None], shift[a][None, :]]]
        return mul

    def _build_inv(self):
        q = self.q
        inv = np.full(q, -1, dtype=_TABLE_DTYPE)
        where = np.argwhere(self.MUL == 1)
        for a, b in where:
            inv[a] = b
        assert np.all(inv[1:] >= 0)
        return inv

    def _pow_all(self, e):
        """Index table x -> x**e for every element."""
        out = np.ones(self.q, dtype=_TABLE_DTYPE)
        base = np.arange(self.q, dtype=_TABLE_DTYPE)
        while e:
            if e & 1:
                out = self.MUL[out, base]
            base = self.MUL[base, base]
            e >>= 1
        return out

    def _find_generator(self):
        for g in range(1, self.q):
            x, order = g, 1
            while x != 1:
                x = int(self.MUL[x, g])
                order += 1
            if order == self.q - 1:
                return g
        return 1  # q == 2

    # -- element-level operations -------------------------------------------

    def add(self, a, b):
        return int(self.ADD[a, b])

    def sub(self, a, b):
        return int(self.SUB[a, b])

    def mul(self, a, b):
        return int(self.MUL[a, b])

    def neg(self, a):
        return int(self.NEG[a])

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return int(self.INV[a])

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero")
        return int(self.MUL[a, self.INV[b]])

    def pow(self, a, e):
        if e < 0:
            return self.pow(self.inv(a), -e)
        out, base = 1, a
        while e:
            if e & 1:
                out = int(self.MUL[out, base])
            base = int(self.MUL[base, base])
            e >>= 1
        return out

    def trace_int(self, a) -> int:
        return int(self.TRACE[a])

    def character(self, a) -> complex:
        return complex(self.CHAR[a])

    def elements(self):
        return range(self.q)

    def coeffs(self, a):
        """Coefficient tuple (c_0, ..., c_{r-1}) of element index a."""
        return tuple(int(c) for c in self._digits[a])

    def from_coeffs(self, coeffs):
        return int(sum(int(c) % self.p * self.p**i for i, c in enumerate(coeffs)))

    def elem(self, a) -> "FieldElem":
        return FieldElem(self, int(a) % self.q if isinstance(a, int) else int(a))

    def __repr__(self):
        return f"FieldCtx(p={self.p}, r={self.r})"

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.p, self.r) == (other.p, other.r)

    def __hash__(self):
        return hash((self.p, self.r))


@functools.lru_cache(maxsize=None)
def field_ctx(p: int, r: int = 1) -> FieldCtx:
    return FieldCtx(p, r)


class FieldElem:
    """A field element: a context plus an index in [0, q)."""

    __slots__ = ("ctx", "i")

    def __init__(self, ctx: FieldCtx, i: int):
        self.ctx = ctx
        self.i = int(i)

    def _check(self, other):
        if self.ctx is not other.ctx and self.ctx != other.ctx:
            raise CtxMismatch(f"{self.ctx} vs {other.ctx}")
        return other.i

    def __add__(self, other):
        return FieldElem(self.ctx, self.ctx.add(self.i, self._check(other)))

    def __sub__(self, other):
        return FieldElem(self.ctx, self.ctx.sub(self.i, self._check(other)))

    def __mul__(self, other):
        return FieldElem(self.ctx, self.ctx.mul(self.i, self._check(other)))

    def __truediv__(self, other):
        return FieldElem(self.ctx, self.ctx.div(self.i, self._check(other)))

    def __neg__(self):
        return FieldElem(self.ctx, self.ctx.neg(self.i))

    def __pow__(self, e):
        return FieldElem(self.ctx, self.ctx.pow(self.i, e))

    def inverse(self):
        return FieldElem(self.ctx, self.ctx.inv(self.i))

    def trace(self) -> "FieldElem":
        """Trace down to F_p; the result index is always < p."""
        return FieldElem(self.ctx, self.ctx.trace_int(self.i))

    def character(self) -> complex:
        return self.ctx.character(self.i)

    def __eq__(self, other):
        if isinstance(other, FieldElem):
            return self.ctx == other.ctx and self.i == other.i
        if isinstance(other, int):
            return self.i == other
        return NotImplemented

    def __hash__(self):
        return hash((self.ctx.p, self.ctx.r, self.i))

    def __repr__(self):
        return f"F{self.ctx.q}({self.i})"
