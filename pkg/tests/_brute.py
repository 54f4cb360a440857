"""Brute-force helpers shared by the algorithm and acceptance tests."""

import itertools

from glhsp.fqla import FqMatrix, Subspace, random_flag


def compositions(n):
    """All ordered compositions of n (flag parameter shapes)."""
    out = []
    for cuts in itertools.product([0, 1], repeat=n - 1):
        parts, cur = [], 1
        for c in cuts:
            if c:
                parts.append(cur)
                cur = 1
            else:
                cur += 1
        parts.append(cur)
        out.append(tuple(parts))
    return out


def sum_of_shifted_images(ctx, n, elements):
    """The subspace sum of (X - I)V over the given matrices."""
    total = Subspace.zero(ctx, n)
    I = FqMatrix.identity(ctx, n)
    for X in elements:
        XI = X - I
        total = total + Subspace(ctx, n, XI.a.T)
    return total


def intersect_subgroup(spec_outer, spec_inner):
    return [X for X in spec_inner.enumerate() if spec_outer.contains(X)]


def random_flag_with(ctx, n, rng, want_d=None, min_k=2):
    """Random flag with a constrained shape, by rejection."""
    while True:
        shape = []
        left = n
        while left:
            part = int(rng.integers(1, left + 1))
            shape.append(part)
            left -= part
        if len(shape) < min_k:
            continue
        if want_d is not None and shape[-1] != want_d:
            continue
        return random_flag(ctx, n, tuple(shape), rng)
