"""The axis-wise kernel transform: compiled core versus numpy fallback."""

import numpy as np
import pytest

from glhsp.fq import field_ctx
from glhsp import qsim
from glhsp._transform_py import apply_axis_kernels as apply_py

try:
    from glhsp._transform_c import apply_axis_kernels as apply_c
except ImportError:
    apply_c = None


def _random_kernel(q, rng):
    K = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
    return np.ascontiguousarray(K, dtype=np.complex128)


@pytest.mark.parametrize("q,naxes", [(2, 1), (2, 5), (2, 10), (3, 4), (4, 3), (5, 3), (7, 2)])
def test_backends_match_on_random_kernels(q, naxes):
    if apply_c is None:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(0)
    K = _random_kernel(q, rng)
    amps = rng.normal(size=q**naxes) + 1j * rng.normal(size=q**naxes)
    a = amps.copy()
    b = amps.copy()
    apply_c(a, K, naxes)
    apply_py(b, K, naxes)
    assert np.abs(a - b).max() < 1e-10


def test_matches_explicit_tensor_power():
    # applying the kernel along every axis equals the dense naxes-fold
    # Kronecker power acting on the flat vector
    rng = np.random.default_rng(1)
    q, naxes = 3, 3
    K = _random_kernel(q, rng)
    amps = rng.normal(size=q**naxes) + 1j * rng.normal(size=q**naxes)
    full = np.kron(np.kron(K, K), K)
    want = full @ amps
    got = amps.copy()
    apply_py(got, K, naxes)
    assert np.abs(got - want).max() < 1e-9
    if apply_c is not None:
        got_c = amps.copy()
        apply_c(got_c, K, naxes)
        assert np.abs(got_c - want).max() < 1e-9


def test_character_kernel_unitary():
    for p, r in [(2, 1), (3, 1), (2, 2), (5, 1)]:
        ctx = field_ctx(p, r)
        K = ctx.CHAR[ctx.MUL] / np.sqrt(ctx.q)
        assert np.abs(K @ K.conj().T - np.eye(ctx.q)).max() < 1e-12


def test_default_backend_reported():
    assert qsim.KERNEL_BACKEND in ("compiled", "python")
    if apply_c is not None:
        assert qsim.KERNEL_BACKEND == "compiled"
