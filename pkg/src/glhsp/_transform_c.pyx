# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel: apply a q x q matrix along every axis of a dense
complex array viewed as (q,) * naxes in C order, in place."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_axis_kernels(cnp.complex128_t[::1] amps,
                       cnp.complex128_t[:, ::1] kernel,
                       Py_ssize_t naxes):
    cdef Py_ssize_t q = kernel.shape[0]
    cdef Py_ssize_t dim = amps.shape[0]
    cdef cnp.ndarray buf_arr = np.empty(q, dtype=np.complex128)
    cdef cnp.complex128_t[::1] buf = buf_arr
    cdef Py_ssize_t axis, stride, block, base, off, pos, a, b
    cdef cnp.complex128_t acc

    stride = dim // q
    for axis in range(naxes):
        block = stride * q
        base = 0
        while base < dim:
            for off in range(stride):
                pos = base + off
                for a in range(q):
                    buf[a] = amps[pos + a * stride]
                for a in range(q):
                    acc = 0
                    for b in range(q):
                        acc = acc + kernel[a, b] * buf[b]
                    amps[pos + a * stride] = acc
            base += block
        stride //= q
