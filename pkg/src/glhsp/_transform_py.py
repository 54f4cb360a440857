"""Pure-numpy fallback for the axis-wise kernel transform.

Same contract as the compiled version: apply the q x q kernel along every
axis of ``amps`` viewed as (q,) * naxes in C order, modifying amps in place.
"""

import numpy as np


def apply_axis_kernels(amps, kernel, naxes):
    q = kernel.shape[0]
    a = amps.reshape((q,) * naxes)
    for ax in range(naxes):
        a = np.moveaxis(np.tensordot(kernel, a, axes=([1], [ax])), 0, ax)
    amps[:] = a.reshape(-1)
