"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the numpy
versions are used. Set ``HOLOQUDIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HOLOQUDIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def _prepare(hams, rho0, jumps):
    # the compiled kernel takes writable C-contiguous buffers
    hams, rho0, jumps = (np.require(a, np.complex128, ("C", "W")) for a in (hams, rho0, jumps))
    if jumps.size == 0:
        jumps = np.zeros((1,) + hams.shape[1:], dtype=np.complex128)
    if hams.ndim != 3 or hams.shape[0] % 2 != 1:
        raise ValueError("hams must be sampled on a half-step grid of odd length")
    return hams, rho0, jumps


def lindblad_rk4(hams, rho0, dt, jumps, record=False, backend=None):
    """Integrate d rho/dt = -i[H, rho] + sum_k D[c_k] rho with fixed-step RK4.

    Parameters
    ----------
    hams : (2 * n_steps + 1, d, d) complex array
        Hamiltonian sampled at every half step; even indices are grid nodes.
    rho0 : (batch, d, d) complex array
        Initial matrices. Any linear combination is fine; the map is linear.
    dt : float
        Full step size.
    jumps : (k, d, d) complex array
        Collapse operators already multiplied by sqrt(rate).
    record : bool
        Return every grid node, shape (n_steps + 1, batch, d, d).
    """
    hams, rho0, jumps = _prepare(hams, rho0, jumps)
    impl = _select(backend, hams.shape[1])
    return impl.lindblad_rk4(hams, rho0, float(dt), jumps, bool(record))


def ordered_product(steps, backend=None):
    """Time-ordered product ``steps[-1] @ ... @ steps[0]``."""
    steps = np.require(steps, np.complex128, ("C", "W"))
    return _select(backend, steps.shape[1]).ordered_product(steps)


def _select(backend, dim=4):
    if backend is None:
        return _impl if dim == 4 else _pykernels
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")
