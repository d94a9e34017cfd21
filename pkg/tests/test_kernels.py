import numpy as np
import pytest

from holoqudit import _pykernels, kernels
from holoqudit.core import dagger

has_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def _problem(rng, n_steps=200, batch=3):
    h = rng.normal(size=(2 * n_steps + 1, 4, 4)) + 1j * rng.normal(size=(2 * n_steps + 1, 4, 4))
    h = 0.05 * (h + dagger(h))
    rho = rng.normal(size=(batch, 4, 4)) + 1j * rng.normal(size=(batch, 4, 4))
    jumps = 0.01 * (rng.normal(size=(2, 4, 4)) + 0j)
    return h, rho, jumps


@has_ext
def test_backends_agree(rng):
    h, rho, jumps = _problem(rng)
    a = kernels.lindblad_rk4(h, rho, 0.05, jumps, backend="python")
    b = kernels.lindblad_rk4(h, rho, 0.05, jumps, backend="cython")
    np.testing.assert_allclose(a, b, atol=1e-13)
    ra = kernels.lindblad_rk4(h, rho, 0.05, jumps, record=True, backend="python")
    rb = kernels.lindblad_rk4(h, rho, 0.05, jumps, record=True, backend="cython")
    assert rb.shape == (201, 3, 4, 4)
    np.testing.assert_allclose(ra, rb, atol=1e-13)
    np.testing.assert_allclose(rb[-1], b, atol=1e-15)
    steps = rng.normal(size=(50, 4, 4)) + 1j * rng.normal(size=(50, 4, 4))
    np.testing.assert_allclose(
        kernels.ordered_product(steps, "python"), kernels.ordered_product(steps, "cython"), rtol=1e-12
    )


def test_ordered_product_order(rng):
    steps = rng.normal(size=(3, 4, 4)) + 0j
    np.testing.assert_allclose(kernels.ordered_product(steps), steps[2] @ steps[1] @ steps[0])


def test_no_jumps_and_read_only_inputs(rng):
    h, rho, _ = _problem(rng, 50, 1)
    h.flags.writeable = False
    out = kernels.lindblad_rk4(h, rho, 0.05, np.zeros((0, 4, 4)))
    ref = _pykernels.lindblad_rk4(np.array(h), rho, 0.05, np.zeros((1, 4, 4)))
    np.testing.assert_allclose(out, ref, atol=1e-13)


def test_other_dimensions_use_fallback(rng):
    h = np.zeros((21, 2, 2), dtype=complex)
    rho = np.eye(2, dtype=complex)[None] / 2
    out = kernels.lindblad_rk4(h, rho, 0.1, np.zeros((0, 2, 2)))
    np.testing.assert_allclose(out[0], rho[0])


def test_even_grid_rejected(rng):
    h, rho, jumps = _problem(rng, 10)
    with pytest.raises(ValueError):
        kernels.lindblad_rk4(h[:-1], rho, 0.05, jumps)
    with pytest.raises(ValueError):
        kernels.lindblad_rk4(h, rho, 0.05, jumps, backend="fortran")
