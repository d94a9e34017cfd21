"""Pure-numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def lindblad_rk4(hams, rho0, dt, jumps, record=False):
    hams = np.asarray(hams, dtype=np.complex128)
    rho = np.array(rho0, dtype=np.complex128)
    jumps = np.asarray(jumps, dtype=np.complex128)
    n_steps = (hams.shape[0] - 1) // 2

    jumps_dag = np.conj(np.swapaxes(jumps, -1, -2))
    decay = np.einsum("kji,kjl->il", np.conj(jumps), jumps)
    heff = hams - 0.5j * decay
    heff_dag = np.conj(np.swapaxes(heff, -1, -2))

    def rhs(idx, r):
        out = -1j * (heff[idx] @ r - r @ heff_dag[idx])
        for c, cd in zip(jumps, jumps_dag):
            out += c @ r @ cd
        return out

    if record:
        out = np.empty((n_steps + 1,) + rho.shape, dtype=np.complex128)
        out[0] = rho
    for s in range(n_steps):
        i0 = 2 * s
        k1 = rhs(i0, rho)
        k2 = rhs(i0 + 1, rho + 0.5 * dt * k1)
        k3 = rhs(i0 + 1, rho + 0.5 * dt * k2)
        k4 = rhs(i0 + 2, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record:
            out[s + 1] = rho
    return out if record else rho


def ordered_product(steps):
    steps = np.asarray(steps, dtype=np.complex128)
    result = np.eye(steps.shape[1], dtype=np.complex128)
    for u in steps:
        result = u @ result
    return result
