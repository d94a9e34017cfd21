# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for fixed-step propagation of small dense systems."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

cdef enum:
    D = 4
    DD = 16


cdef inline void _matmul(const cplx* a, const cplx* b, cplx* out) noexcept nogil:
    cdef int i, j, k, n = D
    cdef cplx acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + a[i * n + k] * b[k * n + j]
            out[i * n + j] = acc


cdef inline void _rhs(const cplx* heff, const cplx* jumps, int n_jumps,
                      const cplx* rho, cplx* out, cplx* tmp) noexcept nogil:
    # out = -i (Heff rho - rho Heff^dag) + sum_k c_k rho c_k^dag
    cdef int i, j, k, m, n = D, nn = DD
    cdef cplx acc, acc2
    cdef const cplx* c
    for i in range(n):
        for j in range(n):
            acc = 0
            acc2 = 0
            for k in range(n):
                acc = acc + heff[i * n + k] * rho[k * n + j]
                acc2 = acc2 + rho[i * n + k] * (heff[j * n + k].real - 1j * heff[j * n + k].imag)
            out[i * n + j] = -1j * (acc - acc2)
    for m in range(n_jumps):
        c = jumps + m * nn
        # tmp = c rho
        _matmul(c, rho, tmp)
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + tmp[i * n + k] * (c[j * n + k].real - 1j * c[j * n + k].imag)
                out[i * n + j] = out[i * n + j] + acc


def lindblad_rk4(cplx[:, :, ::1] hams, cplx[:, :, ::1] rho0, double dt,
                 cplx[:, :, ::1] jumps, bint record=False):
    """Classical RK4 for a batch of density matrices.

    ``hams`` holds the Hamiltonian on the half-step grid (2 * n_steps + 1
    samples); ``jumps`` are collapse operators already scaled by sqrt(rate).
    """
    if hams.shape[1] != D or hams.shape[2] != D:
        raise ValueError("compiled kernel is specialised to 4x4 systems")
    cdef int n = D
    cdef int n_half = hams.shape[0]
    cdef int n_steps = (n_half - 1) // 2
    cdef int batch = rho0.shape[0]
    cdef int n_jumps = jumps.shape[0]
    cdef int nn = n * n
    cdef int s, b, i, j, k, m

    cdef cplx[::1] decay = np.zeros(nn, dtype=np.complex128)
    cdef cplx[:, ::1] heff = np.zeros((3, nn), dtype=np.complex128)
    cdef cplx[::1] k1 = np.empty(nn, dtype=np.complex128)
    cdef cplx[::1] k2 = np.empty(nn, dtype=np.complex128)
    cdef cplx[::1] k3 = np.empty(nn, dtype=np.complex128)
    cdef cplx[::1] k4 = np.empty(nn, dtype=np.complex128)
    cdef cplx[::1] work = np.empty(nn, dtype=np.complex128)
    cdef cplx[::1] tmp = np.empty(nn, dtype=np.complex128)
    cdef cplx[:, ::1] rho = np.ascontiguousarray(
        np.asarray(rho0).reshape(batch, nn)).copy()

    out_np = np.empty((n_steps + 1 if record else 1, batch, n, n), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_np.reshape(out_np.shape[0], batch, nn)

    cdef cplx acc
    cdef const cplx* c
    for m in range(n_jumps):
        c = &jumps[m, 0, 0]
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + (c[k * n + i].real - 1j * c[k * n + i].imag) * c[k * n + j]
                decay[i * n + j] = decay[i * n + j] + acc

    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    with nogil:
        if record:
            for b in range(batch):
                for i in range(nn):
                    out[0, b, i] = rho[b, i]
        for s in range(n_steps):
            for m in range(3):
                for i in range(n):
                    for j in range(n):
                        heff[m, i * n + j] = hams[2 * s + m, i, j] - 0.5j * decay[i * n + j]
            for b in range(batch):
                _rhs(&heff[0, 0], &jumps[0, 0, 0], n_jumps, &rho[b, 0], &k1[0], &tmp[0])
                for i in range(nn):
                    work[i] = rho[b, i] + h2 * k1[i]
                _rhs(&heff[1, 0], &jumps[0, 0, 0], n_jumps, &work[0], &k2[0], &tmp[0])
                for i in range(nn):
                    work[i] = rho[b, i] + h2 * k2[i]
                _rhs(&heff[1, 0], &jumps[0, 0, 0], n_jumps, &work[0], &k3[0], &tmp[0])
                for i in range(nn):
                    work[i] = rho[b, i] + dt * k3[i]
                _rhs(&heff[2, 0], &jumps[0, 0, 0], n_jumps, &work[0], &k4[0], &tmp[0])
                for i in range(nn):
                    rho[b, i] = rho[b, i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if record:
                    for i in range(nn):
                        out[s + 1, b, i] = rho[b, i]
        if not record:
            for b in range(batch):
                for i in range(nn):
                    out[0, b, i] = rho[b, i]
    return out_np if record else out_np[0]


def ordered_product(cplx[:, :, ::1] steps):
    """Return steps[-1] @ ... @ steps[0]."""
    cdef int n_steps = steps.shape[0]
    if steps.shape[1] != D or steps.shape[2] != D:
        raise ValueError("compiled kernel is specialised to 4x4 systems")
    cdef int n = D
    cdef int s, i
    result_np = np.eye(n, dtype=np.complex128)
    cdef cplx[:, ::1] result = result_np
    cdef cplx[::1] tmp = np.empty(n * n, dtype=np.complex128)
    with nogil:
        for s in range(n_steps):
            _matmul(&steps[s, 0, 0], &result[0, 0], &tmp[0])
            for i in range(n * n):
                result[i // n, i % n] = tmp[i]
    return result_np
