"""Four-level state and operator primitives.

Basis order is fixed everywhere as ``(|0>, |e>, |1>, |h>)``; the computational
subspace is indices ``(0, 2)``.
"""

import numpy as np

DIM = 4
COMPUTATIONAL = (0, 2)
NONCOMPUTATIONAL = (1, 3)
LEVEL_NAMES = ("0", "e", "1", "h")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class ValidationError(ValueError):
    """Input violates a documented invariant."""


def max_norm(a):
    """Max-absolute-entry norm, used for every matrix tolerance."""
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


def state_vector(amplitudes, tol=1e-12):
    """Validate a 4-level pure state and return it as a read-only array."""
    v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if v.shape != (DIM,):
        raise ValidationError(f"state vector must have {DIM} amplitudes, got {v.shape}")
    if abs(np.vdot(v, v).real - 1.0) > tol:
        raise ValidationError("state vector is not normalized")
    return _frozen(v)


def density_matrix(rho, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-9):
    """Validate a 4x4 density matrix and return it as a read-only array."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (DIM, DIM):
        raise ValidationError(f"density matrix must be {DIM}x{DIM}, got {rho.shape}")
    if max_norm(rho - dagger(rho)) > herm_tol:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValidationError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0] < -psd_tol:
        raise ValidationError("density matrix has a negative eigenvalue")
    return _frozen(rho)


def pure(state):
    """|psi><psi| for a validated state."""
    v = state_vector(state)
    return density_matrix(np.outer(v, np.conj(v)))


def basis_state(index):
    v = np.zeros(DIM, dtype=np.complex128)
    v[index] = 1.0
    return state_vector(v)


def check_hamiltonian(h, tol=1e-12):
    """Raise unless ``h`` (or a stack of them) is Hermitian within ``tol``."""
    if max_norm(h - dagger(h)) > tol:
        raise ValidationError("Hamiltonian is not Hermitian")
    return h


def check_unitary(u, tol=1e-8):
    n = u.shape[-1]
    if max_norm(dagger(u) @ u - np.eye(n)) > tol:
        raise ValidationError("operator is not unitary")
    return u


def embed_computational(v, tol=1e-12):
    """Map a qubit state (a|0> + b|1>) into the four-level basis."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.shape != (2,):
        raise ValidationError("qubit state must have 2 amplitudes")
    if abs(np.vdot(v, v).real - 1.0) > tol:
        raise ValidationError("qubit state is not normalized")
    out = np.zeros(DIM, dtype=np.complex128)
    out[list(COMPUTATIONAL)] = v
    return state_vector(out)


def embed_operator(u2):
    """Place a 2x2 operator on the computational block of a 4x4 zero matrix."""
    out = np.zeros((DIM, DIM), dtype=np.complex128)
    out[np.ix_(COMPUTATIONAL, COMPUTATIONAL)] = u2
    return out


def computational_block(op):
    return np.asarray(op)[..., list(COMPUTATIONAL), :][..., list(COMPUTATIONAL)]


def state_fidelity(ideal, rho):
    """<psi|rho|psi>; reduces to |<psi|phi>|^2 for pure rho."""
    psi = state_vector(ideal)
    rho = density_matrix(rho)
    f = np.vdot(psi, rho @ psi).real
    return float(min(1.0, max(0.0, f)))


def computational_leakage(rho):
    """Population outside {|0>, |1>}."""
    rho = density_matrix(rho)
    return float(max(0.0, rho[1, 1].real + rho[3, 3].real))


def populations(rhos):
    """Diagonal populations of one matrix or a stack, ordered (p0, pe, p1, ph)."""
    return np.real(np.diagonal(np.asarray(rhos), axis1=-2, axis2=-1))
