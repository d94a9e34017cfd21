"""Closed- and open-system propagation over a sampled drive.

Envelopes are sampled on a half-step grid of ``2 * n_steps + 1`` points so
that the RK4 stages and the Magnus steps read exact samples; the
mid-gate phase jump always sits on a full-step node.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import COMPUTATIONAL, NONCOMPUTATIONAL, ValidationError, dagger, density_matrix, max_norm
from .device import (
    ConfigurationError,
    DriveEnvelope,
    correct,
    interaction_hamiltonians,
    lab_frame_hamiltonians,
    leak_hamiltonians,
    level_energies,
)
from .synthesis import synthesize, target_unitary

TRAJECTORY_CSV_HEADER = ("t_ns", "p0", "pe", "p1", "ph", "fidelity")

# largest |H| dt (spectral radius times step) accepted by the fixed-step integrators
MAX_PHASE_PER_STEP = 0.5


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    n_steps: int = 3000

    def __post_init__(self):
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 100 or self.n_steps % 2:
            raise ValidationError("n_steps must be an even integer >= 100")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_dt(cls, tau, dt):
        n = max(100, int(np.ceil(tau / dt - 1e-9)))
        return cls(tau, n + n % 2)

    @property
    def dt(self):
        return self.tau / self.n_steps

    @property
    def nodes(self):
        return np.linspace(0.0, self.tau, self.n_steps + 1)

    @property
    def half_nodes(self):
        return np.linspace(0.0, self.tau, 2 * self.n_steps + 1)

    def refined(self, factor=2):
        return TimeGrid(self.tau, self.n_steps * factor)


@dataclass(frozen=True)
class LindbladModel:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if not (self.gamma1 >= 0 and self.gamma2 >= 0):
            raise ValidationError("rates must be non-negative")

    @property
    def lambda_plus(self):
        a = np.zeros((4, 4), dtype=np.complex128)
        a[0, 1], a[1, 2], a[2, 3] = 1.0, np.sqrt(2), np.sqrt(3)
        return a

    @property
    def lambda_z(self):
        return np.diag([0.0, 1.0, 2.0, 3.0]).astype(np.complex128)

    @classmethod
    def of(cls, device):
        return cls(device.gamma1, device.gamma2)

    def jumps(self):
        """Collapse operators scaled by sqrt(rate); zero-rate channels dropped."""
        ops = [np.sqrt(g) * a for g, a in ((self.gamma1, self.lambda_plus), (self.gamma2, self.lambda_z)) if g > 0]
        return np.array(ops, dtype=np.complex128).reshape(-1, 4, 4)


@dataclass(frozen=True, eq=False)
class PropagatorDecomposition:
    u_full: np.ndarray
    delta: float
    u_hol_fit: np.ndarray
    u_out: np.ndarray
    subspace_leakage: float
    target: np.ndarray = None

    @property
    def block(self):
        return self.u_full[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]

    def target_infidelity(self, target=None):
        """1 - |tr(target^dag B)/2|^2 for the raw computational block B."""
        target = self.target if target is None else target
        if target is None:
            raise ValueError("no target to compare against")
        return float(1.0 - abs(np.trace(dagger(target) @ self.block) / 2) ** 2)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    rhos: np.ndarray
    final_rho: np.ndarray
    fidelity: np.ndarray = None

    @property
    def populations(self):
        return np.real(np.diagonal(self.rhos, axis1=-2, axis2=-1))

    def to_csv(self, path, comments=()):
        pops = self.populations
        fid = self.fidelity if self.fidelity is not None else np.full(len(self.times), np.nan)
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_CSV_HEADER)
            for t, p, f in zip(self.times, pops, fid):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in p] + [repr(float(f))])


def build_envelope(gate, correction, device, grid):
    """Synthesize on the half-step grid and apply the correction."""
    eta_g = correction.eta_g_override
    pulse = synthesize(gate, grid.tau, 2 * grid.n_steps, eta_g)
    return correct(pulse, correction, device.alpha)


def hamiltonian_stack(env, device, include_leak=True):
    h = interaction_hamiltonians(env)
    if include_leak:
        h = h + leak_hamiltonians(env, device.alpha)
    return h


def _check_grid(env, grid):
    if len(env.t) != 2 * grid.n_steps + 1 or abs(env.t[-1] - grid.tau) > 1e-9 * grid.tau:
        raise ValidationError("envelope must be sampled on the half-step grid of the TimeGrid")


def _check_step(hams, dt):
    worst = float(np.max(np.linalg.norm(hams, ord=2, axis=(1, 2)))) * dt
    if worst > MAX_PHASE_PER_STEP:
        raise IntegrationError(
            f"|H| dt = {worst:.3g} exceeds {MAX_PHASE_PER_STEP}; increase n_steps (reduce dt)"
        )


def step_propagators(hams, dt):
    """Fourth-order Magnus step exponentials over a half-step Hamiltonian stack.

    With H0, Hm, H1 at the start, middle and end of a step,
    K = dt (H0 + 4 Hm + H1) / 6 - i dt^2 [H1, H0] / 12 is Hermitian and the
    step propagator is exp(-i K), evaluated exactly through eigh.
    """
    h0, hm, h1 = hams[0:-1:2], hams[1::2], hams[2::2]
    k = (dt / 6) * (h0 + 4 * hm + h1) - 1j * (dt**2 / 12) * (h1 @ h0 - h0 @ h1)
    k = 0.5 * (k + dagger(k))
    w, v = np.linalg.eigh(k)
    return (v * np.exp(-1j * w)[:, None, :]) @ dagger(v)


def magnus_propagator(hams, dt):
    """Time-ordered product of the per-step propagators."""
    _check_step(hams, dt)
    return kernels.ordered_product(step_propagators(hams, dt))


def decompose(u, target=None):
    """Split a propagator into computational fit, relative phase and leakage."""
    block = u[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]
    w, _, vh = np.linalg.svd(block)
    fit = w @ vh
    if target is not None:
        delta = float(np.angle(np.trace(dagger(target) @ fit)))
    else:
        delta = float(np.angle(np.linalg.det(fit)) / 2)
    leak = float(1.0 - 0.5 * np.real(np.trace(dagger(block) @ block)))
    return PropagatorDecomposition(
        u_full=u,
        delta=delta,
        u_hol_fit=fit,
        u_out=u[np.ix_(NONCOMPUTATIONAL, NONCOMPUTATIONAL)],
        subspace_leakage=max(0.0, leak),
        target=target,
    )


def evolve_unitary(env, device, grid, include_leak=True, target=None):
    """Closed-system propagator over the gate and its decomposition.

    ``target`` is a 2x2 unitary or a GateSpec; it only sets the phase ``delta``.
    """
    _check_grid(env, grid)
    if target is not None and not isinstance(target, np.ndarray):
        target = target_unitary(target)
    u = magnus_propagator(hamiltonian_stack(env, device, include_leak), grid.dt)
    return decompose(u, target)


def _integrate(env, device, grid, include_leak, rho0, record):
    _check_grid(env, grid)
    hams = hamiltonian_stack(env, device, include_leak)
    _check_step(hams, grid.dt)
    jumps = LindbladModel.of(device).jumps()
    return kernels.lindblad_rk4(hams, rho0, grid.dt, jumps, record=record)


def evolve_lindblad(rho0, env, device, grid, include_leak=True, ideal=None):
    """Integrate the master equation and return the sampled trajectory."""
    rho0 = density_matrix(rho0)
    rhos = _integrate(env, device, grid, include_leak, rho0[None], True)[:, 0]
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rhos + dagger(rhos)))))
    if min_eig < -1e-6:
        raise IntegrationError(f"density matrix lost positivity (eigenvalue {min_eig:.3g}); reduce dt")
    final = density_matrix(rhos[-1], herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-6)
    traj = Trajectory(times=grid.nodes, rhos=rhos, final_rho=final)
    if ideal is not None:
        traj = Trajectory(traj.times, rhos, final, trajectory_fidelity(traj, ideal))
    return traj


def trajectory_fidelity(traj, ideal):
    """<psi|rho(t)|psi> at every sample."""
    psi = np.asarray(ideal, dtype=np.complex128)
    if abs(np.vdot(psi, psi).real - 1) > 1e-12:
        raise ValidationError("ideal state is not normalized")
    f = np.real(np.einsum("i,nij,j->n", psi.conj(), traj.rhos, psi))
    return np.clip(f, 0.0, 1.0)


def computational_channel(env, device, grid, include_leak=True):
    """Images of |0><0|, |1><1| and |0><1| under the gate channel, shape (3, 4, 4).

    The channel is linear, so the output for a|0> + b|1> is
    |a|^2 A + |b|^2 B + a b* C + a* b C^dag.
    """
    basis = np.zeros((3, 4, 4), dtype=np.complex128)
    i0, i1 = COMPUTATIONAL
    basis[0, i0, i0] = basis[1, i1, i1] = basis[2, i0, i1] = 1.0
    return _integrate(env, device, grid, include_leak, basis, False)


def channel_output(images, a, b):
    """Final density matrices for qubit inputs (a, b); broadcasts over arrays."""
    a = np.asarray(a, dtype=np.complex128)[..., None, None]
    b = np.asarray(b, dtype=np.complex128)[..., None, None]
    c = images[2]
    return (
        np.abs(a) ** 2 * images[0]
        + np.abs(b) ** 2 * images[1]
        + a * np.conj(b) * c
        + np.conj(a) * b * dagger(c)
    )


def lab_frame_propagator(env, device):
    """Lab-frame propagator over ``env.t`` mapped into the rotating frame.

    Returns R(T) U_lab R(0)^dag with R(t) = exp(i H0 t) and H0 the bare level
    energies, which is directly comparable to the interaction-frame result.
    """
    if device.omega_levels is None:
        raise ConfigurationError("lab-frame propagation needs omega_levels")
    hams = lab_frame_hamiltonians(env, device)
    dt = 2 * (env.t[-1] - env.t[0]) / (len(env.t) - 1)
    u = magnus_propagator(hams, dt)
    e = level_energies(device)
    return np.exp(1j * e * env.t[-1])[:, None] * u * np.exp(-1j * e * env.t[0])[None, :]


def interaction_frame_propagator(env, device, include_leak=True):
    dt = 2 * (env.t[-1] - env.t[0]) / (len(env.t) - 1)
    return magnus_propagator(hamiltonian_stack(env, device, include_leak), dt)


def propagator_distance(u, v):
    return max_norm(u - v)

