"""Invariant-based synthesis of the two resonant drive pulses.

The auxiliary angles (chi, eta) parameterize the Lewis-Riesenfeld invariant of
the bright/excited two-level problem; inverting the invariant condition gives
the drive amplitude and phase. Conventions used throughout:

* the invariant and its eigenvectors are written on the ordered pair
  ``(|e>, |b>)``, so the auxiliary state ``mu1`` starts and ends on the bright
  state ``|b>``;
* drive 1 carries an extra phase of pi relative to ``phi``, i.e. the bright
  state is ``sin(theta/2)|0> - cos(theta/2) e^{i phi}|1>``. With this choice
  the cyclic evolution implements exactly ``target_unitary(theta, phi, gamma)``;
* the second spin-echo branch is offset by ``eta_g - pi/2`` so that the
  bright state picks up the phase ``+eta_g``.
"""

from dataclasses import dataclass, field
import csv

import numpy as np
from scipy.integrate import simpson

from .core import SIGMA_X, SIGMA_Y, SIGMA_Z, ValidationError, max_norm

PI = np.pi

PULSE_CSV_HEADER = ("t_ns", "omega0_rad_per_ns", "omega1_rad_per_ns", "phi0_rad", "phi1_rad")


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class GateSpec:
    """Holonomic gate: rotation by ``gamma`` about (sin t cos p, sin t sin p, cos t)."""

    theta: float
    phi: float = 0.0
    gamma: float = PI

    def __post_init__(self):
        if not 0.0 <= self.theta <= PI + 1e-12:
            raise ValidationError(f"theta={self.theta} outside [0, pi]")
        if not -PI - 1e-12 <= self.phi < PI:
            raise ValidationError(f"phi={self.phi} outside [-pi, pi)")
        if not -2 * PI < self.gamma <= 2 * PI + 1e-12:
            raise ValidationError(f"gamma={self.gamma} outside (-2pi, 2pi]")


GATES = {
    "z": GateSpec(0.0, 0.0, PI),
    "hadamard": GateSpec(PI / 4, 0.0, PI),
}


@dataclass(frozen=True, eq=False)
class InvariantSchedule:
    tau: float
    t: np.ndarray
    chi: np.ndarray
    eta: np.ndarray
    chi_dot: np.ndarray
    eta_dot: np.ndarray
    # eta_dot * tan(chi), evaluated in a form that stays finite at chi = pi/2
    eta_dot_tan_chi: np.ndarray
    eta_g: float
    g0: float = 1.0

    @property
    def n_steps(self):
        return len(self.t) - 1

    @property
    def mid(self):
        return self.n_steps // 2

    def index(self, t):
        return _grid_index(self.t, t)


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    t: np.ndarray
    omega0: np.ndarray
    omega1: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    theta: float
    phi: float
    eta_g: float = PI
    meta: dict = field(default_factory=dict)

    @property
    def tau(self):
        return float(self.t[-1])

    @property
    def n_steps(self):
        return len(self.t) - 1

    def index(self, t):
        return _grid_index(self.t, t)

    def max_amplitude(self):
        return float(max(np.max(np.abs(self.omega0)), np.max(np.abs(self.omega1))))

    def to_csv(self, path, comments=()):
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(PULSE_CSV_HEADER)
            for row in zip(self.t, self.omega0, self.omega1, self.phi0, self.phi1):
                w.writerow([repr(float(x)) for x in row])


def _grid_index(grid, t):
    i = int(np.rint(t / (grid[-1] / (len(grid) - 1))))
    if i < 0 or i >= len(grid) or abs(grid[i] - t) > 1e-9 * max(1.0, grid[-1]):
        raise ValidationError(f"t={t} is not a grid point")
    return i


def make_invariant_schedule(gate, tau, n_steps=3000, eta_g=None):
    """Sample chi(t) and the spin-echo eta(t) on a uniform grid.

    The node at tau/2 takes the first-branch values; the eta jump happens
    between that node and the next one.
    """
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if n_steps < 100 or n_steps % 2:
        raise ValidationError("n_steps must be even and at least 100")
    eta_g = gate.gamma if eta_g is None else float(eta_g)

    t = np.linspace(0.0, tau, n_steps + 1)
    x = 2 * PI * t / tau
    sx, cx = np.sin(x), np.cos(x)
    first = np.arange(n_steps + 1) <= n_steps // 2
    sign = np.where(first, -1.0, 1.0)

    chi = 0.5 * PI * (1.0 - cx)
    chi_dot = (PI**2 / tau) * sx
    # (2pi/5) sin(pi t/tau) cos(pi t/tau) = (pi/5) sin(2 pi t/tau)
    eta = np.where(first, -0.2 * PI * sx - 0.5 * PI, 0.2 * PI * sx - 0.5 * PI + eta_g)
    eta_dot = sign * (2 * PI**2 / (5 * tau)) * cx
    # u cot(pi u / 2) = (2/pi) cos(pi u / 2) / sinc(u / 2), with u = cos x
    eta_dot_tan_chi = sign * (4 * PI / (5 * tau)) * np.cos(0.5 * PI * cx) / np.sinc(0.5 * cx)

    chi[0] = chi[-1] = 0.0
    chi[n_steps // 2] = PI
    return InvariantSchedule(tau, t, chi, eta, chi_dot, eta_dot, eta_dot_tan_chi, eta_g)


def invert_invariant(schedule):
    """Drive amplitude and phase that keep the invariant constant.

    Uses Omega = chi_dot / sin(phi0 - eta) and
    tan(phi0 - eta) = -chi_dot / (eta_dot tan chi) with Omega >= 0; the
    quadrant comes from the two-argument arctangent.
    """
    y = schedule.chi_dot
    x = -schedule.eta_dot_tan_chi
    omega = np.hypot(y, x)
    offset = np.arctan2(y, x)

    n = schedule.n_steps
    scale = max(float(np.max(omega)), 1e-300)
    for i in np.flatnonzero(omega <= 1e-12 * scale):
        # removable singularity: phi0 - eta -> +-pi/2, Omega -> 0
        j = i + 1 if i == 0 else i - 1
        if not 0 <= j <= n or y[j] == 0.0:
            raise SynthesisError(f"cannot resolve drive phase at t={schedule.t[i]:.6g} ns")
        offset[i] = np.copysign(0.5 * PI, y[j])
        omega[i] = 0.0

    phi0 = schedule.eta + offset
    bad = ~(np.isfinite(omega) & np.isfinite(phi0))
    if bad.any():
        t_bad = schedule.t[np.flatnonzero(bad)[0]]
        raise SynthesisError(f"non-finite drive at t={t_bad:.6g} ns")
    return omega, phi0


def split_pulses(omega, phi0, gate, t, eta_g=None):
    """Split the common envelope into the 0-e and e-1 drives."""
    omega = np.asarray(omega, dtype=float)
    phi0 = np.asarray(phi0, dtype=float)
    return PulseSchedule(
        t=np.asarray(t, dtype=float),
        omega0=omega * np.sin(gate.theta / 2),
        omega1=omega * np.cos(gate.theta / 2),
        phi0=phi0,
        phi1=phi0 + gate.phi + PI,
        theta=gate.theta,
        phi=gate.phi,
        eta_g=gate.gamma if eta_g is None else float(eta_g),
    )


def synthesize(gate, tau, n_steps=3000, eta_g=None):
    """Schedule -> inversion -> split, in one call."""
    sched = make_invariant_schedule(gate, tau, n_steps, eta_g)
    omega, phi0 = invert_invariant(sched)
    return split_pulses(omega, phi0, gate, sched.t, sched.eta_g)


def target_unitary(gate):
    """exp(-i gamma/2 n.sigma) with n = (sin t cos p, sin t sin p, cos t)."""
    th, ph, g = gate.theta, gate.phi, gate.gamma
    n_sigma = (
        np.sin(th) * np.cos(ph) * SIGMA_X + np.sin(th) * np.sin(ph) * SIGMA_Y + np.cos(th) * SIGMA_Z
    )
    return np.cos(g / 2) * np.eye(2) - 1j * np.sin(g / 2) * n_sigma


def bright_state(gate):
    """Drive-coupled superposition, as a 4-vector."""
    v = np.zeros(4, dtype=np.complex128)
    v[0] = np.sin(gate.theta / 2)
    v[2] = -np.cos(gate.theta / 2) * np.exp(1j * gate.phi)
    return v


def dark_state(gate):
    v = np.zeros(4, dtype=np.complex128)
    v[0] = np.cos(gate.theta / 2)
    v[2] = np.sin(gate.theta / 2) * np.exp(1j * gate.phi)
    return v


def _e_b_frame(gate):
    # columns: |e>, |b> in the (|0>, |e>, |1>) basis
    e = np.array([0, 1, 0], dtype=np.complex128)
    b = bright_state(gate)[:3]
    return np.stack([e, b], axis=1)


def _invariant_2x2(chi, eta):
    return np.array(
        [[np.cos(chi), np.sin(chi) * np.exp(-1j * eta)], [np.sin(chi) * np.exp(1j * eta), -np.cos(chi)]]
    )


def invariant_matrix(schedule, gate, t):
    """The invariant on (|0>, |e>, |1>) at grid time ``t`` (includes G0/2)."""
    i = schedule.index(t)
    frame = _e_b_frame(gate)
    block = 0.5 * schedule.g0 * _invariant_2x2(schedule.chi[i], schedule.eta[i])
    return frame @ block @ frame.conj().T


def _invariant_time_derivative(schedule, gate, i):
    chi, eta = schedule.chi[i], schedule.eta[i]
    d_chi = np.array(
        [[-np.sin(chi), np.cos(chi) * np.exp(-1j * eta)], [np.cos(chi) * np.exp(1j * eta), np.sin(chi)]]
    )
    d_eta = np.array(
        [[0, -1j * np.sin(chi) * np.exp(-1j * eta)], [1j * np.sin(chi) * np.exp(1j * eta), 0]]
    )
    block = 0.5 * schedule.g0 * (schedule.chi_dot[i] * d_chi + schedule.eta_dot[i] * d_eta)
    frame = _e_b_frame(gate)
    return frame @ block @ frame.conj().T


def invariant_eigenvectors(schedule, t):
    """(mu0, mu1) as components on (|e>, |b>)."""
    i = schedule.index(t)
    c, s = np.cos(schedule.chi[i] / 2), np.sin(schedule.chi[i] / 2)
    em, ep = np.exp(-0.5j * schedule.eta[i]), np.exp(0.5j * schedule.eta[i])
    mu0 = np.array([c * em, s * ep])
    mu1 = np.array([s * em, -c * ep])
    return mu0, mu1


def auxiliary_state(schedule, gate, t, which=1):
    """An invariant eigenvector embedded in the four-level basis."""
    mu = invariant_eigenvectors(schedule, t)[which]
    v = np.zeros(4, dtype=np.complex128)
    v[1] = mu[0]
    v += mu[1] * bright_state(gate)
    return v


def resonant_hamiltonians(pulse):
    """Leak-free interaction-frame Hamiltonian at every sample, shape (n, 4, 4)."""
    n = len(pulse.t)
    h = np.zeros((n, 4, 4), dtype=np.complex128)
    h[:, 0, 1] = 0.5 * pulse.omega0 * np.exp(1j * pulse.phi0)
    h[:, 1, 2] = 0.5 * pulse.omega1 * np.exp(-1j * pulse.phi1)
    h[:, 1, 0] = np.conj(h[:, 0, 1])
    h[:, 2, 1] = np.conj(h[:, 1, 2])
    return h


def dynamical_phase(schedule, gate, pulse=None, split=False):
    """Integral of <mu1|H_e|mu1> over each spin-echo half (Simpson's rule)."""
    if pulse is None:
        omega, phi0 = invert_invariant(schedule)
        pulse = split_pulses(omega, phi0, gate, schedule.t, schedule.eta_g)
    hams = resonant_hamiltonians(pulse)
    b = bright_state(gate)
    c, s = np.cos(schedule.chi / 2), np.sin(schedule.chi / 2)
    mu1 = np.zeros((len(schedule.t), 4), dtype=np.complex128)
    mu1[:, 1] = s * np.exp(-0.5j * schedule.eta)
    mu1 += (-c * np.exp(0.5j * schedule.eta))[:, None] * b[None, :]
    energy = np.einsum("ni,nij,nj->n", mu1.conj(), hams, mu1).real

    m = schedule.mid
    first = simpson(energy[: m + 1], x=schedule.t[: m + 1])
    second = simpson(energy[m:], x=schedule.t[m:])
    return (first, second) if split else first + second


def verify_invariant(schedule, gate, pulse=None):
    """max_t || dI/dt - i[I, H_e] ||_max using analytic dI/dt."""
    if pulse is None:
        omega, phi0 = invert_invariant(schedule)
        pulse = split_pulses(omega, phi0, gate, schedule.t, schedule.eta_g)
    hams = resonant_hamiltonians(pulse)[:, :3, :3]
    frame = _e_b_frame(gate)
    worst = 0.0
    for i, t in enumerate(schedule.t):
        inv = frame @ (0.5 * schedule.g0 * _invariant_2x2(schedule.chi[i], schedule.eta[i])) @ frame.conj().T
        d_inv = _invariant_time_derivative(schedule, gate, i)
        res = d_inv - 1j * (inv @ hams[i] - hams[i] @ inv)
        worst = max(worst, max_norm(res))
    return worst
