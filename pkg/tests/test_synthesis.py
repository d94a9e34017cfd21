import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holoqudit.core import ValidationError, max_norm
from holoqudit.synthesis import (
    GATES,
    PI,
    GateSpec,
    auxiliary_state,
    bright_state,
    dark_state,
    dynamical_phase,
    invariant_eigenvectors,
    invariant_matrix,
    invert_invariant,
    make_invariant_schedule,
    resonant_hamiltonians,
    synthesize,
    target_unitary,
    verify_invariant,
)

gate_angles = st.tuples(
    st.floats(0.0, PI), st.floats(-PI, PI - 1e-9), st.floats(0.1, 2 * PI)
)


def test_gate_spec_validation():
    with pytest.raises(ValidationError):
        GateSpec(-0.1)
    with pytest.raises(ValidationError):
        GateSpec(0.5, phi=4.0)


def test_target_unitary_examples():
    z = target_unitary(GATES["z"])
    np.testing.assert_allclose(z, -1j * np.diag([1, -1]), atol=1e-15)
    h = target_unitary(GATES["hadamard"])
    np.testing.assert_allclose(1j * h, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(gate_angles)
def test_target_unitary_is_unitary(angles):
    u = target_unitary(GateSpec(*angles))
    assert max_norm(u.conj().T @ u - np.eye(2)) < 1e-12


def test_schedule_boundary_conditions():
    s = make_invariant_schedule(GATES["hadamard"], 30.0, 3000)
    assert s.chi[0] == 0 and s.chi[-1] == 0 and s.chi[s.mid] == PI
    assert s.chi_dot[0] == pytest.approx(0, abs=1e-15)
    assert s.t[s.mid] == 15.0
    # eta jumps between the mid node and the next one
    assert abs(s.eta[s.mid + 1] - s.eta[s.mid]) > 1.0


def test_schedule_rejects_bad_grid():
    with pytest.raises(ValidationError):
        make_invariant_schedule(GATES["z"], 30.0, 3001)
    with pytest.raises(ValidationError):
        make_invariant_schedule(GATES["z"], -1.0, 3000)


def test_inversion_finite_at_singular_nodes():
    s = make_invariant_schedule(GATES["z"], 30.0, 3000)
    omega, phi0 = invert_invariant(s)
    assert np.all(np.isfinite(omega)) and np.all(np.isfinite(phi0))
    assert omega[0] == 0 and omega[s.mid] == 0 and omega[-1] == 0
    assert np.all(omega >= 0)


def test_pulse_amplitude_scale():
    # peak Omega/2pi of a 30 ns gate is a few tens of MHz
    assert 0.04 < synthesize(GATES["z"], 30.0).max_amplitude() / (2 * PI) < 0.07


@pytest.mark.parametrize("gate", [GATES["z"], GATES["hadamard"], GateSpec(1.1, 0.7, 2.2)])
def test_invariant_residual(gate):
    s = make_invariant_schedule(gate, 30.0, 3000)
    assert verify_invariant(s, gate) < 1e-10


def test_invariant_residual_detects_bad_phase():
    gate = GATES["hadamard"]
    s = make_invariant_schedule(gate, 30.0, 3000)
    pulse = synthesize(gate, 30.0)
    bad = type(pulse)(pulse.t, pulse.omega0, pulse.omega1, pulse.phi0 + 0.1, pulse.phi1, gate.theta, gate.phi)
    assert verify_invariant(s, gate, bad) > 1e-3


def test_invariant_eigenvectors():
    gate = GATES["hadamard"]
    s = make_invariant_schedule(gate, 30.0, 3000)
    for t in (0.0, 7.5, 15.0, 22.5, 30.0):
        inv = invariant_matrix(s, gate, t)
        for which, sign in ((0, 0.5), (1, -0.5)):
            v = auxiliary_state(s, gate, t, which)[:3]
            np.testing.assert_allclose(inv @ v, sign * v, atol=1e-14)
        mu0, mu1 = invariant_eigenvectors(s, t)
        assert abs(np.vdot(mu0, mu1)) < 1e-15


def test_dark_state_decoupled():
    for gate in (GATES["hadamard"], GateSpec(2.0, -1.3, 1.0)):
        h = resonant_hamiltonians(synthesize(gate, 30.0))
        d, b = dark_state(gate), bright_state(gate)
        assert np.max(np.abs(h @ d)) < 1e-15
        # <b|H|e> = (Omega/2) e^{i phi0} on every sample
        pulse = synthesize(gate, 30.0)
        omega = np.hypot(pulse.omega0, pulse.omega1)
        coupling = np.einsum("i,nij,j->n", b.conj(), h, np.eye(4)[1])
        np.testing.assert_allclose(coupling, 0.5 * omega * np.exp(1j * pulse.phi0), atol=1e-14)


def test_relative_phase_constant():
    gate = GateSpec(PI / 4, 0.4)
    p = synthesize(gate, 30.0)
    np.testing.assert_allclose(p.phi1 - p.phi0, gate.phi + PI, atol=1e-13)


def test_z_gate_has_no_drive0():
    assert np.all(synthesize(GATES["z"], 30.0).omega0 == 0)


@settings(max_examples=10, deadline=None)
@given(gate_angles)
def test_spin_echo_cancels_dynamical_phase(angles):
    gate = GateSpec(*angles)
    s = make_invariant_schedule(gate, 30.0, 3000)
    first, second = dynamical_phase(s, gate, split=True)
    assert abs(first) > 1e-3
    assert abs(first + second) < 1e-6


def test_pulse_csv(tmp_path):
    p = synthesize(GATES["hadamard"], 30.0, 200)
    path = tmp_path / "p.csv"
    p.to_csv(path, ["note"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# note"
    assert lines[1] == "t_ns,omega0_rad_per_ns,omega1_rad_per_ns,phi0_rad,phi1_rad"
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)
    np.testing.assert_allclose(data[:, 1], p.omega0)
