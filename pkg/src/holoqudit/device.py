"""Device parameters, pulse corrections and the drive Hamiltonians.

All frequencies and rates are angular, in rad/ns. A drive with amplitude
``Omega`` and phase ``phi`` is carried as the complex envelope
``Lambda = Omega * exp(i phi)``; quadrature corrections only change Lambda, so
the interaction and leakage Hamiltonians see them consistently.
"""

import configparser
import dataclasses
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import ValidationError
from .synthesis import PulseSchedule

TWO_PI = 2 * np.pi
SQRT2_HALF = np.sqrt(2) / 2

DEVICE_KEYS = (
    "alpha_over_2pi_mhz",
    "gamma1_over_2pi_khz",
    "gamma2_over_2pi_khz",
    "omega0_ghz",
    "omega1_ghz",
    "omega2_ghz",
)
PRESETS = ("paper-sim", "experiment")


class ConfigurationError(ValueError):
    pass


def read_key_values(source):
    """Parse ``key = value`` lines ('#' comments allowed) into a str->str dict.

    ``source`` is a path or an already open text stream.
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    text = source.read() if hasattr(source, "read") else open(source).read()
    try:
        parser.read_string("[root]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    return dict(parser["root"])


@dataclass(frozen=True)
class DeviceParams:
    alpha: float
    gamma1: float
    gamma2: float
    omega_levels: tuple = None

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha == 0:
            raise ValidationError("alpha must be finite and nonzero")
        if not (self.gamma1 >= 0 and self.gamma2 >= 0):
            raise ValidationError("decoherence rates must be non-negative")
        if self.omega_levels is not None:
            levels = tuple(float(w) for w in self.omega_levels)
            if len(levels) != 3:
                raise ValidationError("omega_levels needs (omega0, omega1, omega2)")
            if abs(levels[0] - levels[1] - self.alpha) > 1e-9:
                raise ValidationError("omega0 - omega1 must equal alpha")
            object.__setattr__(self, "omega_levels", levels)

    @classmethod
    def from_units(cls, alpha_over_2pi_mhz, gamma1_over_2pi_khz, gamma2_over_2pi_khz,
                   omega0_ghz=None, omega1_ghz=None, omega2_ghz=None):
        """Build from the lab units used in config files and on the command line."""
        levels = (omega0_ghz, omega1_ghz, omega2_ghz)
        if all(w is None for w in levels):
            omega = None
        elif any(w is None for w in levels):
            raise ConfigurationError("omega0_ghz, omega1_ghz and omega2_ghz go together")
        else:
            omega = tuple(TWO_PI * float(w) for w in levels)
        alpha = TWO_PI * float(alpha_over_2pi_mhz) * 1e-3
        if omega is not None:
            # the level spacings fix alpha; tolerate rounding in the typed value
            if abs(omega[0] - omega[1] - alpha) > TWO_PI * 1e-6:
                raise ValidationError("alpha_over_2pi_mhz disagrees with omega0_ghz - omega1_ghz")
            alpha = omega[0] - omega[1]
        return cls(
            alpha=alpha,
            gamma1=TWO_PI * float(gamma1_over_2pi_khz) * 1e-6,
            gamma2=TWO_PI * float(gamma2_over_2pi_khz) * 1e-6,
            omega_levels=omega,
        )

    @classmethod
    def from_mapping(cls, mapping):
        unknown = set(mapping) - set(DEVICE_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown device keys: {sorted(unknown)}")
        missing = [k for k in DEVICE_KEYS[:3] if k not in mapping]
        if missing:
            raise ConfigurationError(f"missing device keys: {missing}")
        try:
            values = {k: float(v) for k, v in mapping.items()}
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        return cls.from_units(**values)

    @classmethod
    def from_config(cls, source):
        return cls.from_mapping(read_key_values(source))

    @classmethod
    def preset(cls, name):
        if name not in PRESETS:
            raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESETS}")
        with resources.files(__package__).joinpath(f"presets/{name}.cfg").open() as fh:
            return cls.from_config(fh)

    def to_units(self):
        out = {
            "alpha_over_2pi_mhz": self.alpha / TWO_PI * 1e3,
            "gamma1_over_2pi_khz": self.gamma1 / TWO_PI * 1e6,
            "gamma2_over_2pi_khz": self.gamma2 / TWO_PI * 1e6,
        }
        if self.omega_levels is not None:
            for k, w in zip(DEVICE_KEYS[3:], self.omega_levels):
                out[k] = w / TWO_PI
        return out

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CorrectionParams:
    kind: str = "none"
    v1: float = 0.0
    v2: float = 0.0
    v3: float = 0.0
    v4: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    eta_g_override: float = None

    def __post_init__(self):
        if self.kind not in ("none", "drag", "op"):
            raise ValidationError(f"unknown correction kind {self.kind!r}")
        vs = (self.v1, self.v2, self.v3, self.v4)
        betas = (self.beta1, self.beta2)
        if not all(np.isfinite(x) for x in vs + betas):
            raise ValidationError("correction weights must be finite")
        if self.kind != "drag" and any(vs):
            raise ValidationError("v1..v4 are only meaningful for drag")
        if self.kind != "op" and any(betas):
            raise ValidationError("beta1, beta2 are only meaningful for op")

    @property
    def drag_weights(self):
        return (self.v1, self.v2, self.v3, self.v4)

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class DriveEnvelope:
    t: np.ndarray
    lambda0: np.ndarray
    lambda1: np.ndarray

    def __post_init__(self):
        if not (len(self.t) == len(self.lambda0) == len(self.lambda1)):
            raise ValidationError("envelope arrays must share the time grid")

    @classmethod
    def from_pulse(cls, pulse):
        return cls(
            t=np.asarray(pulse.t, dtype=float),
            lambda0=pulse.omega0 * np.exp(1j * pulse.phi0),
            lambda1=pulse.omega1 * np.exp(1j * pulse.phi1),
        )

    @classmethod
    def constant(cls, t, omega0, phi0, omega1, phi1):
        t = np.asarray(t, dtype=float)
        ones = np.ones_like(t)
        return cls(t, omega0 * np.exp(1j * phi0) * ones, omega1 * np.exp(1j * phi1) * ones)

    def index(self, t):
        i = int(np.rint(t / (self.t[-1] / (len(self.t) - 1))))
        if i < 0 or i >= len(self.t) or abs(self.t[i] - t) > 1e-9 * max(1.0, self.t[-1]):
            raise ValidationError(f"t={t} is not a grid point")
        return i


def _piecewise_gradient(f, t):
    """d f/dt with the mid-gate node splitting the grid into two smooth halves."""
    n = len(t) - 1
    m = n // 2
    out = np.empty_like(f)
    out[m:] = np.gradient(f[m:], t[m:], edge_order=2)
    # the mid node belongs to the first branch, as in the synthesized schedule
    out[: m + 1] = np.gradient(f[: m + 1], t[: m + 1], edge_order=2)
    return out


def _drag_quadratures(t, omega, phi, vx, vy, alpha, y_sign):
    x = omega * np.cos(phi)
    y = omega * np.sin(phi)
    xc = x + vx * _piecewise_gradient(x, t) / (2 * alpha)
    yc = y + y_sign * vy * _piecewise_gradient(y, t) / (2 * alpha)
    return np.hypot(xc, yc), np.arctan2(yc, xc)


def apply_drag(pulse, params, alpha):
    """DRAG-corrected amplitudes and phases.

    Drive 1 uses (X1 + v1 dX1/2a, Y1 - v2 dY1/2a) and drive 0 uses
    (X0 + v3 dX0/2a, Y0 + v4 dY0/2a); amplitude is the root of the sum of
    squares and the phase its two-argument arctangent. Where the amplitude
    vanishes the phase is taken from the uncorrected pulse.
    """
    if alpha == 0:
        raise ValidationError("alpha must be nonzero")
    v1, v2, v3, v4 = (params.v1, params.v2, params.v3, params.v4) if params.kind == "drag" else (0, 0, 0, 0)
    if not any((v1, v2, v3, v4)):
        return pulse
    t = pulse.t
    om1, ph1 = _drag_quadratures(t, pulse.omega1, pulse.phi1, v1, v2, alpha, -1.0)
    om0, ph0 = _drag_quadratures(t, pulse.omega0, pulse.phi0, v3, v4, alpha, +1.0)
    ph0 = np.where(om0 > 0, ph0, pulse.phi0)
    ph1 = np.where(om1 > 0, ph1, pulse.phi1)
    meta = dict(pulse.meta, drag=(v1, v2, v3, v4))
    return dataclasses.replace(pulse, omega0=om0, omega1=om1, phi0=ph0, phi1=ph1, meta=meta)


def apply_op(pulse, params):
    """Quadrature-scaled envelopes (1 + i beta_k) Omega_k exp(i phi_k)."""
    env = DriveEnvelope.from_pulse(pulse)
    if params.kind != "op":
        return env
    return DriveEnvelope(
        env.t, (1 + 1j * params.beta1) * env.lambda0, (1 + 1j * params.beta2) * env.lambda1
    )


def correct(pulse, params, alpha):
    """Envelope for any correction kind."""
    if params.kind == "drag":
        return DriveEnvelope.from_pulse(apply_drag(pulse, params, alpha))
    return apply_op(pulse, params)


def _hermitian(h):
    return h + np.conj(np.swapaxes(h, -1, -2))


def interaction_hamiltonians(env):
    """Resonant interaction-frame Hamiltonian at every envelope sample."""
    h = np.zeros((len(env.t), 4, 4), dtype=np.complex128)
    h[:, 0, 1] = 0.5 * env.lambda0
    h[:, 1, 2] = 0.5 * np.conj(env.lambda1)
    return _hermitian(h)


def leak_hamiltonians(env, alpha):
    """Off-resonant cross-driving terms at every envelope sample."""
    rot = np.exp(1j * alpha * env.t)
    l0, l1c = env.lambda0, np.conj(env.lambda1)
    h = np.zeros((len(env.t), 4, 4), dtype=np.complex128)
    h[:, 0, 1] = SQRT2_HALF * 0.5 * l1c * np.conj(rot)
    h[:, 1, 2] = SQRT2_HALF * l0 * rot
    h[:, 2, 3] = SQRT2_HALF * (np.sqrt(1.5) * l0 * rot**2 + 0.5 * np.sqrt(3) * l1c * rot)
    return _hermitian(h)


def h_interaction(env, t):
    i = env.index(t)
    return interaction_hamiltonians(_slice(env, i))[0]


def h_leak(env, alpha, t):
    i = env.index(t)
    return leak_hamiltonians(_slice(env, i), alpha)[0]


def _slice(env, i):
    return DriveEnvelope(env.t[i : i + 1], env.lambda0[i : i + 1], env.lambda1[i : i + 1])


def _as_envelope(drive):
    return DriveEnvelope.from_pulse(drive) if isinstance(drive, PulseSchedule) else drive


def lab_frame_hamiltonians(drive, device):
    """Full lab-frame ladder Hamiltonian at every sample of a pulse or envelope.

    The real field is f = Re[L0 e^{i w0 t}] + Re[L1* e^{i w1 t}] / sqrt(2),
    i.e. Omega0 cos(w0 t + phi0) + (Omega1 / sqrt 2) cos(w1 t - phi1) without
    corrections.
    """
    if device.omega_levels is None:
        raise ConfigurationError("lab-frame Hamiltonian needs omega_levels in DeviceParams")
    w0, w1, w2 = device.omega_levels
    env = _as_envelope(drive)
    t = env.t
    f = np.real(env.lambda0 * np.exp(1j * w0 * t)) + np.real(
        np.conj(env.lambda1) * np.exp(1j * w1 * t)
    ) / np.sqrt(2)
    h = np.zeros((len(t), 4, 4), dtype=np.complex128)
    h[:, 0, 1] = f
    h[:, 1, 2] = np.sqrt(2) * f
    h[:, 2, 3] = np.sqrt(3) * f
    h = _hermitian(h)
    h[:, [1, 2, 3], [1, 2, 3]] = [w0, w0 + w1, w0 + w1 + w2]
    return h


def h_lab_frame(pulse, device, t):
    env = _as_envelope(pulse)
    return lab_frame_hamiltonians(_slice(env, env.index(t)), device)[0]


def level_energies(device):
    """Diagonal of the bare lab-frame Hamiltonian."""
    if device.omega_levels is None:
        raise ConfigurationError("needs omega_levels in DeviceParams")
    w0, w1, w2 = device.omega_levels
    return np.array([0.0, w0, w0 + w1, w0 + w1 + w2])
