"""Nonadiabatic holonomic gates on a four-level weakly anharmonic qudit."""

__version__ = "0.1.0"

from .core import ValidationError, embed_computational, state_fidelity, computational_leakage  # noqa: E402
from .synthesis import GATES, GateSpec, PulseSchedule, synthesize, target_unitary  # noqa: E402
from .device import ConfigurationError, CorrectionParams, DeviceParams, DriveEnvelope  # noqa: E402
from .dynamics import IntegrationError, TimeGrid, evolve_lindblad, evolve_unitary  # noqa: E402
from .metrics import SearchConfig, error_budget, gate_fidelity, optimize, sweep  # noqa: E402
