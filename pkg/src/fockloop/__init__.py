"""Discrete-time quantum feedback simulator for photon-number stabilization.

A stream of off-resonant two-level probes performs quantum non-demolition
measurements of the photon number in a damped cavity; a quantum filter tracks
the state through detector losses and a fixed detection delay, and a Lyapunov
controller injects small coherent displacements to steer the field toward a
target Fock state.
"""

__version__ = "0.1.0"

from .errors import ConfigError, FockloopError, NumericsError, TruncationWarning

__all__ = [
    "ConfigError",
    "FockloopError",
    "NumericsError",
    "TruncationWarning",
    "__version__",
]
