"""Lyapunov feedback law steering the field toward a target Fock state.

The control amplitude is the gradient of target fidelity under a small
displacement; far from the target, where that gradient vanishes on Fock
states, a fixed kick pushes the photon number toward the target instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fock import mean_photon, quadrature_generator

BRANCH_LYAPUNOV = "lyapunov"
BRANCH_KICK = "kick"

ALPHA_CLAMP = 1.0


def default_gain(n_tag: int) -> float:
    """Gain normalizing the fidelity gradient: 1 / (4 n_tag + 2).

    The denominator is the squared commutator norm tr([P_tag, K]^2) of the
    target projector with the displacement generator K = a^T - a.
    """
    return 1.0 / (4.0 * n_tag + 2.0)


def commutator_coupling(n_tag: int, dim: int) -> np.ndarray:
    """[P_tag, K] with P_tag = |n_tag><n_tag| and K = a^T - a."""
    k = quadrature_generator(dim - 1)
    p = np.zeros((dim, dim))
    p[n_tag, n_tag] = 1.0
    return p @ k - k @ p


def lyapunov_amplitude(rho: np.ndarray, coupling: np.ndarray, c1: float) -> float:
    """c1 * tr([P_tag, K] rho), evaluated as a full Frobenius contraction."""
    # tr(C rho) = sum_ij C_ij rho_ji; rho is symmetric so the flat dot applies.
    return c1 * float(np.dot(coupling.ravel(), rho.ravel()))


@dataclass
class ControlParams:
    """Resolved controller settings for a fixed target and dimension."""

    n_tag: int
    dim: int
    c1: float
    c2: float
    epsilon: float
    alpha_clamp: float = ALPHA_CLAMP
    coupling: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.n_tag <= self.dim - 2):
            raise ConfigError(
                f"n_tag={self.n_tag} needs headroom below the cutoff (dim={self.dim})")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        self.coupling = commutator_coupling(self.n_tag, self.dim)


def compute_control(rho: np.ndarray, params: ControlParams) -> tuple[float, str, bool]:
    """Control amplitude for the current state estimate.

    Returns (alpha, branch, clamped). Above the fidelity threshold epsilon the
    Lyapunov gradient term is used; below it, a fixed kick of size c2 toward
    the target photon number, with sign(0) taken as +1 so the tie still moves
    the field.
    """
    f = float(rho[params.n_tag, params.n_tag])
    if f >= params.epsilon:
        alpha = lyapunov_amplitude(rho, params.coupling, params.c1)
        branch = BRANCH_LYAPUNOV
    else:
        delta = params.n_tag - mean_photon(rho)
        alpha = params.c2 if delta >= 0.0 else -params.c2
        branch = BRANCH_KICK
    clamped = False
    if alpha > params.alpha_clamp:
        alpha, clamped = params.alpha_clamp, True
    elif alpha < -params.alpha_clamp:
        alpha, clamped = -params.alpha_clamp, True
    return alpha, branch, clamped
