"""Monte Carlo ground truth: one stochastic realization of the cavity.

The physical state follows the same cycle structure as the filter (probe
interaction, then relaxation, then injection) but draws concrete random
events: probe occupancy, Born-rule collapse, detector loss and misreads,
and photon jumps instead of the averaged relaxation map.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericsError
from .fock import RelaxationParams, number_diag, raise_lower_diag
from .measurement import (
    OUTCOME_E,
    OUTCOME_G,
    OUTCOME_U,
    KrausPair,
    detection_probabilities,
    project,
)

JUMP_NONE = 0
JUMP_DOWN = 1
JUMP_UP = 2


class TruthRecord:
    """What physically happened when one probe crossed: whether an atom was
    present, and its post-interaction state (meaningful only if present)."""

    __slots__ = ("occupied", "state")

    def __init__(self, occupied: bool, state: int):
        self.occupied = occupied
        self.state = state


def sample_and_interact(rho: np.ndarray, kraus: KrausPair, eta_a: float,
                        rng: np.random.Generator) -> tuple[TruthRecord, np.ndarray]:
    """Draw probe occupancy and, if present, collapse the state by Born rule."""
    if rng.random() >= eta_a:
        return TruthRecord(False, OUTCOME_U), rho
    pg, pe = detection_probabilities(rho, kraus)
    total = pg + pe
    outcome = OUTCOME_G if rng.random() * total < pg else OUTCOME_E
    return TruthRecord(True, outcome), project(rho, kraus, outcome)


def report_outcome(record: TruthRecord, eta_d: float, eta_f: float,
                   rng: np.random.Generator) -> int:
    """Turn a crossing record into what the detector actually says.

    Absent probes and detection losses both read as no-click; a detected
    probe is misread with probability eta_f.
    """
    if not record.occupied:
        return OUTCOME_U
    if rng.random() >= eta_d:
        return OUTCOME_U
    if rng.random() < eta_f:
        return OUTCOME_E if record.state == OUTCOME_G else OUTCOME_G
    return record.state


class JumpKernel:
    """Precomputed pieces of the stochastic relaxation step over one period.

    A cycle either loses a photon, gains a thermal photon, or undergoes the
    diagonal no-jump evolution; probabilities are first order in
    kappa * T_a, matching the averaged Euler map in expectation.
    """

    def __init__(self, params: RelaxationParams, n_max: int):
        kdt = params.kappa_dt
        if kdt < 0.0:
            raise NumericsError(f"negative kappa*T_a {kdt!r}")
        self.kappa_dt = kdt
        self.n_th = params.n_th
        self.rate_down = kdt * (1.0 + params.n_th)
        self.rate_up = kdt * params.n_th
        self.ndiag = number_diag(n_max)
        self.aad = raise_lower_diag(n_max)
        s = np.sqrt(np.arange(1.0, n_max + 1))
        self.shift_mask = np.outer(s, s)
        decay = (1.0 + params.n_th) * self.ndiag + params.n_th * self.aad
        m0 = 1.0 - 0.5 * kdt * decay
        self.w0 = np.outer(m0, m0)
        self.m0sq = m0 * m0


def jump_step(rho: np.ndarray, kernel: JumpKernel,
              rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """One stochastic relaxation period; returns the new state and what
    happened (photon loss, thermal excitation, or no jump)."""
    if kernel.kappa_dt == 0.0:
        return rho, JUMP_NONE
    diag = np.diagonal(rho)
    p_down = kernel.rate_down * float(kernel.ndiag @ diag)
    p_up = kernel.rate_up * float(kernel.aad @ diag)
    r = rng.random()
    dim = rho.shape[0]
    if r < p_down:
        out = np.zeros_like(rho)
        out[: dim - 1, : dim - 1] = kernel.shift_mask * rho[1:, 1:]
        out /= np.trace(out)
        return out, JUMP_DOWN
    if r < p_down + p_up:
        out = np.zeros_like(rho)
        out[1:, 1:] = kernel.shift_mask * rho[: dim - 1, : dim - 1]
        out /= np.trace(out)
        return out, JUMP_UP
    out = kernel.w0 * rho
    out /= float(kernel.m0sq @ diag)
    return out, JUMP_NONE
