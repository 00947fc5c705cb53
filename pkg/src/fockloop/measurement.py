"""Dispersive probe measurements of the photon number.

Each two-level probe crosses the cavity, picks up a photon-number-dependent
phase, and is read out in a chosen Ramsey basis. The back-action on the field
is a pair of diagonal Kraus operators, so the whole measurement layer works
with length-(n_max+1) vectors and Hadamard masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericsError

# Reported detector outcomes: ground, excited, or no click.
OUTCOME_G = 0
OUTCOME_E = 1
OUTCOME_U = 2
OUTCOME_CHARS = ("g", "e", "u")

PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class DephasingModel:
    """Probe phase accumulated per photon.

    Either a linear slope phi_bar (radians per photon) or an explicit table of
    phase shifts indexed by photon number. omega0 (vacuum Rabi frequency) and
    delta (probe-cavity detuning), both rad/s, may be recorded for reference;
    they are not used by the linear model directly.
    """

    phi_bar: float | None = None
    table: tuple[float, ...] | None = None
    omega0: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if (self.phi_bar is None) == (self.table is None):
            raise ConfigError("exactly one of phi_bar or table must be given")
        if self.phi_bar is not None and not (self.phi_bar > 0.0):
            raise ConfigError(f"phi_bar must be positive, got {self.phi_bar!r}")
        if self.table is not None:
            diffs = np.diff(np.asarray(self.table, dtype=float))
            if len(self.table) < 2 or not np.all(diffs > 0.0):
                raise ConfigError("dephasing table must be strictly increasing in n")

    def phi(self, n: int) -> float:
        if self.table is not None:
            if n >= len(self.table):
                raise ConfigError(
                    f"dephasing table has {len(self.table)} entries, need photon number {n}")
            return float(self.table[n])
        return self.phi_bar * n

    def phi_vector(self, dim: int) -> np.ndarray:
        return np.array([self.phi(n) for n in range(dim)])


def midfringe_phase(model: DephasingModel, n_tag: int) -> float:
    """Ramsey phase placing the target photon number on the steepest fringe."""
    return math.pi / 2.0 - model.phi(n_tag)


@dataclass(frozen=True)
class PhaseSchedule:
    """Four-cycle Ramsey phase pattern: mid-fringe, +sigma, mid-fringe, -sigma.

    Indexed by the cavity-crossing cycle (1-based), so the first probe is
    always measured at the mid-fringe setting.
    """

    phi_r0: float
    sigma_r: float
    pattern: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "pattern", (0.0, self.sigma_r, 0.0, -self.sigma_r))

    def index_for(self, cycle: int) -> int:
        return (cycle - 1) % 4

    def phase_for(self, cycle: int) -> float:
        return self.phi_r0 + self.pattern[self.index_for(cycle)]


class KrausPair:
    """Diagonal measurement back-action for one Ramsey phase.

    mg[n] = cos((phi_r + phi(n))/2), me[n] = sin of the same angle, so
    mg^2 + me^2 = 1 holds per entry by construction.
    """

    __slots__ = ("phi_r", "mg", "me", "mg2", "me2", "wg", "we", "wsum")

    def __init__(self, phi_r: float, model: DephasingModel, dim: int):
        angles = 0.5 * (phi_r + model.phi_vector(dim))
        self.phi_r = phi_r
        self.mg = np.cos(angles)
        self.me = np.sin(angles)
        self.mg2 = self.mg * self.mg
        self.me2 = self.me * self.me
        # Hadamard masks: conjugation by a diagonal operator is an
        # elementwise product with the outer product of its diagonal.
        self.wg = np.outer(self.mg, self.mg)
        self.we = np.outer(self.me, self.me)
        self.wsum = self.wg + self.we

    @classmethod
    def identity(cls, dim: int) -> "KrausPair":
        pair = cls.__new__(cls)
        pair.phi_r = 0.0
        pair.mg = np.ones(dim)
        pair.me = np.zeros(dim)
        pair.mg2 = np.ones(dim)
        pair.me2 = np.zeros(dim)
        pair.wg = np.ones((dim, dim))
        pair.we = np.zeros((dim, dim))
        pair.wsum = np.ones((dim, dim))
        return pair


def kraus_pair(phi_r: float, model: DephasingModel, dim: int) -> KrausPair:
    return KrausPair(phi_r, model, dim)


def schedule_kraus(schedule: PhaseSchedule, model: DephasingModel, dim: int) -> list[KrausPair]:
    """The four Kraus pairs used cyclically by the probe stream."""
    return [KrausPair(schedule.phi_r0 + p, model, dim) for p in schedule.pattern]


def detection_probabilities(rho: np.ndarray, kraus: KrausPair) -> tuple[float, float]:
    """Born probabilities of reading the probe in g or e."""
    diag = np.diagonal(rho)
    return float(kraus.mg2 @ diag), float(kraus.me2 @ diag)


def project(rho: np.ndarray, kraus: KrausPair, outcome: int) -> np.ndarray:
    """Measurement back-action conditioned on a perfectly read outcome."""
    if outcome == OUTCOME_G:
        w, m2 = kraus.wg, kraus.mg2
    elif outcome == OUTCOME_E:
        w, m2 = kraus.we, kraus.me2
    else:
        raise NumericsError(f"cannot project on outcome code {outcome!r}")
    p = float(m2 @ np.diagonal(rho))
    if p < PROB_FLOOR:
        raise NumericsError(
            f"projection on outcome {OUTCOME_CHARS[outcome]} has probability {p!r}")
    out = w * rho
    out /= p
    return out
