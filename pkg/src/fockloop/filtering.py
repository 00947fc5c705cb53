"""Delayed-knowledge state filter for the feedback loop.

Each probe outcome is reported a fixed number of cycles after the probe
crossed the cavity. The filter keeps a lagged state that incorporates every
reported outcome, plus a FIFO of in-flight probes; each FIFO slot remembers
the displacement injected just before its probe crossed. The control
estimate extends the lagged state through the FIFO with outcome-averaged
interactions, so it reflects everything known at the current cycle.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ConfigError, NumericsError
from .fock import LindbladKernel, conjugate_symmetric, relax_step
from .measurement import (
    OUTCOME_CHARS,
    OUTCOME_E,
    OUTCOME_G,
    OUTCOME_U,
    PROB_FLOOR,
    KrausPair,
    project,
)


def missing_click_weight(eta_a: float, eta_d: float) -> float:
    """Posterior probability that a probe crossed, given no click was seen.

    Undefined when eta_a*eta_d == 1: a missing click is then impossible.
    """
    denom = 1.0 - eta_a * eta_d
    if denom <= 0.0:
        raise NumericsError(
            "no-click branch is impossible when every probe is detected "
            f"(eta_a={eta_a!r}, eta_d={eta_d!r})")
    return eta_a * (1.0 - eta_d) / denom


def click_update(rho: np.ndarray, kraus: KrausPair, outcome: int,
                 eta_f: float) -> np.ndarray:
    """Posterior after an observed click, allowing a flipped reading.

    With probability eta_f the detector reports the opposite state, so the
    back-action is the eta_f-weighted mixture of the two projections.
    """
    if outcome == OUTCOME_G:
        w = (1.0 - eta_f) * kraus.wg + eta_f * kraus.we
        m2 = (1.0 - eta_f) * kraus.mg2 + eta_f * kraus.me2
    elif outcome == OUTCOME_E:
        w = (1.0 - eta_f) * kraus.we + eta_f * kraus.wg
        m2 = (1.0 - eta_f) * kraus.me2 + eta_f * kraus.mg2
    else:
        raise NumericsError(f"cannot apply a click update for outcome code {outcome!r}")
    p = float(m2 @ np.diagonal(rho))
    if p < PROB_FLOOR:
        raise NumericsError(
            f"click update on outcome {OUTCOME_CHARS[outcome]} has probability {p!r}")
    out = w * rho
    out /= p
    return out


def noclick_update(rho: np.ndarray, kraus: KrausPair, eta_a: float,
                   eta_d: float) -> np.ndarray:
    """Posterior when no click was seen: either no probe crossed, or its
    reading was lost. Trace preserving, so no renormalization is needed."""
    p_u = missing_click_weight(eta_a, eta_d)
    return ((1.0 - p_u) + p_u * kraus.wsum) * rho


def unread_interaction(rho: np.ndarray, kraus: KrausPair, eta_a: float) -> np.ndarray:
    """Outcome-averaged back-action of a probe whose reading is still pending.

    Marginalizing over the eventual report leaves only occupancy eta_a and
    the phase damping of the measurement; detector losses and flips drop out.
    """
    return ((1.0 - eta_a) + eta_a * kraus.wsum) * rho


def ideal_update(rho: np.ndarray, kraus: KrausPair, outcome: int) -> np.ndarray:
    """Perfect-detection posterior; the eta_f -> 0 limit of click_update."""
    return project(rho, kraus, outcome)


PADDING = -1


class Slot:
    """One in-flight probe: which Kraus pair it saw, and the displacement
    injected just before it crossed (kept both as amplitude and matrix)."""

    __slots__ = ("kraus_idx", "alpha", "dmat")

    def __init__(self, kraus_idx: int, alpha: float, dmat: np.ndarray | None):
        self.kraus_idx = kraus_idx
        self.alpha = alpha
        self.dmat = dmat

    @classmethod
    def padding(cls) -> "Slot":
        return cls(PADDING, 0.0, None)


class FilterParams:
    """Precomputed update masks for one experiment.

    Click masks fold the flip probability into a single Hadamard mask per
    outcome; no-click and unread masks are trace preserving by construction.
    relax_kernel=None switches cavity damping off.
    """

    def __init__(self, kraus_cycle: list[KrausPair], relax_kernel: LindbladKernel | None,
                 eta_a: float, eta_d: float, eta_f: float, depth: int):
        for name, eta in (("eta_a", eta_a), ("eta_d", eta_d), ("eta_f", eta_f)):
            if not (0.0 <= eta <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {eta!r}")
        if eta_f >= 0.5:
            raise ConfigError(
                f"eta_f must stay below 0.5 or readings carry no information, got {eta_f!r}")
        if depth < 0:
            raise ConfigError(f"report delay must be non-negative, got {depth!r}")
        if not kraus_cycle:
            raise ConfigError("at least one Kraus pair is required")
        self.kraus_cycle = tuple(kraus_cycle)
        self.relax_kernel = relax_kernel
        self.eta_a = eta_a
        self.eta_d = eta_d
        self.eta_f = eta_f
        self.depth = depth
        if eta_a * eta_d < 1.0:
            self.p_u = eta_a * (1.0 - eta_d) / (1.0 - eta_a * eta_d)
        else:
            self.p_u = None
        self.click_w: list[tuple[np.ndarray, np.ndarray]] = []
        self.click_m2: list[tuple[np.ndarray, np.ndarray]] = []
        self.noclick_w: list[np.ndarray | None] = []
        self.unread_w: list[np.ndarray] = []
        for kp in self.kraus_cycle:
            wg = (1.0 - eta_f) * kp.wg + eta_f * kp.we
            we = (1.0 - eta_f) * kp.we + eta_f * kp.wg
            self.click_w.append((wg, we))
            self.click_m2.append((np.ascontiguousarray(np.diagonal(wg)),
                                  np.ascontiguousarray(np.diagonal(we))))
            if self.p_u is None:
                self.noclick_w.append(None)
            else:
                self.noclick_w.append((1.0 - self.p_u) + self.p_u * kp.wsum)
            self.unread_w.append((1.0 - eta_a) + eta_a * kp.wsum)


class FilterState:
    """Lagged state plus the FIFO of in-flight probes.

    The FIFO starts with `depth` inert padding slots so that pops during the
    first cycles, before any real report exists, are no-ops. Slots for real
    probes are stamped at push time with the last recorded injection.
    """

    def __init__(self, params: FilterParams, rho0: np.ndarray):
        self.params = params
        self.chain_rho = np.array(rho0, dtype=float, copy=True)
        self.queue: deque[Slot] = deque(Slot.padding() for _ in range(params.depth))
        self.last_alpha = 0.0
        self.last_dmat: np.ndarray | None = None

    def record_injection(self, alpha: float, dmat: np.ndarray | None) -> None:
        """Remember the displacement applied at the end of the current cycle."""
        self.last_alpha = alpha
        self.last_dmat = dmat if alpha != 0.0 else None

    def push_sample(self, kraus_idx: int) -> None:
        """Enqueue the probe crossing now; it saw the last recorded injection."""
        self.queue.append(Slot(kraus_idx, self.last_alpha, self.last_dmat))

    def chain_advance(self, outcome: int) -> None:
        """Fold the report arriving this cycle into the lagged state.

        The popped slot identifies which probe the report belongs to; its
        stored displacement is applied first, then the conditional
        measurement update, then one relaxation step. Padding pops do
        nothing: no probe crossed, and the elapsed relaxation for those
        cycles lives in the in-flight extension instead.
        """
        params = self.params
        slot = self.queue.popleft()
        if slot.kraus_idx == PADDING:
            return
        rho = self.chain_rho
        if slot.dmat is not None:
            rho = conjugate_symmetric(rho, slot.dmat)
        if outcome == OUTCOME_U:
            w = params.noclick_w[slot.kraus_idx]
            if w is None:
                raise NumericsError(
                    "received a no-click report although eta_a*eta_d == 1 makes it impossible")
            rho = w * rho
        else:
            w = params.click_w[slot.kraus_idx][outcome]
            p = float(params.click_m2[slot.kraus_idx][outcome] @ np.diagonal(rho))
            if p < PROB_FLOOR:
                raise NumericsError(
                    f"report {OUTCOME_CHARS[outcome]} has filter probability {p!r}")
            rho = w * rho
            rho /= p
        if params.relax_kernel is not None:
            rho = relax_step(rho, params.relax_kernel)
        self.chain_rho = rho

    def estimate_with_inflight(self) -> np.ndarray:
        """Best current-state estimate: the lagged state pushed through every
        pending probe with outcome-averaged updates.

        May return the lagged state itself when nothing is in flight; callers
        must treat the result as read-only.
        """
        params = self.params
        rho = self.chain_rho
        for slot in self.queue:
            if slot.kraus_idx == PADDING:
                continue
            if slot.dmat is not None:
                rho = conjugate_symmetric(rho, slot.dmat)
            rho = params.unread_w[slot.kraus_idx] * rho
            if params.relax_kernel is not None:
                rho = relax_step(rho, params.relax_kernel)
        return rho
