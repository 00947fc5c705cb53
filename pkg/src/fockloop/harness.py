"""Closed-loop orchestration: single trajectories, ensembles, aligned
jump statistics, convergence statistics, and the per-cycle latency bench.

Randomness derivation: a run uses numpy's SeedSequence(config.seed) spawned
into one child stream per trajectory, so trajectory t is reproducible on
any platform from (config, seed, t) alone.
"""

from __future__ import annotations

import math
import time
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash
from .control import ControlParams, compute_control
from .errors import NumericsError, TruncationWarning
from .filtering import FilterParams, FilterState
from .fock import (
    LindbladKernel,
    RelaxationParams,
    coherent_state,
    conjugate_symmetric,
    displacement_factory,
    number_diag,
)
from .measurement import (
    OUTCOME_E,
    OUTCOME_G,
    OUTCOME_U,
    DephasingModel,
    PhaseSchedule,
    detection_probabilities,
    midfringe_phase,
    schedule_kraus,
)
from .truth import JUMP_DOWN, JumpKernel, TruthRecord, jump_step, report_outcome, sample_and_interact

# A jump only counts for aligned averaging if the true state was stabilized
# (target population at least this high) on the cycle before the jump.
STABILIZED_LEVEL = 0.8
# Aligned window around each jump, in seconds.
JUMP_WINDOW_BEFORE_S = 10e-3
JUMP_WINDOW_AFTER_S = 50e-3


class LoopEngine:
    """Everything reusable across trajectories of one experiment: operator
    tables, masks, kernels, controller settings, and the initial state."""

    def __init__(self, cfg: ExperimentConfig):
        if cfg.c1 is None or cfg.alpha0 is None:
            raise NumericsError("config must be finalized before building an engine")
        self.cfg = cfg
        n_max = cfg.n_max
        self.dim = n_max + 1
        if cfg.phi_table is not None:
            self.model = DephasingModel(table=cfg.phi_table)
        else:
            self.model = DephasingModel(phi_bar=cfg.phi_bar)
        self.schedule = PhaseSchedule(
            phi_r0=midfringe_phase(self.model, cfg.n_tag), sigma_r=cfg.sigma_r)
        self.kraus = schedule_kraus(self.schedule, self.model, self.dim)
        relax = RelaxationParams(T_cav=cfg.T_cav, T_a=cfg.T_a, n_th=cfg.n_th)
        self.relax_params = relax
        self.kernel = LindbladKernel(relax, n_max) if relax.kappa_dt > 0.0 else None
        self.jump_kernel = JumpKernel(relax, n_max)
        self.filter_params = FilterParams(
            self.kraus, self.kernel, eta_a=cfg.eta_a, eta_d=cfg.eta_d,
            eta_f=cfg.eta_f, depth=cfg.d)
        self.control = ControlParams(
            n_tag=cfg.n_tag, dim=self.dim, c1=cfg.c1, c2=cfg.c2, epsilon=cfg.epsilon)
        self.factory = displacement_factory(n_max)
        self.ndiag = number_diag(n_max)
        self.rho0 = coherent_state(cfg.alpha0, n_max)
        diag = np.diagonal(self.rho0)
        top_two = float(diag[-1] + diag[-2])
        if top_two > 1e-2:
            warnings.warn(
                f"initial state holds {top_two:.4e} of its mass in the top two "
                f"levels at n_max={n_max}; truncation effects may be visible",
                TruncationWarning, stacklevel=2)


@dataclass
class TrajectoryLog:
    """Per-cycle record of one closed-loop run (arrays indexed by cycle-1)."""

    cycles: int
    T_a: float
    outcome: np.ndarray
    phase_idx: np.ndarray
    alpha: np.ndarray
    F_est: np.ndarray
    F_real: np.ndarray
    n_mean_est: np.ndarray
    p_below_est: np.ndarray
    p_tag_est: np.ndarray
    p_above_est: np.ndarray
    p_below_real: np.ndarray
    p_tag_real: np.ndarray
    p_above_real: np.ndarray
    jump_flag: np.ndarray
    convergence_cycle: int | None
    converged_diag_real: np.ndarray | None
    clamp_events: int


def trajectory_rng(cfg: ExperimentConfig, index: int = 0) -> np.random.Generator:
    """The documented per-trajectory stream: child `index` of the run seed."""
    children = np.random.SeedSequence(cfg.seed).spawn(index + 1)
    return np.random.default_rng(children[index])


def run_trajectory(cfg: ExperimentConfig, rng: np.random.Generator | None = None,
                   engine: LoopEngine | None = None) -> TrajectoryLog:
    """One closed-loop trajectory.

    Per cycle: the probe crosses (push + truth interaction), the report
    delayed by d cycles arrives and advances the filter chain, the in-flight
    estimate feeds the control law, and the computed displacement is
    injected into both the truth and the filter's pending context. Logged
    fidelities are end-of-cycle values, after relaxation and injection.
    """
    if engine is None:
        engine = LoopEngine(cfg)
    if rng is None:
        rng = trajectory_rng(cfg)
    n_tag = cfg.n_tag
    depth = cfg.d
    cycles = cfg.cycles
    eta_a, eta_d, eta_f = cfg.eta_a, cfg.eta_d, cfg.eta_f
    f_conv = cfg.f_conv
    kraus = engine.kraus
    jump_kernel = engine.jump_kernel
    control = engine.control
    factory = engine.factory
    ndiag = engine.ndiag

    fs = FilterState(engine.filter_params, engine.rho0)
    truth_rho = engine.rho0.copy()
    fifo: deque[TruthRecord] = deque(
        TruthRecord(False, OUTCOME_U) for _ in range(depth))

    outcome = np.empty(cycles, dtype=np.int8)
    phase_idx = np.empty(cycles, dtype=np.int8)
    alpha_arr = np.empty(cycles)
    f_est = np.empty(cycles)
    f_real = np.empty(cycles)
    n_mean = np.empty(cycles)
    pb_e = np.empty(cycles)
    pt_e = np.empty(cycles)
    pa_e = np.empty(cycles)
    pb_r = np.empty(cycles)
    pt_r = np.empty(cycles)
    pa_r = np.empty(cycles)
    jump_arr = np.zeros(cycles, dtype=np.int8)
    conv_cycle: int | None = None
    conv_diag: np.ndarray | None = None
    clamp_events = 0

    for j in range(1, cycles + 1):
        try:
            idx = (j - 1) & 3
            kp = kraus[idx]
            fs.push_sample(idx)
            rec, truth_rho = sample_and_interact(truth_rho, kp, eta_a, rng)
            fifo.append(rec)
            out = report_outcome(fifo.popleft(), eta_d, eta_f, rng)
            fs.chain_advance(out)
            est = fs.estimate_with_inflight()
            if j > depth:
                a, _, clamped = compute_control(est, control)
                clamp_events += clamped
            else:
                a = 0.0
            if a != 0.0:
                dmat = factory.build(a)
                est = conjugate_symmetric(est, dmat)
            else:
                dmat = None
            truth_rho, jump = jump_step(truth_rho, jump_kernel, rng)
            if dmat is not None:
                truth_rho = conjugate_symmetric(truth_rho, dmat)
            fs.record_injection(a, dmat)
        except NumericsError as exc:
            raise NumericsError(f"cycle {j}: {exc}") from exc

        i = j - 1
        outcome[i] = out
        phase_idx[i] = idx
        alpha_arr[i] = a
        ediag = np.diagonal(est)
        rdiag = np.diagonal(truth_rho)
        fe = float(ediag[n_tag])
        f_est[i] = fe
        f_real[i] = rdiag[n_tag]
        n_mean[i] = ndiag @ ediag
        pb_e[i] = ediag[:n_tag].sum()
        pt_e[i] = fe
        pa_e[i] = ediag[n_tag + 1:].sum()
        pb_r[i] = rdiag[:n_tag].sum()
        pt_r[i] = rdiag[n_tag]
        pa_r[i] = rdiag[n_tag + 1:].sum()
        if jump == JUMP_DOWN:
            jump_arr[i] = 1
        if conv_cycle is None and fe >= f_conv:
            conv_cycle = j
            conv_diag = np.array(rdiag, copy=True)

    return TrajectoryLog(
        cycles=cycles, T_a=cfg.T_a, outcome=outcome, phase_idx=phase_idx,
        alpha=alpha_arr, F_est=f_est, F_real=f_real, n_mean_est=n_mean,
        p_below_est=pb_e, p_tag_est=pt_e, p_above_est=pa_e,
        p_below_real=pb_r, p_tag_real=pt_r, p_above_real=pa_r,
        jump_flag=jump_arr, convergence_cycle=conv_cycle,
        converged_diag_real=conv_diag, clamp_events=clamp_events)


_SUM_KEYS = ("p_below_est", "p_tag_est", "p_above_est",
             "p_below_real", "p_tag_real", "p_above_real")


@dataclass
class EnsembleSummary:
    """Merged results of independent trajectories.

    Fidelity series are kept per trajectory (they feed jump alignment and
    fraction statistics); population columns are kept as per-cycle sums.
    """

    config: ExperimentConfig
    F_est: np.ndarray
    F_real: np.ndarray
    p_sums: dict
    convergence_cycles: np.ndarray
    converged_diag_sum: np.ndarray
    converged_count: int
    jump_cycles: list
    clamp_events: int
    wall_time_s: float

    @property
    def trajectories(self) -> int:
        return self.F_est.shape[0]

    @property
    def cycles(self) -> int:
        return self.F_est.shape[1]


def run_ensemble(cfg: ExperimentConfig, engine: LoopEngine | None = None) -> EnsembleSummary:
    """Run `trajectories` independent seeded trajectories and merge them."""
    t0 = time.perf_counter()
    if engine is None:
        engine = LoopEngine(cfg)
    n_traj, cycles = cfg.trajectories, cfg.cycles
    f_est = np.empty((n_traj, cycles))
    f_real = np.empty((n_traj, cycles))
    p_sums = {key: np.zeros(cycles) for key in _SUM_KEYS}
    conv = np.full(n_traj, -1, dtype=np.int64)
    conv_diag_sum = np.zeros(engine.dim)
    conv_count = 0
    jump_cycles = []
    clamp = 0
    children = np.random.SeedSequence(cfg.seed).spawn(n_traj)
    for t in range(n_traj):
        log = run_trajectory(cfg, rng=np.random.default_rng(children[t]), engine=engine)
        f_est[t] = log.F_est
        f_real[t] = log.F_real
        for key in _SUM_KEYS:
            p_sums[key] += getattr(log, key)
        if log.convergence_cycle is not None:
            conv[t] = log.convergence_cycle
            conv_diag_sum += log.converged_diag_real
            conv_count += 1
        jump_cycles.append(np.flatnonzero(log.jump_flag) + 1)
        clamp += log.clamp_events
    return EnsembleSummary(
        config=cfg, F_est=f_est, F_real=f_real, p_sums=p_sums,
        convergence_cycles=conv, converged_diag_sum=conv_diag_sum,
        converged_count=conv_count, jump_cycles=jump_cycles,
        clamp_events=clamp, wall_time_s=time.perf_counter() - t0)


def mean_curves(summary: EnsembleSummary) -> dict:
    """Per-cycle ensemble means in the curves-CSV column layout."""
    n_traj = summary.trajectories
    cycle = np.arange(1, summary.cycles + 1)
    out = {
        "cycle": cycle,
        "time_s": cycle * summary.config.T_a,
        "F_est_mean": summary.F_est.mean(axis=0),
        "F_real_mean": summary.F_real.mean(axis=0),
    }
    if n_traj > 1:
        root = math.sqrt(float(n_traj))
        out["F_est_sem"] = summary.F_est.std(axis=0, ddof=1) / root
        out["F_real_sem"] = summary.F_real.std(axis=0, ddof=1) / root
    else:
        out["F_est_sem"] = np.zeros(summary.cycles)
        out["F_real_sem"] = np.zeros(summary.cycles)
    for key in _SUM_KEYS:
        out[key + "_mean"] = summary.p_sums[key] / n_traj
    return out


def fraction_at_level(summary: EnsembleSummary, cycle: int, level: float) -> float:
    """Fraction of trajectories whose estimate fidelity reaches `level` at
    the given cycle (1-based)."""
    if not (1 <= cycle <= summary.cycles):
        raise NumericsError(f"cycle {cycle} outside the logged range")
    return float(np.mean(summary.F_est[:, cycle - 1] >= level))


def convergence_stats(summary: EnsembleSummary, bin_width: int = 10) -> dict:
    """Histogram (fixed-width cycle bins) and cumulative convergence curve.

    Convergence time is the first cycle whose estimate fidelity reached
    f_conv; unconverged trajectories count in no bin.
    """
    cfg = summary.config
    times = summary.convergence_cycles[summary.convergence_cycles > 0]
    n_traj = summary.trajectories
    n_bins = (summary.cycles + bin_width - 1) // bin_width
    counts = np.zeros(n_bins, dtype=np.int64)
    for t in times:
        counts[(int(t) - 1) // bin_width] += 1
    fraction = counts / n_traj
    cumulative = np.cumsum(counts) / n_traj
    starts = np.arange(n_bins) * bin_width + 1
    ends = np.minimum(starts + bin_width - 1, summary.cycles)
    converged_p_tag = (float(summary.converged_diag_sum[cfg.n_tag] / summary.converged_count)
                       if summary.converged_count else None)
    return {
        "f_conv": cfg.f_conv,
        "bin_width_cycles": bin_width,
        "bin_start_cycle": starts,
        "bin_end_cycle": ends,
        "count": counts,
        "fraction": fraction,
        "cumulative_fraction": cumulative,
        "times": times,
        "converged": int(summary.converged_count),
        "trajectories": n_traj,
        "converged_p_tag_mean": converged_p_tag,
    }


def cumulative_at_time(stats: dict, t_a: float, t_seconds: float) -> float:
    """Fraction of all trajectories converged within t_seconds."""
    limit = int(t_seconds / t_a)
    return float(np.sum(stats["times"] <= limit)) / stats["trajectories"]


def jump_aligned_average(summary: EnsembleSummary) -> dict:
    """Average fidelity around stabilized downward jumps.

    Each qualifying jump contributes a window clipped to the trajectory;
    offsets with no contribution are dropped. Raises when no jump passes
    the stabilization gate (e.g. zero damping).
    """
    cfg = summary.config
    t_a = cfg.T_a
    lo = -int(JUMP_WINDOW_BEFORE_S / t_a)
    hi = int(JUMP_WINDOW_AFTER_S / t_a)
    width = hi - lo + 1
    acc_real = np.zeros(width)
    acc_est = np.zeros(width)
    counts = np.zeros(width, dtype=np.int64)
    cycles = summary.cycles
    n_events = 0
    for t, jumps in enumerate(summary.jump_cycles):
        fr = summary.F_real[t]
        fe = summary.F_est[t]
        for c in jumps:
            c = int(c)
            if c < 2 or fr[c - 2] < STABILIZED_LEVEL:
                continue
            n_events += 1
            w_start = max(1, c + lo)
            w_end = min(cycles, c + hi)
            seg = slice(w_start - 1, w_end)
            dst = slice(w_start - c - lo, w_end - c - lo + 1)
            acc_real[dst] += fr[seg]
            acc_est[dst] += fe[seg]
            counts[dst] += 1
    if n_events == 0:
        raise NumericsError("no stabilized downward jumps found for alignment")
    keep = counts > 0
    offsets = np.arange(lo, hi + 1)[keep]
    f_real_mean = acc_real[keep] / counts[keep]
    f_est_mean = acc_est[keep] / counts[keep]
    pre = offsets < 0
    plateau = float(f_real_mean[pre].mean()) if np.any(pre) else None
    recovery_offset = None
    if plateau is not None:
        post = np.flatnonzero((offsets >= 1) & (f_real_mean >= 0.9 * plateau))
        if post.size:
            recovery_offset = int(offsets[post[0]])
    return {
        "offset_cycle": offsets,
        "offset_s": offsets * t_a,
        "F_real_mean": f_real_mean,
        "F_est_mean": f_est_mean,
        "count": counts[keep],
        "n_events": n_events,
        "plateau": plateau,
        "recovery_offset": recovery_offset,
        "recovery_time_s": None if recovery_offset is None else recovery_offset * t_a,
    }


def down_jump_rate(summary: EnsembleSummary) -> dict:
    """Measured downward-jump rate over the second half of the run, with
    the first-order analytic expectation at the target level."""
    cfg = summary.config
    start = summary.cycles // 2 + 1
    span_cycles = summary.cycles - start + 1
    n_down = sum(int(np.sum(j >= start)) for j in summary.jump_cycles)
    span_s = span_cycles * cfg.T_a * summary.trajectories
    return {
        "window_start_cycle": start,
        "down_jumps": n_down,
        "measured_rate_hz": n_down / span_s if span_s > 0 else 0.0,
        "expected_rate_hz": (1.0 + cfg.n_th) * cfg.n_tag * cfg.kappa,
    }


def op_estimate(dim: int, depth: int) -> int:
    """Multiply-accumulate count of one cycle's state-update arithmetic:
    displacement sandwiches, measurement masks, normalizations, Euler
    relaxation, and the control contraction. The positivity check is
    diagnostic bookkeeping and is not counted."""
    sandwich = 2 * dim ** 3
    mask = dim * dim
    euler = 3 * dim * dim
    normalize = dim * dim + dim
    chain = sandwich + mask + normalize + euler
    per_slot = sandwich + mask + euler
    control = dim * dim + dim
    return chain + depth * per_slot + control


def bench_cycle(cfg: ExperimentConfig, iterations: int = 2000,
                warmup: int = 200) -> dict:
    """Time the per-cycle estimator and controller work on a synthetic
    outcome stream: chain_advance + estimate_with_inflight + compute_control.

    Outcome generation, displacement construction and bookkeeping run
    outside the timed region; truth simulation and I/O are not involved.
    """
    engine = LoopEngine(cfg)
    fs = FilterState(engine.filter_params, engine.rho0)
    rng = trajectory_rng(cfg)
    control = engine.control
    factory = engine.factory
    kraus = engine.kraus
    p_click = cfg.eta_a * cfg.eta_d
    clock = time.perf_counter_ns
    stamps = np.empty(iterations)
    for i in range(warmup + iterations):
        fs.push_sample(i & 3)
        head = fs.queue[0]
        if head.kraus_idx < 0:
            out = OUTCOME_U
        elif rng.random() >= p_click:
            out = OUTCOME_U
        else:
            rho_pred = fs.chain_rho
            if head.dmat is not None:
                rho_pred = conjugate_symmetric(rho_pred, head.dmat)
            pg, pe = detection_probabilities(rho_pred, kraus[head.kraus_idx])
            out = OUTCOME_G if rng.random() * (pg + pe) < pg else OUTCOME_E
        t0 = clock()
        fs.chain_advance(out)
        est = fs.estimate_with_inflight()
        a, _, _ = compute_control(est, control)
        t1 = clock()
        if i >= warmup:
            stamps[i - warmup] = t1 - t0
        dmat = factory.build(a) if a != 0.0 else None
        fs.record_injection(a, dmat)
    median_us = float(np.median(stamps)) / 1000.0
    budget_us = cfg.T_a * 1e6
    return {
        "iterations": iterations,
        "warmup": warmup,
        "n_max": cfg.n_max,
        "d": cfg.d,
        "median_us": median_us,
        "p99_us": float(np.percentile(stamps, 99)) / 1000.0,
        "mean_us": float(stamps.mean()) / 1000.0,
        "budget_us": budget_us,
        "within_budget": bool(median_us < budget_us),
        "fast_reference_us": 30.0,
        "within_fast_reference": bool(median_us < 30.0),
        "op_estimate": op_estimate(engine.dim, cfg.d),
    }


def summary_payload(summary: EnsembleSummary, curves: dict | None = None,
                    stats: dict | None = None, aligned: dict | None = None,
                    latency: dict | None = None) -> dict:
    """Assemble the summary JSON: config echo and hash, optional sections."""
    cfg = summary.config
    payload: dict = {
        "schema": "ensemble_summary",
        "version": __version__,
        "config": cfg.as_dict(),
        "config_hash": config_hash(cfg),
        "trajectories": summary.trajectories,
        "cycles": summary.cycles,
        "wall_time_s": summary.wall_time_s,
        "clamp_events": summary.clamp_events,
    }
    if curves is not None:
        payload["curves"] = {k: np.asarray(v).tolist() for k, v in curves.items()}
    if stats is not None:
        payload["convergence"] = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in stats.items()}
    if aligned is not None:
        payload["jump_aligned"] = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in aligned.items()}
    if latency is not None:
        payload["latency"] = latency
    return payload
