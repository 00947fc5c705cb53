"""Closed-loop harness: determinism, seed derivation, ensemble statistics."""

import warnings

import numpy as np
import pytest

from fockloop.config import ExperimentConfig, finalize
from fockloop.errors import NumericsError, TruncationWarning
from fockloop.harness import (
    LoopEngine,
    bench_cycle,
    convergence_stats,
    cumulative_at_time,
    down_jump_rate,
    fraction_at_level,
    jump_aligned_average,
    mean_curves,
    op_estimate,
    run_ensemble,
    run_trajectory,
    trajectory_rng,
)

warnings.simplefilter("ignore", TruncationWarning)


def _cfg(**kw):
    return finalize(ExperimentConfig(**kw), set(kw))


def test_trajectory_bitwise_deterministic():
    cfg = _cfg(cycles=80, seed=5)
    a = run_trajectory(cfg, trajectory_rng(cfg))
    b = run_trajectory(cfg, trajectory_rng(cfg))
    np.testing.assert_array_equal(a.F_est, b.F_est)
    np.testing.assert_array_equal(a.alpha, b.alpha)
    np.testing.assert_array_equal(a.outcome, b.outcome)
    np.testing.assert_array_equal(a.jump_flag, b.jump_flag)


def test_single_run_is_first_ensemble_member():
    cfg = _cfg(cycles=60, trajectories=3, seed=11)
    summary = run_ensemble(cfg)
    solo = run_trajectory(cfg, trajectory_rng(cfg, 0))
    np.testing.assert_array_equal(summary.F_est[0], solo.F_est)
    np.testing.assert_array_equal(summary.F_real[2],
                                  run_trajectory(cfg, trajectory_rng(cfg, 2)).F_real)


def test_ideal_estimate_tracks_truth_exactly():
    cfg = _cfg(mode="ideal", cycles=120, seed=3)
    log = run_trajectory(cfg)
    assert float(np.max(np.abs(log.F_est - log.F_real))) <= 1e-12
    assert float(np.max(np.abs(log.p_below_est - log.p_below_real))) <= 1e-12


def test_realistic_with_perfect_parameters_equals_ideal():
    # Same engine path: ideal mode only forces parameter values.
    kw = dict(T_cav=float("inf"), eta_a=1.0, eta_d=1.0, eta_f=0.0, d=0,
              cycles=90, seed=17)
    real = run_trajectory(_cfg(mode="realistic", **kw))
    ideal = run_trajectory(_cfg(mode="ideal", cycles=90, seed=17))
    np.testing.assert_array_equal(real.F_est, ideal.F_est)
    np.testing.assert_array_equal(real.outcome, ideal.outcome)
    np.testing.assert_array_equal(real.alpha, ideal.alpha)


def test_mean_estimate_fidelity_is_nondecreasing_statistically():
    # Supermartingale property of the post-injection estimate fidelity:
    # per-cycle paired mean increments may not dip below -2 SEM.
    cfg = _cfg(mode="ideal", cycles=50, trajectories=150, seed=23)
    summary = run_ensemble(cfg)
    diffs = np.diff(summary.F_est, axis=1)
    mean = diffs.mean(axis=0)
    sem = diffs.std(axis=0, ddof=1) / np.sqrt(summary.trajectories)
    assert np.all(mean >= -2.0 * sem)


def test_convergence_cycle_semantics():
    cfg = _cfg(mode="ideal", cycles=120, seed=2, f_conv=0.5)
    log = run_trajectory(cfg)
    c = log.convergence_cycle
    assert c is not None
    assert log.F_est[c - 1] >= 0.5
    assert np.all(log.F_est[:c - 1] < 0.5)
    assert log.converged_diag_real is not None
    assert float(log.converged_diag_real.sum()) == pytest.approx(1.0, abs=1e-9)

    none_log = run_trajectory(_cfg(mode="ideal", cycles=30, seed=2, f_conv=1.0))
    assert none_log.convergence_cycle is None
    assert none_log.converged_diag_real is None


def test_fraction_at_level_and_range_check():
    cfg = _cfg(mode="ideal", cycles=40, trajectories=8, seed=31)
    summary = run_ensemble(cfg)
    frac = fraction_at_level(summary, 40, 0.8)
    assert frac == pytest.approx(np.mean(summary.F_est[:, 39] >= 0.8))
    with pytest.raises(NumericsError):
        fraction_at_level(summary, 0, 0.8)
    with pytest.raises(NumericsError):
        fraction_at_level(summary, 41, 0.8)


def test_convergence_stats_mass_and_bins():
    cfg = _cfg(mode="ideal", cycles=95, trajectories=40, seed=41, f_conv=0.8)
    summary = run_ensemble(cfg)
    stats = convergence_stats(summary, bin_width=10)
    assert int(np.sum(stats["count"])) == stats["converged"] == summary.converged_count
    assert stats["bin_start_cycle"][0] == 1
    assert stats["bin_end_cycle"][0] == 10
    assert stats["bin_end_cycle"][-1] == 95
    assert stats["cumulative_fraction"][-1] == pytest.approx(
        stats["converged"] / summary.trajectories)
    # histogram assignment: a trajectory converging at cycle 10 sits in bin 0
    for t in summary.convergence_cycles:
        if t > 0:
            assert stats["count"][(int(t) - 1) // 10] >= 1


def test_cumulative_at_time():
    cfg = _cfg(mode="ideal", cycles=60, trajectories=30, seed=43, f_conv=0.8)
    stats = convergence_stats(run_ensemble(cfg))
    t_a = cfg.T_a
    times = stats["times"]
    want = float(np.sum(times <= 40)) / stats["trajectories"]
    assert cumulative_at_time(stats, t_a, 40 * t_a) == pytest.approx(want)


def test_merge_is_order_independent():
    cfg = _cfg(cycles=80, trajectories=6, seed=51)
    engine = LoopEngine(cfg)
    children = np.random.SeedSequence(cfg.seed).spawn(6)
    logs = [run_trajectory(cfg, np.random.default_rng(children[t]), engine)
            for t in range(6)]

    def merged(order):
        acc = {k: np.zeros(cfg.cycles) for k in
               ("p_tag_est", "p_below_real", "F_est")}
        for t in order:
            acc["p_tag_est"] += logs[t].p_tag_est
            acc["p_below_real"] += logs[t].p_below_real
            acc["F_est"] += logs[t].F_est
        return {k: v / 6.0 for k, v in acc.items()}

    fwd = merged(range(6))
    rev = merged([3, 5, 0, 4, 2, 1])
    for key in fwd:
        assert float(np.max(np.abs(fwd[key] - rev[key]))) < 1e-12


def test_mean_curves_sem_fields():
    cfg = _cfg(mode="ideal", cycles=30, trajectories=5, seed=61)
    curves = mean_curves(run_ensemble(cfg))
    assert curves["F_est_sem"].shape == (30,)
    assert np.all(curves["F_est_sem"] >= 0.0)
    solo = mean_curves(run_ensemble(_cfg(mode="ideal", cycles=10, seed=61)))
    assert np.all(solo["F_real_sem"] == 0.0)


def test_jump_alignment_requires_damping():
    cfg = _cfg(mode="ideal", cycles=60, trajectories=4, seed=71)
    with pytest.raises(NumericsError, match="no stabilized downward jumps"):
        jump_aligned_average(run_ensemble(cfg))


def test_jump_alignment_window_fields():
    cfg = _cfg(cycles=400, trajectories=40, seed=73)
    summary = run_ensemble(cfg)
    aligned = jump_aligned_average(summary)
    lo = -int(10e-3 / cfg.T_a)
    hi = int(50e-3 / cfg.T_a)
    assert aligned["n_events"] >= 1
    assert aligned["offset_cycle"].min() >= lo
    assert aligned["offset_cycle"].max() <= hi
    assert np.all(aligned["count"] > 0)
    assert 0.0 < aligned["plateau"] <= 1.0
    assert len(aligned["F_real_mean"]) == len(aligned["offset_cycle"])
    rate = down_jump_rate(summary)
    assert rate["expected_rate_hz"] == pytest.approx(
        (1.0 + cfg.n_th) * cfg.n_tag / cfg.T_cav)
    # loose band: occupancy of the target level scales the realized rate
    assert 0.1 * rate["expected_rate_hz"] < rate["measured_rate_hz"] \
        < 2.0 * rate["expected_rate_hz"]


def test_truncation_warning_only_when_tail_is_heavy():
    with pytest.warns(TruncationWarning):
        warnings.simplefilter("always", TruncationWarning)
        LoopEngine(_cfg(cycles=10))
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        LoopEngine(_cfg(cycles=10, n_max=14))


def test_bench_cycle_report():
    cfg = _cfg(cycles=10, seed=0)
    rep = bench_cycle(cfg, iterations=120, warmup=30)
    assert rep["iterations"] == 120
    assert rep["median_us"] > 0.0
    assert rep["p99_us"] >= rep["median_us"]
    assert rep["budget_us"] == pytest.approx(85.0)
    assert isinstance(rep["within_budget"], bool)
    assert rep["op_estimate"] == op_estimate(10, 4)
