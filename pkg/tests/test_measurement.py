"""Probe measurement model: phases, Kraus pairs, Born rule, back-action."""

import math

import numpy as np
import pytest

import fockloop.fock as fk
import fockloop.measurement as ms
from fockloop.errors import ConfigError, NumericsError


def random_density(rng, dim=10):
    x = rng.standard_normal((dim, dim))
    rho = x @ x.T
    return rho / np.trace(rho)


def default_model():
    return ms.DephasingModel(phi_bar=math.pi / 7)


def test_linear_dephasing():
    model = default_model()
    assert model.phi(0) == 0.0
    assert abs(model.phi(3) - 3 * math.pi / 7) < 1e-15
    vec = model.phi_vector(10)
    assert np.all(np.diff(vec) > 0)


def test_tabulated_dephasing():
    model = ms.DephasingModel(table=(0.0, 0.3, 0.7, math.pi / 2, 2.2))
    assert model.phi(3) == math.pi / 2
    assert abs(ms.midfringe_phase(model, 3)) < 1e-15
    with pytest.raises(ConfigError):
        ms.DephasingModel(table=(0.0, 0.5, 0.4))
    with pytest.raises(ConfigError):
        ms.DephasingModel(phi_bar=0.4, table=(0.0, 0.5))
    with pytest.raises(ConfigError):
        ms.DephasingModel()


def test_midfringe_phase():
    # pi/2 - 3*pi/7 = pi/14; frozen value from the closed form.
    assert ms.midfringe_phase(default_model(), 3) == pytest.approx(
        0.224399475256414, abs=1e-12)


def test_phase_schedule_pattern():
    sched = ms.PhaseSchedule(phi_r0=0.5, sigma_r=0.69)
    got = [sched.phase_for(c) for c in range(1, 9)]
    want = [0.5, 1.19, 0.5, -0.19] * 2
    assert np.allclose(got, want, atol=1e-12)
    assert [sched.index_for(c) for c in range(1, 6)] == [0, 1, 2, 3, 0]


def test_kraus_completeness_and_frozen_entry():
    kp = ms.kraus_pair(math.pi / 14, default_model(), 10)
    assert np.abs(kp.mg2 + kp.me2 - 1.0).max() < 1e-15
    # cos((pi/14 + 4*pi/7)/2) = cos(9*pi/28)
    assert kp.mg[4] == pytest.approx(0.532032076515337, abs=1e-12)
    # Monotone dephasing must keep the angles distinct across levels.
    assert np.unique(np.round(kp.mg, 12)).size == 10


def test_identity_kraus():
    kp = ms.KrausPair.identity(10)
    rng = np.random.default_rng(2)
    rho = random_density(rng)
    assert np.abs(kp.wsum * rho - rho).max() == 0.0
    pg, pe = ms.detection_probabilities(rho, kp)
    assert pg == pytest.approx(1.0, abs=1e-14)
    assert pe == 0.0


def test_vacuum_detection_probability():
    kp = ms.kraus_pair(math.pi / 14, default_model(), 10)
    pg, pe = ms.detection_probabilities(fk.fock_state(0, 9), kp)
    assert pg == pytest.approx(0.987463956090912, abs=1e-12)  # cos^2(pi/28)
    assert pg + pe == pytest.approx(1.0, abs=1e-14)


def test_born_probabilities_sum_to_one():
    rng = np.random.default_rng(21)
    model = default_model()
    for _ in range(30):
        kp = ms.kraus_pair(float(rng.uniform(-2, 2)), model, 10)
        rho = random_density(rng)
        pg, pe = ms.detection_probabilities(rho, kp)
        assert abs(pg + pe - 1.0) < 1e-12
        assert pg >= 0.0 and pe >= 0.0


def test_projection_preserves_invariants():
    rng = np.random.default_rng(31)
    model = default_model()
    for _ in range(30):
        kp = ms.kraus_pair(float(rng.uniform(-2, 2)), model, 10)
        rho = random_density(rng)
        out = ms.project(rho, kp, ms.OUTCOME_G)
        assert abs(np.trace(out) - 1.0) < 1e-12
        assert np.abs(out - out.T).max() == 0.0
        assert np.linalg.eigvalsh(out)[0] > -1e-12


def test_fock_states_are_measurement_fixed_points():
    model = default_model()
    kp = ms.kraus_pair(0.4, model, 10)
    for n in (0, 3, 7):
        rho = fk.fock_state(n, 9)
        for oc in (ms.OUTCOME_G, ms.OUTCOME_E):
            out = ms.project(rho, kp, oc)
            assert np.abs(out - rho).max() == 0.0  # exact, including x/x = 1


def test_martingale_identity():
    # Averaging target-population over the two outcomes reproduces the prior:
    # sum_s P_s * F(proj_s) = F. Holds to machine precision for any state.
    rng = np.random.default_rng(41)
    model = default_model()
    for _ in range(50):
        kp = ms.kraus_pair(float(rng.uniform(-3, 3)), model, 10)
        rho = random_density(rng)
        f = fk.fidelity(rho, 3)
        acc = 0.0
        for oc in (ms.OUTCOME_G, ms.OUTCOME_E):
            p = ms.detection_probabilities(rho, kp)[oc]
            acc += p * fk.fidelity(ms.project(rho, kp, oc), 3)
        assert abs(acc - f) < 1e-12


def test_kraus_completeness_on_diagonal():
    rng = np.random.default_rng(43)
    kp = ms.kraus_pair(0.9, default_model(), 10)
    rho = random_density(rng)
    recombined = kp.wg * rho + kp.we * rho
    assert np.abs(np.diagonal(recombined) - np.diagonal(rho)).max() < 1e-15


def test_zero_probability_projection_rejected():
    kp = ms.KrausPair.identity(10)
    with pytest.raises(NumericsError):
        ms.project(fk.fock_state(0, 9), kp, ms.OUTCOME_E)
