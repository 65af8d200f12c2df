"""Tests for the WMMSE beamformer and rate solver."""

import math

import numpy as np
import pytest

from star_iscc.errors import InfeasibleSensing, NumericalError
from star_iscc.model.channels import draw_instance
from star_iscc.model.core import StarCoefficients
from star_iscc.model.metrics import (
    CovarianceBundle,
    compute_power,
    max_uplink_sinr,
    rate_from_sinr,
    sensing_sinr,
)
from star_iscc.solver.wmmse import (
    algorithm1,
    auxiliary_weights,
    default_w_init,
    rate_power_subproblem,
    relative_increase,
    sensing_power_floor,
    update_beamformers,
)


@pytest.fixture
def small_instance(small_cfg):
    _, ch, _ = draw_instance(small_cfg, 3)
    return ch


@pytest.fixture
def small_star(small_cfg):
    rng = np.random.default_rng(2)
    return StarCoefficients.equal_split(
        small_cfg.n_ris,
        phase_t=rng.uniform(0, 2 * np.pi, small_cfg.n_ris),
        phase_r=rng.uniform(0, 2 * np.pi, small_cfg.n_ris),
    )


def _capacities(w, ch, star, cfg, include_sensing=True):
    cov = CovarianceBundle.build(w, ch, star, cfg, include_sensing)
    return np.array([
        cfg.bandwidth_hz * rate_from_sinr(max_uplink_sinr(l, cov, cfg), cfg)
        for l in range(ch.n_dr)
    ])


class TestHelpers:
    """Small building blocks."""

    def test_relative_increase(self):
        assert relative_increase(2.0, 3.0) == pytest.approx(0.5)
        assert relative_increase(0.0, 0.0) == 0.0
        assert relative_increase(4.0, 3.0) == pytest.approx(-0.25)

    def test_weights_are_reciprocals(self):
        lam, lam_dr = auxiliary_weights(0.5, [0.25, 0.1])
        assert lam == pytest.approx(2.0)
        np.testing.assert_allclose(lam_dr, [4.0, 10.0])

    @pytest.mark.parametrize("e_rad,e_dr", [(0.0, [0.5]), (0.5, [-0.1]), (float("nan"), [0.5])])
    def test_weights_reject_bad_mse(self, e_rad, e_dr):
        with pytest.raises(NumericalError):
            auxiliary_weights(e_rad, e_dr)

    def test_default_init_power(self, small_cfg, small_instance):
        w = default_w_init(small_instance, small_cfg)
        assert np.vdot(w, w).real == pytest.approx(small_cfg.w_init_fraction * small_cfg.p_bs_watt)

    def test_power_floor(self, small_cfg, small_instance):
        floor = sensing_power_floor(small_instance, small_cfg)
        gain = abs(small_instance.alpha_target) ** 2
        expected = small_cfg.noise_watt * small_cfg.gamma_rad_linear / gain
        assert floor == pytest.approx(expected)

    def test_receivers_and_weights(self, small_cfg, small_instance, small_star):
        w = default_w_init(small_instance, small_cfg)
        bf = update_beamformers(w, small_instance, small_star, small_cfg)
        assert bf.u.shape == (small_cfg.n_rx,)
        assert bf.u_dr.shape == (small_cfg.n_dr, small_cfg.n_rx)
        assert bf.lambda_rad > 1.0
        assert np.all(bf.lambda_dr >= 1.0)


class TestRatePowerSubproblem:
    """One conic pass."""

    def test_budget_and_capacities(self, small_cfg, small_instance, small_star):
        ch = small_instance
        w0 = default_w_init(ch, small_cfg)
        bf = update_beamformers(w0, ch, small_star, small_cfg)
        w, r = rate_power_subproblem(
            bf.u, bf.lambda_rad, bf.u_dr, bf.lambda_dr, ch, small_star, small_cfg
        )
        total = np.vdot(w, w).real + np.sum(compute_power(r, small_cfg))
        assert total <= small_cfg.p_bs_watt * (1 + 1e-6)
        assert np.all(r >= 0)
        assert np.all(r <= _capacities(w, ch, small_star, small_cfg) * (1 + 1e-6) + 1e-3)
        gamma = sensing_sinr(bf.u, w, ch, small_cfg)
        assert gamma >= small_cfg.gamma_rad_linear * (1 - 1e-5)

    def test_never_below_incumbent(self, small_cfg, small_instance, small_star):
        # the incumbent stays feasible once receivers and weights are refreshed
        ch = small_instance
        state = algorithm1(default_w_init(ch, small_cfg), small_star, ch, small_cfg)
        bf = update_beamformers(state.bf.w, ch, small_star, small_cfg)
        _, r = rate_power_subproblem(
            bf.u, bf.lambda_rad, bf.u_dr, bf.lambda_dr, ch, small_star, small_cfg
        )
        assert np.sum(r) >= state.rates.sum_rate * (1 - 1e-5)

    def test_without_sensing(self, small_cfg, small_instance, small_star):
        ch = small_instance
        bf = update_beamformers(np.zeros(ch.n_tx), ch, small_star, small_cfg, include_sensing=False)
        w, r = rate_power_subproblem(
            bf.u, bf.lambda_rad, bf.u_dr, bf.lambda_dr, ch, small_star, small_cfg, sensing=False
        )
        assert not np.any(w)
        assert np.sum(compute_power(r, small_cfg)) <= small_cfg.p_bs_watt * (1 + 1e-6)


class TestAlgorithm1:
    """Inner WMMSE loop."""

    def test_monotone_and_feasible(self, small_cfg, small_instance, small_star):
        ch = small_instance
        state = algorithm1(default_w_init(ch, small_cfg), small_star, ch, small_cfg)
        traj = state.trajectory
        assert state.iterations == len(traj) >= 1
        assert all(b >= a * (1 - 1e-9) for a, b in zip(traj, traj[1:]))
        assert state.rates.sum_rate == pytest.approx(traj[-1])
        assert state.rates.total_power <= small_cfg.p_bs_watt * (1 + 1e-6)
        achieved = sensing_sinr(state.bf.u, state.bf.w, ch, small_cfg)
        assert achieved >= small_cfg.gamma_rad_linear * (1 - 1e-5)
        caps = _capacities(state.bf.w, ch, small_star, small_cfg)
        assert np.all(state.rates.r_dr <= caps * (1 + 1e-6) + 1e-3)

    def test_no_sensing_spends_all_on_compute(self, small_cfg, small_instance, small_star):
        ch = small_instance
        state = algorithm1(np.zeros(ch.n_tx), small_star, ch, small_cfg, sensing=False)
        assert state.rates.p_sense == 0.0
        # compute-limited regime: the budget binds
        assert state.rates.total_power == pytest.approx(small_cfg.p_bs_watt, rel=1e-3)
        split = small_cfg.rate_max_bps * (1.0 / ch.n_dr) ** (1.0 / 3.0)
        np.testing.assert_allclose(state.rates.r_dr, split, rtol=1e-3)

    def test_unreachable_threshold(self, small_cfg):
        cfg = small_cfg.with_overrides(gamma_rad_db=200.0)
        _, ch, _ = draw_instance(cfg, 3)
        with pytest.raises(InfeasibleSensing) as info:
            algorithm1(default_w_init(ch, cfg), StarCoefficients.equal_split(cfg.n_ris), ch, cfg)
        assert info.value.budget_watt == pytest.approx(cfg.p_bs_watt)
        assert info.value.required_watt > cfg.p_bs_watt

    def test_single_pass_cap(self, small_cfg, small_instance, small_star):
        cfg = small_cfg.with_overrides(wmmse_max_iter=1)
        state = algorithm1(default_w_init(small_instance, cfg), small_star, small_instance, cfg)
        assert state.iterations == 1
        assert math.isfinite(state.rates.sum_rate)
