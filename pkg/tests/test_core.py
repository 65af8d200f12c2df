"""Tests for the core domain types and channel algebra."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from star_iscc.config import SystemConfig
from star_iscc.errors import InvalidCoefficients
from star_iscc.model.core import (
    RateAllocation,
    Side,
    StarCoefficients,
    build_sensing_channels,
    effective_uplink_channel,
    effective_uplink_channels,
    star_matrices,
    steering_vector,
)


class TestStarCoefficients:
    """Energy conservation and phase handling."""

    def test_equal_split_conserves_energy(self):
        star = StarCoefficients.equal_split(6)
        assert star.energy_violation() == 0.0
        assert star.n_elements == 6

    def test_phases_wrapped(self):
        star = StarCoefficients(
            amp_t=[1.0], amp_r=[0.0], phase_t=[2 * math.pi + 0.5], phase_r=[-0.5]
        )
        assert star.phase_t[0] == pytest.approx(0.5)
        assert star.phase_r[0] == pytest.approx(2 * math.pi - 0.5)

    def test_length_mismatch(self):
        with pytest.raises(InvalidCoefficients):
            StarCoefficients(amp_t=[0.5, 0.5], amp_r=[0.5], phase_t=[0, 0], phase_r=[0, 0])

    def test_violation_measured(self):
        star = StarCoefficients(amp_t=[0.7, 0.5], amp_r=[0.5, 0.5], phase_t=[0, 0], phase_r=[0, 0])
        assert star.energy_violation() == pytest.approx(0.2)

    def test_star_matrices_reject_violation(self):
        star = StarCoefficients(amp_t=[0.6], amp_r=[0.6], phase_t=[0.0], phase_r=[0.0])
        with pytest.raises(InvalidCoefficients):
            star_matrices(star)

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=12))
    def test_matrices_conserve_energy(self, split):
        amp_t = np.array(split)
        rng = np.random.default_rng(len(split))
        star = StarCoefficients(
            amp_t=amp_t, amp_r=1.0 - amp_t,
            phase_t=rng.uniform(0, 6.3, amp_t.size), phase_r=rng.uniform(0, 6.3, amp_t.size),
        )
        phi_t, phi_r = star_matrices(star)
        total = np.abs(np.diag(phi_t)) ** 2 + np.abs(np.diag(phi_r)) ** 2
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_coefficient_vector(self):
        star = StarCoefficients(amp_t=[0.25], amp_r=[0.75], phase_t=[math.pi / 2], phase_r=[0.0])
        v = star.coefficient_vector(Side.TRANSMISSION)
        assert v[0] == pytest.approx(0.5j)
        assert star.coefficient_vector(Side.REFLECTION)[0] == pytest.approx(math.sqrt(0.75))

    def test_read_only(self):
        star = StarCoefficients.equal_split(3)
        with pytest.raises(ValueError):
            star.amp_t[0] = 1.0


class TestSteering:
    """ULA steering vectors and sensing channels."""

    @given(st.floats(min_value=-math.pi / 2, max_value=math.pi / 2), st.integers(1, 64))
    def test_unit_norm(self, theta, n):
        assert np.linalg.norm(steering_vector(theta, n)) == pytest.approx(1.0, abs=1e-12)

    def test_broadside_is_uniform(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), np.full(4, 0.5))

    def test_target_channel_rank_one(self):
        a0, a_i, a = build_sensing_channels(0.0, [-math.pi / 6], [1e-3, 2e-3j], 4, 4)
        sv = np.linalg.svd(a0, compute_uv=False)
        assert sv[1] / sv[0] < 1e-12
        np.testing.assert_allclose(a, a0 + a_i)

    def test_no_interferers(self):
        a0, a_i, a = build_sensing_channels(0.0, [], [1.0], 3, 2)
        assert a_i.shape == (2, 3)
        assert not np.any(a_i)
        np.testing.assert_allclose(a, a0)

    def test_coefficient_count_checked(self):
        with pytest.raises(ValueError):
            build_sensing_channels(0.0, [0.3, 0.6], [1.0, 1.0], 2, 2)


class TestEffectiveChannel:
    """Cascaded uplink channels."""

    def test_matches_triple_loop(self, instance, random_star):
        _, ch, _ = instance
        for l in range(ch.n_dr):
            coeffs = random_star.coefficient_vector(ch.side[l])
            expected = np.zeros(ch.n_rx, dtype=complex)
            for k in range(ch.n_rx):
                for n in range(ch.n_ris):
                    expected[k] += np.conj(ch.h_bs_ris[n, k]) * coeffs[n] * ch.h_ris_dr[l, n]
            np.testing.assert_allclose(
                effective_uplink_channel(ch, random_star, l), expected, rtol=1e-12, atol=1e-30
            )

    def test_stacked(self, instance, random_star):
        _, ch, _ = instance
        g = effective_uplink_channels(ch, random_star)
        assert g.shape == (ch.n_dr, ch.n_rx)
        np.testing.assert_allclose(g[1], effective_uplink_channel(ch, random_star, 1))

    def test_index_out_of_range(self, instance, random_star):
        _, ch, _ = instance
        with pytest.raises(IndexError):
            effective_uplink_channel(ch, random_star, ch.n_dr)

    def test_sides_split_evenly(self, instance):
        _, ch, _ = instance
        assert ch.side == (Side.TRANSMISSION, Side.REFLECTION)

    def test_other_side_does_not_matter(self, instance):
        _, ch, _ = instance
        a = StarCoefficients(
            amp_t=np.ones(8), amp_r=np.zeros(8), phase_t=np.zeros(8), phase_r=np.zeros(8)
        )
        b = StarCoefficients(
            amp_t=np.ones(8), amp_r=np.zeros(8), phase_t=np.zeros(8), phase_r=np.linspace(0, 3, 8)
        )
        np.testing.assert_allclose(
            effective_uplink_channel(ch, a, 0), effective_uplink_channel(ch, b, 0)
        )


class TestRateAllocation:
    """Rates to powers."""

    def test_from_rates(self):
        cfg = SystemConfig.desk()
        w = np.array([0.1, 0.2j, 0.0, 0.0])
        alloc = RateAllocation.from_rates([1e5, 2e5], w, cfg)
        assert alloc.sum_rate == pytest.approx(3e5)
        assert alloc.p_sense == pytest.approx(0.05)
        assert alloc.p_compute[0] == pytest.approx(1e-26 * (3e3 * 1e5) ** 3)
        assert alloc.total_power == pytest.approx(alloc.p_sense + alloc.p_compute.sum())

    def test_negative_rates_clipped(self):
        alloc = RateAllocation.from_rates([-1.0], np.zeros(2), SystemConfig.desk())
        assert alloc.r_dr[0] == 0.0
