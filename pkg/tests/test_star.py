"""Tests for the lifted STAR stage and rank-one extraction."""

import warnings

import numpy as np
import pytest

from star_iscc.errors import ExtractionLoss, StarIsccWarning
from star_iscc.model.channels import draw_instance
from star_iscc.model.core import Side, StarCoefficients
from star_iscc.model.metrics import uplink_sinr
from star_iscc.solver.baselines import conventional_ris_template, equal_split_template
from star_iscc.solver.star import (
    DiagTemplate,
    LiftedStar,
    OffloadTargets,
    algorithm2,
    build_offload_targets,
    dominant_eigenvector,
    extract_rank_one,
    extraction_degradation,
    lift,
    penalty_residual,
    sca_surrogate,
    trace_sinr,
)
from star_iscc.solver.wmmse import algorithm1, default_w_init


def _random_psd(n: int, rank: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return x @ x.conj().T


@pytest.fixture
def stage_inputs(small_cfg):
    """Channels, starting coefficients and offload targets after one WMMSE run."""
    _, ch, rng = draw_instance(small_cfg, 5)
    phases = rng.uniform(0, 2 * np.pi, size=(2, small_cfg.n_ris))
    star = StarCoefficients.equal_split(small_cfg.n_ris, phases[0], phases[1])
    state = algorithm1(default_w_init(ch, small_cfg), star, ch, small_cfg)
    targets = build_offload_targets(state.rates, state.bf, ch, small_cfg)
    return ch, star, state, targets


class TestLift:
    """Lifting and the rank penalty."""

    def test_lift_rank_one(self, random_star):
        v_t, v_r = lift(random_star)
        assert penalty_residual(v_t) == pytest.approx(0.0, abs=1e-12)
        assert penalty_residual(v_r) == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(np.diag(v_t + v_r).real, 1.0, atol=1e-12)

    def test_penalty_of_identity(self):
        assert penalty_residual(np.eye(3)) == pytest.approx(2.0)

    def test_dominant_eigenvector_phase(self):
        v = _random_psd(4, 2, 0)
        top, b = dominant_eigenvector(v)
        assert top == pytest.approx(np.linalg.eigvalsh(v)[-1])
        np.testing.assert_allclose(v @ b, top * b, atol=1e-9 * top)
        first = b[np.flatnonzero(np.abs(b) > 1e-12)[0]]
        assert first.imag == pytest.approx(0.0, abs=1e-12)
        assert first.real > 0

    def test_surrogate_majorizes(self):
        anchor = _random_psd(4, 2, 1)
        surrogate = sca_surrogate(anchor)
        assert surrogate(anchor) == pytest.approx(-np.linalg.eigvalsh(anchor)[-1])
        for seed in range(2, 7):
            v = _random_psd(4, 3, seed)
            assert surrogate(v) >= -np.linalg.eigvalsh(v)[-1] - 1e-9


class TestTraceSinr:
    """Trace-form SINR rows."""

    def test_matches_direct_sinr(self, small_cfg, stage_inputs):
        ch, star, state, targets = stage_inputs
        v_t, v_r = lift(star)
        sinr = trace_sinr(targets, v_t, v_r)
        for l in range(ch.n_dr):
            direct = uplink_sinr(l, state.bf, ch, star, small_cfg)
            assert sinr[l] == pytest.approx(direct, rel=1e-9)

    def test_targets_met_at_incumbent(self, stage_inputs):
        _, star, _, targets = stage_inputs
        v_t, v_r = lift(star)
        assert np.all(trace_sinr(targets, v_t, v_r) >= targets.gamma_dr * (1 - 1e-4))


class TestAlgorithm2:
    """Penalized SCA over the lifted matrices."""

    def test_free_split(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        v_t, v_r = lift(star)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StarIsccWarning)
            ls = algorithm2(v_t, v_r, targets, small_cfg)
        np.testing.assert_allclose(np.diag(ls.v_t + ls.v_r).real, 1.0, atol=1e-6)
        for side in (Side.TRANSMISSION, Side.REFLECTION):
            assert np.linalg.eigvalsh(ls.matrix(side))[0] >= -1e-6
        traj = ls.trajectory
        assert all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(traj, traj[1:]))
        assert len(traj) == ls.iterations + 1
        assert ls.template.name == "star"

    def test_sinr_targets_hold(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        v_t, v_r = lift(star)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StarIsccWarning)
            ls = algorithm2(v_t, v_r, targets, small_cfg)
        achieved = trace_sinr(targets, ls.v_t, ls.v_r)
        assert np.all(achieved >= ls.targets.gamma_dr * (1 - 1e-4))

    def test_rank_residual_within_tolerance(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        cfg = small_cfg.with_overrides(sca_max_iter=30)
        v_t, v_r = lift(star)
        ls = algorithm2(v_t, v_r, targets, cfg)
        assert ls.rank_converged
        for res, side in zip(ls.penalty_residuals, (Side.TRANSMISSION, Side.REFLECTION)):
            assert res <= cfg.rank_tol * np.trace(ls.matrix(side)).real + 1e-12

    def test_zero_targets_return_start(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        zero = OffloadTargets(
            gamma_dr=np.zeros(targets.n_dr),
            noise_terms=targets.noise_terms,
            b_matrices=targets.b_matrices,
            side=targets.side,
        )
        v_t, v_r = lift(star)
        ls = algorithm2(v_t, v_r, zero, small_cfg)
        assert ls.converged
        assert ls.iterations == 0
        np.testing.assert_allclose(ls.v_t, v_t, atol=1e-12)
        np.testing.assert_allclose(ls.v_r, v_r, atol=1e-12)

    def test_penalty_only_keeps_rank_one_start(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        cfg = small_cfg.with_overrides(star_slack_weight=0.0)
        v_t, v_r = lift(star)
        ls = algorithm2(v_t, v_r, targets, cfg)
        assert ls.iterations == 0
        np.testing.assert_allclose(ls.v_t, v_t, atol=1e-12)

    def test_margin_moves_incumbent(self, small_cfg, stage_inputs):
        _, star, _, targets = stage_inputs
        assert np.all(targets.gamma_dr > 0)
        v_t, v_r = lift(star)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StarIsccWarning)
            ls = algorithm2(v_t, v_r, targets, small_cfg)
        assert ls.iterations >= 1
        assert ls.trajectory[-1] < ls.trajectory[0]
        achieved = trace_sinr(targets, ls.v_t, ls.v_r)
        assert np.all(achieved >= ls.targets.gamma_dr * (1 - 1e-4))

    @pytest.mark.parametrize("make_template", [conventional_ris_template, equal_split_template])
    def test_fixed_amplitudes(self, small_cfg, stage_inputs, make_template):
        ch = stage_inputs[0]
        template = make_template(small_cfg.n_ris)
        rng = np.random.default_rng(9)
        star = StarCoefficients(
            amp_t=template.fixed_t, amp_r=template.fixed_r,
            phase_t=rng.uniform(0, 6.28, small_cfg.n_ris),
            phase_r=rng.uniform(0, 6.28, small_cfg.n_ris),
        )
        run = algorithm1(default_w_init(ch, small_cfg), star, ch, small_cfg)
        targets = build_offload_targets(run.rates, run.bf, ch, small_cfg)
        v_t, v_r = lift(star)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StarIsccWarning)
            ls = algorithm2(v_t, v_r, targets, small_cfg, template)
            coeffs = extract_rank_one(ls)
        np.testing.assert_allclose(np.diag(ls.v_t).real, template.fixed_t, atol=1e-6)
        np.testing.assert_allclose(np.diag(ls.v_r).real, template.fixed_r, atol=1e-6)
        np.testing.assert_array_equal(coeffs.amp_t, template.fixed_t)
        # elements outside a side's support stay off
        off = np.flatnonzero(template.fixed_t == 0)
        assert not np.any(ls.v_t[np.ix_(off, off)])


class TestExtraction:
    """Rank-one recovery."""

    def test_round_trip(self, random_star):
        v_t, v_r = lift(random_star)
        ls = LiftedStar(v_t=v_t, v_r=v_r, penalty_residuals=(0.0, 0.0))
        coeffs = extract_rank_one(ls)
        np.testing.assert_allclose(coeffs.amp_t, random_star.amp_t, atol=1e-12)
        assert coeffs.energy_violation() <= 1e-9
        back_t, back_r = lift(coeffs)
        np.testing.assert_allclose(back_t, v_t, atol=1e-10)
        np.testing.assert_allclose(back_r, v_r, atol=1e-10)

    def test_zero_diagonal_splits_evenly(self):
        ls = LiftedStar(v_t=np.zeros((2, 2)), v_r=np.zeros((2, 2)), penalty_residuals=(0.0, 0.0))
        coeffs = extract_rank_one(ls)
        np.testing.assert_allclose(coeffs.amp_t, 0.5)
        np.testing.assert_allclose(coeffs.phase_t, 0.0)

    def test_no_targets_no_degradation(self, random_star):
        v_t, v_r = lift(random_star)
        ls = LiftedStar(v_t=v_t, v_r=v_r, penalty_residuals=(0.0, 0.0))
        assert extraction_degradation(ls, random_star) == 0.0

    def test_loss_warning(self, stage_inputs):
        _, star, _, targets = stage_inputs
        v_t, v_r = lift(star)
        inflated = OffloadTargets(
            gamma_dr=10.0 * trace_sinr(targets, v_t, v_r),
            noise_terms=targets.noise_terms,
            b_matrices=targets.b_matrices,
            side=targets.side,
        )
        ls = LiftedStar(v_t=v_t, v_r=v_r, penalty_residuals=(0.0, 0.0), targets=inflated)
        with pytest.warns(ExtractionLoss) as record:
            extract_rank_one(ls)
        assert record[0].message.degradation > 0.5

    def test_template_support(self):
        template = DiagTemplate("half", 4, fixed_t=np.array([1.0, 1.0, 0.0, 0.0]),
                                fixed_r=np.array([0.0, 0.0, 1.0, 1.0]))
        np.testing.assert_array_equal(template.support(Side.TRANSMISSION), [0, 1])
        np.testing.assert_array_equal(template.support(Side.REFLECTION), [2, 3])
        np.testing.assert_array_equal(DiagTemplate.star(3).support(Side.REFLECTION), [0, 1, 2])
