"""Tests for the self-check suite."""

import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

import star_iscc.harness.validate as validate
from star_iscc.harness.validate import (
    CheckResult,
    OracleGap,
    ValidationPlan,
    ValidationReport,
    ValidationStatus,
    _min_sensing_power,
    check_beampattern,
    check_budget_split,
    check_capacity_tightness,
    check_covariances,
    check_embedding,
    check_energy_conservation,
    check_mmse_optimality,
    check_rate_round_trip,
    check_steering_norm,
    check_target_rank,
    grid_search_oracle,
    run_validate,
    tiny_instance,
)
from star_iscc.model.core import StarCoefficients, steering_vector
from star_iscc.solver.ao import algorithm3


class TestReport:
    """Report bookkeeping."""

    def test_warn_does_not_fail(self):
        report = ValidationReport(checks=[
            CheckResult("a", ValidationStatus.PASS, 0.0, 1.0),
            CheckResult("b", ValidationStatus.WARN, 2.0, 1.0),
        ])
        assert report.passed
        report.checks.append(CheckResult("c", ValidationStatus.FAIL, math.nan, 1.0))
        assert not report.passed
        assert [c.name for c in report.failures] == ["c"]

    def test_to_dict_is_json(self):
        report = ValidationReport(
            checks=[CheckResult("a", ValidationStatus.FAIL, math.inf, 1.0, "boom")],
            oracle=[OracleGap(0, 1.0, 0.0)],
        )
        data = json.loads(json.dumps(report.to_dict()))
        assert data["checks"][0]["value"] is None
        assert data["oracle"][0]["ratio"] is None
        assert data["passed"] is False

    def test_quick_plan_is_smaller(self):
        quick, full = ValidationPlan.quick(), ValidationPlan()
        assert quick.tightness_instances < full.tightness_instances
        assert quick.oracle_grid < full.oracle_grid


class TestCheapChecks:
    """Checks that need no conic solve."""

    def test_energy_conservation_detects_violation(self):
        bad = StarCoefficients(amp_t=[0.7, 0.5], amp_r=[0.5, 0.5], phase_t=[0, 0], phase_r=[0, 0])
        assert check_energy_conservation(bad).status is ValidationStatus.FAIL
        good = StarCoefficients.equal_split(4)
        assert check_energy_conservation(good).status is ValidationStatus.PASS

    def test_static_checks_pass(self, desk_cfg):
        for check in (check_steering_norm(), check_embedding(0), check_rate_round_trip(desk_cfg)):
            assert check.status is ValidationStatus.PASS, check.name

    def test_instance_checks_pass(self, desk_cfg):
        seeds = [0, 1, 2]
        results = [
            check_target_rank(desk_cfg, seeds),
            *check_capacity_tightness(desk_cfg, seeds),
            check_mmse_optimality(desk_cfg, seeds),
            check_covariances(desk_cfg, seeds),
        ]
        for check in results:
            assert check.status is ValidationStatus.PASS, (check.name, check.value)

    def test_budget_split(self, small_cfg):
        check = check_budget_split(small_cfg)
        assert check.status is ValidationStatus.PASS, check.value


class TestOracle:
    """Exhaustive grid on the two-element instance."""

    def test_min_sensing_power_without_clutter(self):
        p = _min_sensing_power(a=2.0, c=0.0, d=0.0, sigma2=1e-3, gamma=10.0)
        assert p == pytest.approx(10.0 * 1e-3 / 2.0)

    def test_min_sensing_power_meets_threshold(self):
        a, c, d, sigma2, gamma = 2.0, 0.3, 0.5, 1e-2, 50.0
        p = _min_sensing_power(a, c, d, sigma2, gamma)
        # optimal receiver SINR along the direction
        sinr = p * (a - p * c / (sigma2 + p * d)) / sigma2
        assert sinr == pytest.approx(gamma, rel=1e-9)

    def test_tiny_instance_shape(self, desk_cfg):
        tiny, ch, _ = tiny_instance(desk_cfg, 0)
        assert (ch.n_tx, ch.n_rx, ch.n_ris, ch.n_dr) == (2, 2, 2, 1)
        assert len(ch.thetas_interf) == 1
        assert tiny.n_interferer == 1

    def test_oracle_rejects_larger_instances(self, desk_cfg, instance):
        _, ch, _ = instance
        with pytest.raises(ValueError):
            grid_search_oracle(ch, desk_cfg, 8)

    def test_ao_does_not_beat_grid(self, desk_cfg):
        tiny, ch, rng = tiny_instance(desk_cfg, 1)
        oracle = grid_search_oracle(ch, tiny, 24)
        ao = algorithm3(tiny, ch, rng).sum_rate
        assert oracle > 0
        assert ao <= oracle + 1e-6

    def test_refinement_only_raises_oracle(self, desk_cfg):
        tiny, ch, _ = tiny_instance(desk_cfg, 2)
        coarse = grid_search_oracle(ch, tiny, 12, refine=0)
        refined = grid_search_oracle(ch, tiny, 12)
        assert refined >= coarse
        assert refined <= tiny.rate_max_bps

    def test_upper_bound_is_absolute(self, desk_cfg, monkeypatch):
        monkeypatch.setattr(validate, "grid_search_oracle", lambda ch, cfg, points: 1.0e5)
        monkeypatch.setattr(
            validate, "algorithm3", lambda cfg, ch, rng: SimpleNamespace(sum_rate=1.0e5 + 1e-3)
        )
        checks, gaps = validate.check_oracle(desk_cfg, [0])
        bound = next(c for c in checks if c.name == "oracle_upper_bound")
        assert bound.status is ValidationStatus.FAIL
        assert bound.value == pytest.approx(1e-3 - 1e-6)
        assert gaps[0].ratio > 1.0


class TestBeampatternCheck:
    """Peak and null measurements on the sensing pattern."""

    @staticmethod
    def _report(u, w):
        return SimpleNamespace(bf=SimpleNamespace(u=u, w=w))

    @staticmethod
    def _orthogonal_to(target, others):
        basis = np.column_stack(others)
        return target - basis @ np.linalg.lstsq(basis, target, rcond=None)[0]

    def test_matched_beams_measured_at_exact_angles(self, instance):
        _, ch, _ = instance
        n = ch.n_tx
        u = steering_vector(ch.theta_target, ch.n_rx)
        w = steering_vector(ch.theta_target, n)
        peak, nulls = check_beampattern(self._report(u, w), ch)
        assert peak.status is ValidationStatus.PASS
        # two-way array factor of a broadside beam at the worst interferer
        phase = min(abs(math.sin(t)) for t in ch.thetas_interf)
        factor = abs(math.sin(n * phase / 2) / (n * math.sin(phase / 2)))
        assert nulls.value == pytest.approx(40.0 * math.log10(factor), abs=1e-9)
        assert nulls.status is ValidationStatus.WARN

    def test_steered_nulls_pass(self, instance):
        _, ch, _ = instance
        u = self._orthogonal_to(
            steering_vector(ch.theta_target, ch.n_rx),
            [steering_vector(t, ch.n_rx) for t in ch.thetas_interf],
        )
        w = self._orthogonal_to(
            steering_vector(ch.theta_target, ch.n_tx),
            [steering_vector(t, ch.n_tx) for t in ch.thetas_interf],
        )
        _, nulls = check_beampattern(self._report(u, w), ch)
        assert nulls.value <= -20.0
        assert nulls.status is ValidationStatus.PASS


@pytest.mark.slow
class TestRunValidate:
    """End-to-end quick validation."""

    def test_quick_run(self, desk_cfg):
        report = run_validate(desk_cfg, ValidationPlan.quick())
        names = {c.name for c in report.checks}
        assert {"steering_unit_norm", "ao_monotone", "oracle_upper_bound"} <= names
        assert len(report.oracle) == ValidationPlan.quick().oracle_seeds
        assert report.passed, [(c.name, c.value) for c in report.failures]
        assert np.isfinite(report.elapsed_s)
