"""Tests for configuration models and unit handling."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from star_iscc.config import (
    ScenarioConfig,
    SweepSpec,
    SystemConfig,
    db_to_linear,
    dbm_to_watt,
    linear_to_db,
    watt_to_dbm,
)
from star_iscc.errors import ConfigError


class TestUnits:
    """dB/dBm conversions."""

    def test_reference_points(self):
        assert dbm_to_watt(30.0) == pytest.approx(1.0)
        assert dbm_to_watt(-90.0) == pytest.approx(1e-12)
        assert db_to_linear(30.0) == pytest.approx(1e3)
        assert linear_to_db(0.0) == float("-inf")

    @given(st.floats(min_value=-150.0, max_value=80.0))
    def test_dbm_round_trip(self, value):
        assert watt_to_dbm(dbm_to_watt(value)) == pytest.approx(value, abs=1e-9)

    @given(st.floats(min_value=-100.0, max_value=100.0))
    def test_db_round_trip(self, value):
        assert linear_to_db(db_to_linear(value)) == pytest.approx(value, abs=1e-9)


class TestSystemConfig:
    """SystemConfig validation."""

    def test_paper_defaults(self):
        cfg = SystemConfig.paper()
        assert (cfg.n_tx, cfg.n_rx, cfg.n_ris, cfg.n_dr, cfg.n_interferer) == (8, 8, 40, 4, 4)
        assert cfg.p_bs_watt == pytest.approx(1.0)
        assert cfg.p_dr_watt == pytest.approx(1e-2)
        assert cfg.noise_watt == pytest.approx(1e-12)
        assert cfg.gamma_rad_linear == pytest.approx(1e3)
        assert cfg.ref_loss_linear == pytest.approx(1e-3)

    def test_desk_profile(self):
        cfg = SystemConfig.from_profile("desk")
        assert (cfg.n_tx, cfg.n_rx, cfg.n_ris, cfg.n_dr, cfg.n_interferer) == (4, 4, 8, 2, 2)

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            SystemConfig.from_profile("laptop")

    def test_db_keys_converted(self):
        cfg = SystemConfig(p_bs_dbm=20.0, gamma_rad_db=10.0)
        assert cfg.p_bs_watt == pytest.approx(0.1)
        assert cfg.gamma_rad_linear == pytest.approx(10.0)

    def test_both_spellings_rejected(self):
        with pytest.raises(ConfigError):
            SystemConfig(p_bs_dbm=20.0, p_bs_watt=0.1)

    def test_odd_dr_count_rejected(self):
        with pytest.raises(ConfigError):
            SystemConfig(n_dr=3)

    def test_zero_interferers_allowed(self):
        assert SystemConfig(n_interferer=0).n_interferer == 0

    def test_non_positive_power_rejected(self):
        with pytest.raises(ValidationError):
            SystemConfig(p_bs_watt=0.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            SystemConfig(n_antennas=4)

    def test_frozen(self):
        cfg = SystemConfig.desk()
        with pytest.raises(ValidationError):
            cfg.n_tx = 2

    def test_with_overrides_replaces_canonical(self):
        cfg = SystemConfig.desk().with_overrides(p_bs_dbm=40.0)
        assert cfg.p_bs_watt == pytest.approx(10.0)
        assert cfg.n_ris == 8

    def test_rate_max(self):
        cfg = SystemConfig()
        assert cfg.rate_max_bps == pytest.approx((1.0 / 1e-26) ** (1 / 3) / 3e3)
        assert cfg.rate_rad_nats == pytest.approx(math.log(1001.0))

    def test_log_base(self):
        assert SystemConfig().log_base == 2.0
        assert SystemConfig(rate_log_base="e").log_base == pytest.approx(math.e)


class TestSweepSpec:
    """SweepSpec validation and application."""

    def test_values_must_increase(self):
        with pytest.raises(ValidationError):
            SweepSpec(values=[20.0, 20.0])

    def test_values_not_empty(self):
        with pytest.raises(ValidationError):
            SweepSpec(values=[])

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            SweepSpec(schemes=["magic"])

    def test_ris_counts_integer(self):
        with pytest.raises(ValidationError):
            SweepSpec(parameter="n_ris", values=[4.5, 8.0])

    def test_apply_power_in_dbm(self):
        spec = SweepSpec(parameter="p_bs", values=[20.0])
        cfg = spec.apply(SystemConfig.desk(), 20.0)
        assert cfg.p_bs_watt == pytest.approx(0.1)

    def test_apply_threshold_in_db(self):
        spec = SweepSpec(parameter="gamma_rad", values=[10.0])
        assert spec.apply(SystemConfig.desk(), 10.0).gamma_rad_linear == pytest.approx(10.0)

    def test_apply_ris_count(self):
        spec = SweepSpec(parameter="n_ris", values=[4, 12])
        assert spec.apply(SystemConfig.desk(), 12.0).n_ris == 12


class TestScenarioConfig:
    """Loading scenario documents."""

    def test_from_file(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text(
            'profile = "desk"\n'
            "[system]\n"
            "n_ris = 6\n"
            "p_bs_dbm = 36.0\n"
            "[sweep]\n"
            'parameter = "gamma_rad"\n'
            "values = [10.0, 20.0]\n"
            "draws = 2\n"
        )
        scenario = ScenarioConfig.from_file(path)
        assert scenario.system.n_ris == 6
        assert scenario.system.n_tx == 4
        assert scenario.system.p_bs_watt == pytest.approx(dbm_to_watt(36.0))
        assert scenario.sweep.parameter == "gamma_rad"
        assert scenario.sweep.draws == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ScenarioConfig.from_file(tmp_path / "absent.toml")

    def test_profile_key_selects_base(self):
        scenario = ScenarioConfig.from_dict({"profile": "paper"}, profile="desk")
        assert scenario.system.n_ris == 40

    def test_with_seed(self):
        scenario = ScenarioConfig().with_seed(42)
        assert scenario.system.rng_seed == 42
        assert scenario.sweep.seed == 42
        assert ScenarioConfig().with_seed(None).system.rng_seed == 0
