"""Shared fixtures for the star-iscc test suite."""

import os

import hypothesis
import numpy as np
import pytest

from star_iscc.config import SystemConfig
from star_iscc.model.channels import draw_instance
from star_iscc.model.core import StarCoefficients

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def desk_cfg() -> SystemConfig:
    """Desk-scale configuration (Nt=Nr=4, N=8, L=2, M=2)."""
    return SystemConfig.desk()


@pytest.fixture
def small_cfg() -> SystemConfig:
    """Smaller than desk, for tests that run full solves."""
    return SystemConfig.desk().with_overrides(
        n_ris=4, ao_max_iter=4, sca_max_iter=5, wmmse_max_iter=15
    )


@pytest.fixture
def instance(desk_cfg):
    """Geometry, channels and generator of seed 7 at desk scale."""
    return draw_instance(desk_cfg, 7)


@pytest.fixture
def random_star(desk_cfg):
    """Feasible STAR coefficients with an uneven split."""
    rng = np.random.default_rng(11)
    amp_t = rng.uniform(size=desk_cfg.n_ris)
    return StarCoefficients(
        amp_t=amp_t,
        amp_r=1.0 - amp_t,
        phase_t=rng.uniform(0, 2 * np.pi, desk_cfg.n_ris),
        phase_r=rng.uniform(0, 2 * np.pi, desk_cfg.n_ris),
    )
