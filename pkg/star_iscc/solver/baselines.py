"""Comparison schemes expressed as constrained variants of the main pipeline."""

from enum import Enum
from typing import Optional

import numpy as np

from star_iscc.config import SystemConfig
from star_iscc.errors import ConfigError
from star_iscc.model.core import ChannelSet
from star_iscc.solver.ao import SolveReport, algorithm3
from star_iscc.solver.star import DiagTemplate


class SchemeKind(Enum):
    """Schemes the harness can compare."""

    PROPOSED_STAR = "proposed_star"
    CONVENTIONAL_RIS = "conventional_ris"
    EQUAL_SPLIT_STAR = "equal_split_star"
    OFFLOADING_ONLY = "offloading_only"


def conventional_ris_template(n: int) -> DiagTemplate:
    """One transmitting-only and one reflecting-only RIS of ``N/2`` elements each.

    Raises:
        ConfigError: If ``n`` is odd
    """
    if n % 2:
        raise ConfigError(f"Conventional RIS split needs an even element count, got {n}")
    half = n // 2
    fixed_t = np.concatenate([np.ones(half), np.zeros(half)])
    return DiagTemplate("conventional_ris", n, fixed_t=fixed_t, fixed_r=1.0 - fixed_t)


def equal_split_template(n: int) -> DiagTemplate:
    """Half of every element's energy to each side; only phases are designed."""
    half = np.full(n, 0.5)
    return DiagTemplate("equal_split_star", n, fixed_t=half, fixed_r=half.copy())


def template_for(scheme: SchemeKind, n: int) -> Optional[DiagTemplate]:
    """Diagonal template of a scheme (None means a free split)."""
    if scheme is SchemeKind.CONVENTIONAL_RIS:
        return conventional_ris_template(n)
    if scheme is SchemeKind.EQUAL_SPLIT_STAR:
        return equal_split_template(n)
    return None


def offloading_only_pipeline(
    cfg: SystemConfig, ch: ChannelSet, rng: np.random.Generator
) -> SolveReport:
    """Full alternation with ``w = 0`` and no sensing constraint."""
    return algorithm3(cfg, ch, rng, sensing=False, scheme=SchemeKind.OFFLOADING_ONLY.value)


def solve_scheme(
    scheme: SchemeKind, cfg: SystemConfig, ch: ChannelSet, rng: np.random.Generator
) -> SolveReport:
    """Run one scheme on one channel realization."""
    if scheme is SchemeKind.OFFLOADING_ONLY:
        return offloading_only_pipeline(cfg, ch, rng)
    return algorithm3(cfg, ch, rng, template=template_for(scheme, ch.n_ris), scheme=scheme.value)
