"""Alternating optimization between the WMMSE and STAR stages."""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from star_iscc.config import SystemConfig, linear_to_db
from star_iscc.errors import InfeasibleSensing
from star_iscc.model.core import BeamformerSet, ChannelSet, RateAllocation, StarCoefficients
from star_iscc.model.metrics import (
    CovarianceBundle,
    equivalent_sinr,
    max_uplink_sinr,
    rate_from_sinr,
)
from star_iscc.solver.star import (
    DiagTemplate,
    algorithm2,
    build_offload_targets,
    extract_rank_one,
    extraction_degradation,
    lift,
)
from star_iscc.solver.wmmse import (
    algorithm1,
    default_w_init,
    relative_increase,
    sensing_power_floor,
)

logger = logging.getLogger(__name__)


class TerminationReason(Enum):
    """Why the outer loop stopped."""

    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NON_IMPROVING = "non_improving"
    RANK_NOT_CONVERGED = "rank_not_converged"


@dataclass
class SolveReport:
    """Everything one full solve produced."""

    scheme: str
    outer_trajectory: List[float]
    inner_trajectories: List[List[float]]
    sca_trajectories: List[List[float]]
    post_extraction_trajectory: List[float]
    bf: BeamformerSet
    star: StarCoefficients
    rates: RateAllocation
    sensing_sinr: float
    penalty_residuals: Tuple[float, float]
    extraction_loss: float
    termination: TerminationReason
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        """Number of outer points."""
        return len(self.outer_trajectory)

    @property
    def sum_rate(self) -> float:
        return self.rates.sum_rate

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        """JSON-ready representation."""
        data: Dict[str, Any] = {
            "scheme": self.scheme,
            "termination": self.termination.value,
            "iterations": self.iterations,
            "sum_rate_bps": self.sum_rate,
            "rates_bps": self.rates.r_dr.tolist(),
            "p_compute_watt": self.rates.p_compute.tolist(),
            "p_sense_watt": self.rates.p_sense,
            "sensing_sinr_db": linear_to_db(self.sensing_sinr) if self.sensing_sinr > 0 else None,
            "outer_trajectory": list(self.outer_trajectory),
            "inner_trajectories": [list(t) for t in self.inner_trajectories],
            "sca_trajectories": [list(t) for t in self.sca_trajectories],
            "post_extraction_trajectory": list(self.post_extraction_trajectory),
            "penalty_residuals": list(self.penalty_residuals),
            "extraction_loss": self.extraction_loss,
            "star": {
                "amp_t": self.star.amp_t.tolist(),
                "amp_r": self.star.amp_r.tolist(),
                "phase_t": self.star.phase_t.tolist(),
                "phase_r": self.star.phase_r.tolist(),
            },
            "w": {"re": self.bf.w.real.tolist(), "im": self.bf.w.imag.tolist()},
        }
        if include_timings:
            data["timings_s"] = dict(self.timings)
        return data


def initialize(
    cfg: SystemConfig,
    ch: ChannelSet,
    rng: np.random.Generator,
    template: Optional[DiagTemplate] = None,
) -> Tuple[np.ndarray, StarCoefficients]:
    """Starting beamformer and STAR coefficients.

    Phases are i.i.d. uniform (transmission side drawn first); amplitudes are
    an equal split unless the template pins them.
    """
    n = ch.n_ris
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(2, n))
    if template is not None and template.has_fixed_amplitudes:
        star = StarCoefficients(
            amp_t=template.fixed_t, amp_r=template.fixed_r, phase_t=phases[0], phase_r=phases[1]
        )
    else:
        star = StarCoefficients.equal_split(n, phases[0], phases[1])
    return default_w_init(ch, cfg), star


def shrink_rates_to_capacity(
    rates: RateAllocation,
    w: np.ndarray,
    ch: ChannelSet,
    star: StarCoefficients,
    cfg: SystemConfig,
    include_sensing: bool = True,
) -> RateAllocation:
    """Cap each rate at ``B·R_{u,l}`` achievable with ``star`` and MMSE receivers."""
    if ch.n_dr == 0:
        return rates
    cov = CovarianceBundle.build(w, ch, star, cfg, include_sensing)
    capacity = np.array([
        cfg.bandwidth_hz * rate_from_sinr(max_uplink_sinr(l, cov, cfg), cfg) for l in range(ch.n_dr)
    ])
    return RateAllocation.from_rates(np.minimum(rates.r_dr, capacity), w, cfg)


def algorithm3(
    cfg: SystemConfig,
    ch: ChannelSet,
    rng: np.random.Generator,
    template: Optional[DiagTemplate] = None,
    sensing: bool = True,
    scheme: str = "proposed_star",
) -> SolveReport:
    """Alternate the WMMSE stage (fixed STAR) and the STAR stage (fixed beamformers).

    Args:
        cfg: System configuration
        ch: Channel realization
        rng: Random generator for the initial STAR phases
        template: Diagonal template of the STAR stage; free split when None
        sensing: False solves the offloading-only variant
        scheme: Label stored in the report

    Returns:
        SolveReport

    Raises:
        InfeasibleSensing: If the sensing threshold cannot be met at the start
    """
    started = time.perf_counter()
    timings = {"wmmse": 0.0, "star": 0.0, "extraction": 0.0}

    floor = sensing_power_floor(ch, cfg)
    if sensing and floor > cfg.p_bs_watt:
        raise InfeasibleSensing(
            "Sensing threshold above what the budget allows", floor, cfg.p_bs_watt
        )

    w, star = initialize(cfg, ch, rng, template)
    if not sensing:
        w = np.zeros(ch.n_tx, dtype=complex)

    outer: List[float] = []
    inner: List[List[float]] = []
    sca: List[List[float]] = []
    post_extraction: List[float] = []
    state = None
    incumbent_star = star
    residuals = (0.0, 0.0)
    loss = 0.0
    rank_failures = 0
    termination = TerminationReason.MAX_ITERATIONS

    for j in range(cfg.ao_max_iter):
        tic = time.perf_counter()
        try:
            candidate = algorithm1(w, star, ch, cfg, sensing)
        except InfeasibleSensing as e:
            if j == 0:
                raise InfeasibleSensing(
                    f"First inner solve failed: {e}", floor, cfg.p_bs_watt
                ) from e
            raise
        timings["wmmse"] += time.perf_counter() - tic

        value = candidate.rates.sum_rate
        if outer and value < outer[-1]:
            logger.debug("Outer iteration %d lowered the sum rate; keeping incumbent", j)
            termination = TerminationReason.NON_IMPROVING
            break
        state, incumbent_star = candidate, star
        outer.append(value)
        inner.append(list(candidate.trajectory))
        if len(outer) >= 2 and relative_increase(outer[-2], value) < cfg.ao_tol:
            termination = TerminationReason.CONVERGED
            break

        tic = time.perf_counter()
        targets = build_offload_targets(state.rates, state.bf, ch, cfg, include_sensing=sensing)
        v_t, v_r = lift(star)
        lifted = algorithm2(v_t, v_r, targets, cfg, template)
        timings["star"] += time.perf_counter() - tic

        tic = time.perf_counter()
        star = extract_rank_one(lifted)
        timings["extraction"] += time.perf_counter() - tic

        sca.append(list(lifted.trajectory))
        residuals = lifted.penalty_residuals
        loss = max(loss, extraction_degradation(lifted, star))
        shrunk = shrink_rates_to_capacity(state.rates, state.bf.w, ch, star, cfg, sensing)
        post_extraction.append(shrunk.sum_rate)
        w = state.bf.w

        rank_failures = 0 if lifted.rank_converged else rank_failures + 1
        if rank_failures >= 2:
            termination = TerminationReason.RANK_NOT_CONVERGED
            break

    assert state is not None
    if sensing:
        cov = CovarianceBundle.build(state.bf.w, ch, incumbent_star, cfg)
        achieved = equivalent_sinr(state.bf.w, ch, cov)
    else:
        achieved = 0.0
    timings["total"] = time.perf_counter() - started
    logger.info(
        "%s: %d outer iterations, sum rate %.6e bit/s (%s)",
        scheme, len(outer), state.rates.sum_rate, termination.value,
    )
    return SolveReport(
        scheme=scheme,
        outer_trajectory=outer,
        inner_trajectories=inner,
        sca_trajectories=sca,
        post_extraction_trajectory=post_extraction,
        bf=state.bf,
        star=incumbent_star,
        rates=state.rates,
        sensing_sinr=achieved,
        penalty_residuals=residuals,
        extraction_loss=loss,
        termination=termination,
        timings=timings,
    )
