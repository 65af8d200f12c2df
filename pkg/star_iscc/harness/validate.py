"""Self-check suite run by ``star-iscc validate``.

Checks come in two severities: hard checks fail the run, soft checks
(local-method quality, null depth) are reported as warnings.
"""

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from star_iscc.config import SystemConfig, linear_to_db
from star_iscc.errors import StarIsccError
from star_iscc.harness.experiments import angle_grid_deg
from star_iscc.model.channels import draw_instance
from star_iscc.model.core import (
    ENERGY_TOL,
    ChannelSet,
    Side,
    StarCoefficients,
    effective_uplink_channel,
    steering_vector,
)
from star_iscc.model.metrics import (
    CovarianceBundle,
    beampattern,
    equivalent_sinr,
    eta,
    max_uplink_sinr,
    mse_dr,
    mse_rad,
    rate_from_sinr,
    sinr_from_rate,
)
from star_iscc.solver.ao import SolveReport, algorithm3, initialize
from star_iscc.solver.conic import HermitianEmbedding
from star_iscc.solver.star import (
    algorithm2,
    build_offload_targets,
    extract_rank_one,
    extraction_degradation,
    lift,
)
from star_iscc.solver.wmmse import algorithm1, rate_power_subproblem, update_beamformers

logger = logging.getLogger(__name__)

# grid cells polished by the local search in the oracle
ORACLE_REFINE = 4
# absolute slack (bps) allowed between AO and the oracle
ORACLE_SLACK_BPS = 1e-6


class ValidationStatus(Enum):
    """Outcome of one check."""

    PASS = "pass"
    FAIL = "fail"
    WARN = "warn"


@dataclass
class CheckResult:
    """Measured value of one check against its threshold (smaller is better)."""

    name: str
    status: ValidationStatus
    value: float
    threshold: float
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status is not ValidationStatus.FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status.value,
            "value": _finite_or_none(self.value),
            "threshold": self.threshold,
            "message": self.message,
        }


@dataclass(frozen=True)
class OracleGap:
    """AO result against the exhaustive grid on one tiny instance."""

    seed: int
    ao_bps: float
    oracle_bps: float

    @property
    def ratio(self) -> float:
        return self.ao_bps / self.oracle_bps if self.oracle_bps > 0 else math.nan


@dataclass
class ValidationReport:
    """All check results of one validation run."""

    checks: List[CheckResult] = field(default_factory=list)
    oracle: List[OracleGap] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "oracle": [
                {"seed": g.seed, "ao_bps": g.ao_bps, "oracle_bps": g.oracle_bps,
                 "ratio": _finite_or_none(g.ratio)}
                for g in self.oracle
            ],
        }


@dataclass(frozen=True)
class ValidationPlan:
    """How many instances each check draws."""

    tightness_instances: int = 50
    wmmse_instances: int = 20
    star_instances: int = 10
    ao_seeds: int = 5
    oracle_seeds: int = 10
    oracle_grid: int = 36

    @classmethod
    def quick(cls) -> "ValidationPlan":
        """Small plan for smoke runs."""
        return cls(
            tightness_instances=5, wmmse_instances=3, star_instances=2,
            ao_seeds=1, oracle_seeds=2, oracle_grid=24,
        )


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def _judge(
    name: str, value: float, threshold: float, message: str = "", soft: bool = False
) -> CheckResult:
    if value <= threshold:
        status = ValidationStatus.PASS
    else:
        status = ValidationStatus.WARN if soft else ValidationStatus.FAIL
    return CheckResult(name, status, float(value), float(threshold), message)


def _relative_drop(trajectory: Sequence[float]) -> float:
    """Largest relative decrease between consecutive entries."""
    drops = [
        max(0.0, prev - cur) / max(abs(prev), 1.0)
        for prev, cur in zip(trajectory[:-1], trajectory[1:])
    ]
    return max(drops, default=0.0)


def _relative_rise(trajectory: Sequence[float]) -> float:
    rises = [
        max(0.0, cur - prev) / max(abs(prev), 1.0)
        for prev, cur in zip(trajectory[:-1], trajectory[1:])
    ]
    return max(rises, default=0.0)


def random_point(cfg: SystemConfig, seed: int) -> Tuple[ChannelSet, StarCoefficients, np.ndarray]:
    """Channel draw plus a random feasible STAR split and beamformer."""
    _, ch, rng = draw_instance(cfg, seed)
    n = ch.n_ris
    amp_t = rng.uniform(size=n)
    star = StarCoefficients(
        amp_t=amp_t, amp_r=1.0 - amp_t,
        phase_t=rng.uniform(0.0, 2.0 * math.pi, n), phase_r=rng.uniform(0.0, 2.0 * math.pi, n),
    )
    z = rng.standard_normal(ch.n_tx) + 1j * rng.standard_normal(ch.n_tx)
    w = math.sqrt(cfg.p_bs_watt * rng.uniform(0.1, 1.0)) * z / np.linalg.norm(z)
    return ch, star, w


def check_energy_conservation(
    coeffs: StarCoefficients, name: str = "energy_conservation"
) -> CheckResult:
    """Amplitudes lie in [0, 1] and each element's pair sums to one."""
    return _judge(name, coeffs.energy_violation(), ENERGY_TOL)


def check_steering_norm() -> CheckResult:
    """Steering vectors have unit norm."""
    worst = max(
        abs(np.linalg.norm(steering_vector(theta, n)) - 1.0)
        for n in (1, 2, 4, 8, 16, 40)
        for theta in np.linspace(-math.pi / 2, math.pi / 2, 37)
    )
    return _judge("steering_unit_norm", worst, 1e-12)


def check_target_rank(cfg: SystemConfig, seeds: Sequence[int]) -> CheckResult:
    """Target channel ``A_0`` is rank one."""
    worst = 0.0
    for seed in seeds:
        _, ch, _ = draw_instance(cfg, seed)
        sv = np.linalg.svd(ch.a_target, compute_uv=False)
        if sv.size > 1 and sv[0] > 0:
            worst = max(worst, float(sv[1] / sv[0]))
    return _judge("target_rank_one", worst, 1e-10)


def check_capacity_tightness(cfg: SystemConfig, seeds: Sequence[int]) -> List[CheckResult]:
    """Closed-form receivers and weights make the WMMSE bounds equal the capacities."""
    worst_rad, worst_dr = 0.0, 0.0
    for seed in seeds:
        ch, star, w = random_point(cfg, seed)
        bf = update_beamformers(w, ch, star, cfg)
        cov = CovarianceBundle.build(w, ch, star, cfg)
        bound = eta(bf.lambda_rad, mse_rad(bf.u, w, ch, cov))
        exact = math.log1p(equivalent_sinr(w, ch, cov))
        worst_rad = max(worst_rad, abs(bound - exact) / max(1.0, abs(exact)))
        for l in range(ch.n_dr):
            bound_l = eta(bf.lambda_dr[l], mse_dr(l, bf.u_dr[l], cov, cfg))
            exact_l = math.log1p(max_uplink_sinr(l, cov, cfg))
            worst_dr = max(worst_dr, abs(bound_l - exact_l) / max(1.0, abs(exact_l)))
    return [
        _judge("sensing_bound_tight", worst_rad, 1e-8, f"{len(seeds)} instances"),
        _judge("uplink_bound_tight", worst_dr, 1e-8, f"{len(seeds)} instances"),
    ]


def _fd_gradient(f: Callable[[np.ndarray], float], u: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros(2 * u.size)
    for k in range(u.size):
        for j, step in enumerate((h, 1j * h)):
            e = np.zeros(u.size, dtype=complex)
            e[k] = step
            grad[2 * k + j] = (f(u + e) - f(u - e)) / (2.0 * h)
    return grad


def _stationarity(
    f: Callable[[np.ndarray], float], u_opt: np.ndarray, rng: np.random.Generator
) -> float:
    scale = max(float(np.linalg.norm(u_opt)), 1e-300)
    z = rng.standard_normal(u_opt.size) + 1j * rng.standard_normal(u_opt.size)
    u_rand = u_opt + scale * z / np.linalg.norm(z)
    h = 1e-4 * scale
    reference = np.linalg.norm(_fd_gradient(f, u_rand, h))
    if reference == 0.0:
        return 0.0
    return float(np.linalg.norm(_fd_gradient(f, u_opt, h)) / reference)


def check_mmse_optimality(cfg: SystemConfig, seeds: Sequence[int]) -> CheckResult:
    """Finite-difference gradients of the MSEs vanish at the MMSE receivers."""
    worst = 0.0
    for seed in seeds:
        ch, star, w = random_point(cfg, seed)
        rng = np.random.default_rng(seed)
        bf = update_beamformers(w, ch, star, cfg)
        cov = CovarianceBundle.build(w, ch, star, cfg)
        worst = max(worst, _stationarity(lambda u: mse_rad(u, w, ch, cov), bf.u, rng))
        for l in range(ch.n_dr):
            worst = max(
                worst,
                _stationarity(lambda u, l=l: mse_dr(l, u, cov, cfg), bf.u_dr[l], rng),
            )
    return _judge("mmse_stationary", worst, 1e-6, "gradient norm relative to a random receiver")


def check_covariances(cfg: SystemConfig, seeds: Sequence[int]) -> CheckResult:
    """Every covariance is Hermitian with eigenvalues at least the noise power."""
    worst = 0.0
    for seed in seeds:
        ch, star, w = random_point(cfg, seed)
        cov = CovarianceBundle.build(w, ch, star, cfg)
        mats = [cov.r_rad_noise, cov.r_equiv, cov.r_total_rx, *cov.r_interf_dr]
        for m in mats:
            asym = float(np.max(np.abs(m - m.conj().T)))
            floor = float(np.min(np.linalg.eigvalsh(m))) / cfg.noise_watt
            worst = max(worst, 1.0 - floor, asym / max(float(np.max(np.abs(m))), 1e-300))
    return _judge("covariance_floor", worst, 1e-6, "eigenvalues above the noise power")


def check_rate_round_trip(cfg: SystemConfig) -> CheckResult:
    """SINR to rate and back is the identity."""
    gammas = np.logspace(-6, 6, 61)
    rates = cfg.bandwidth_hz * rate_from_sinr(gammas, cfg)
    back = sinr_from_rate(rates, cfg.bandwidth_hz, cfg)
    return _judge("rate_round_trip", float(np.max(np.abs(back - gammas) / gammas)), 1e-10)


def check_embedding(seed: int = 0) -> CheckResult:
    """Real embedding preserves the smallest eigenvalue of a Hermitian matrix."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, 7):
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        m = 0.5 * (z + z.conj().T)
        real = HermitianEmbedding(n).embed(m)
        gap = abs(np.linalg.eigvalsh(m)[0] - np.linalg.eigvalsh(real)[0])
        worst = max(worst, gap / max(1.0, float(np.linalg.norm(m, 2))))
    return _judge("embedding_min_eig", worst, 1e-12)


def check_wmmse(cfg: SystemConfig, seeds: Sequence[int]) -> List[CheckResult]:
    """Inner trajectories are monotone and (nearly always) converge."""
    worst, converged, failed = 0.0, 0, 0
    for seed in seeds:
        _, ch, rng = draw_instance(cfg, seed)
        w0, star = initialize(cfg, ch, rng)
        try:
            state = algorithm1(w0, star, ch, cfg)
        except StarIsccError as e:
            logger.warning("WMMSE check seed %d failed: %s", seed, e)
            failed += 1
            continue
        worst = max(worst, _relative_drop(state.trajectory))
        converged += int(state.converged)
    miss = 1.0 - converged / max(len(seeds), 1)
    return [
        _judge("wmmse_monotone", worst, 1e-9, f"{len(seeds) - failed} trajectories"),
        _judge("wmmse_converges", miss, 0.05, f"{converged}/{len(seeds)} converged"),
    ]


def check_star_stage(cfg: SystemConfig, seeds: Sequence[int]) -> List[CheckResult]:
    """Rank-one residual, extraction loss and surrogate monotonicity of the STAR stage."""
    rank, loss, rise = 0.0, 0.0, 0.0
    for seed in seeds:
        _, ch, rng = draw_instance(cfg, seed)
        w0, star = initialize(cfg, ch, rng)
        try:
            state = algorithm1(w0, star, ch, cfg)
            targets = build_offload_targets(state.rates, state.bf, ch, cfg)
            v_t, v_r = lift(star)
            lifted = algorithm2(v_t, v_r, targets, cfg)
        except StarIsccError as e:
            logger.warning("STAR check seed %d failed: %s", seed, e)
            rank = math.inf
            continue
        for res, v in zip(lifted.penalty_residuals, (lifted.v_t, lifted.v_r)):
            trace = float(np.trace(v).real)
            if trace > 0:
                rank = max(rank, res / trace)
        loss = max(loss, extraction_degradation(lifted, extract_rank_one(lifted)))
        rise = max(rise, _relative_rise(lifted.trajectory))
    return [
        _judge("star_rank_one", rank, 1e-6, "penalty residual relative to trace"),
        _judge("star_extraction_loss", loss, 1e-3),
        _judge("star_surrogate_monotone", rise, 1e-9),
    ]


def check_budget_split(cfg: SystemConfig, seed: int = 0) -> CheckResult:
    """Without sensing, two DRs with slack links split the budget equally."""
    two = cfg.with_overrides(n_dr=2)
    _, ch, _ = draw_instance(two, seed)
    star = StarCoefficients.equal_split(ch.n_ris)
    w = np.zeros(ch.n_tx, dtype=complex)
    bf = update_beamformers(w, ch, star, two, include_sensing=False)
    _, r = rate_power_subproblem(
        bf.u, bf.lambda_rad, bf.u_dr, bf.lambda_dr, ch, star, two, sensing=False
    )
    expected = (two.p_bs_watt / (2.0 * two.kappa)) ** (1.0 / 3.0) / two.phi_cycles_per_bit
    return _judge("budget_split_closed_form", float(np.max(np.abs(r - expected))) / expected, 1e-4)


def check_alternation(
    cfg: SystemConfig, seeds: Sequence[int]
) -> Tuple[List[CheckResult], Optional[Tuple[SolveReport, ChannelSet]]]:
    """Outer monotonicity, power budget and sensing threshold of full solves."""
    drop, over, short, energy = 0.0, 0.0, 0.0, 0.0
    first: Optional[Tuple[SolveReport, ChannelSet]] = None
    for seed in seeds:
        _, ch, rng = draw_instance(cfg, seed)
        try:
            report = algorithm3(cfg, ch, rng)
        except StarIsccError as e:
            logger.warning("Alternation check seed %d failed: %s", seed, e)
            drop = math.inf
            continue
        first = first or (report, ch)
        drop = max(drop, _relative_drop(report.outer_trajectory))
        over = max(over, report.rates.total_power / cfg.p_bs_watt - 1.0)
        short = max(short, 1.0 - report.sensing_sinr / cfg.gamma_rad_linear)
        energy = max(energy, report.star.energy_violation())
    checks = [
        _judge("ao_monotone", drop, 1e-9, f"{len(seeds)} seeds"),
        _judge("ao_power_budget", over, 1e-6),
        _judge("ao_sensing_threshold", short, 1e-6),
        _judge("ao_energy_conservation", energy, ENERGY_TOL),
    ]
    return checks, first


def check_beampattern(report: SolveReport, ch: ChannelSet) -> List[CheckResult]:
    """Beam points at the target and nulls the interferers."""
    grid = angle_grid_deg(1.0)
    interf = np.asarray(ch.thetas_interf, dtype=float)
    # interferer gains are taken at the exact angles, normalized with the grid
    gains = beampattern(report.bf.u, report.bf.w, np.concatenate([np.deg2rad(grid), interf]))
    grid_gains = gains[: grid.size]
    peak_error = abs(float(grid[int(np.argmax(grid_gains))]) - math.degrees(ch.theta_target))
    nulls = [linear_to_db(max(float(g), 1e-30)) for g in gains[grid.size:]]
    return [
        _judge("beampattern_peak", peak_error, 1.0, "degrees from the target"),
        _judge(
            "beampattern_nulls", max(nulls, default=-math.inf), -20.0, "dB at interferers",
            soft=True,
        ),
    ]


def tiny_instance(
    cfg: SystemConfig, seed: int
) -> Tuple[SystemConfig, ChannelSet, np.random.Generator]:
    """Two antennas, two elements, one interferer and a single DR."""
    tiny = cfg.with_overrides(n_tx=2, n_rx=2, n_ris=2, n_dr=2, n_interferer=1)
    _, ch, rng = draw_instance(tiny, seed)
    ch = dataclasses.replace(ch, h_ris_dr=ch.h_ris_dr[:1], side=ch.side[:1])
    return tiny, ch, rng


def _min_sensing_power(
    a: float, c: float, d: float, sigma2: float, gamma: float
) -> Optional[float]:
    """Smallest power reaching the sensing threshold along a fixed direction."""
    q2 = a * d - c
    q1 = sigma2 * (a - gamma * d)
    q0 = -gamma * sigma2 ** 2
    if q2 <= 1e-12 * a * d:
        return -q0 / q1 if q1 > 0 else None
    disc = math.sqrt(q1 * q1 - 4.0 * q2 * q0)
    if q1 > 0:
        return 2.0 * (-q0) / (q1 + disc)
    return (-q1 + disc) / (2.0 * q2)


def grid_search_oracle(
    ch: ChannelSet, cfg: SystemConfig, points: int = 36, refine: int = ORACLE_REFINE
) -> float:
    """Best sum rate over beam directions and STAR relative phases.

    Along each direction the least power meeting the sensing threshold is
    used; the DR rate is the smaller of what the remaining power computes
    and what its MMSE link carries. The ``refine`` best grid cells are
    polished with Nelder-Mead over the continuous angles.
    """
    if ch.n_tx != 2 or ch.n_ris != 2 or ch.n_dr != 1:
        raise ValueError("Grid oracle covers the two-antenna, two-element, one-DR case only")
    sigma2, gamma = cfg.noise_watt, cfg.gamma_rad_linear
    side = ch.side[0]
    full, empty = np.ones(2), np.zeros(2)

    def uplink(deltas: np.ndarray) -> np.ndarray:
        return np.array([
            effective_uplink_channel(
                ch,
                StarCoefficients(
                    amp_t=full if side is Side.TRANSMISSION else empty,
                    amp_r=empty if side is Side.TRANSMISSION else full,
                    phase_t=[0.0, delta], phase_r=[0.0, delta],
                ),
                0,
            )
            for delta in deltas
        ])

    def rates(chi: float, psi: float, g: np.ndarray) -> np.ndarray:
        w_hat = np.array([math.cos(chi), math.sin(chi) * np.exp(1j * psi)])
        a = ch.a_target @ w_hat
        c = ch.a_interf @ w_hat
        p = _min_sensing_power(
            float(np.vdot(a, a).real), abs(np.vdot(c, a)) ** 2, float(np.vdot(c, c).real),
            sigma2, gamma,
        )
        if p is None or p > cfg.p_bs_watt:
            return np.zeros(len(g))
        r_power = ((cfg.p_bs_watt - p) / cfg.kappa) ** (1.0 / 3.0) / cfg.phi_cycles_per_bit
        m = ch.a_total @ w_hat
        leak = np.abs(g @ m.conj()) ** 2
        m_norm = float(np.vdot(m, m).real)
        g_norm = np.sum(np.abs(g) ** 2, axis=1)
        sinr = cfg.p_dr_watt / sigma2 * (g_norm - p * leak / (sigma2 + p * m_norm))
        capacity = cfg.bandwidth_hz * rate_from_sinr(np.clip(sinr, 0.0, None), cfg)
        return np.minimum(r_power, capacity)

    deltas = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    g = uplink(deltas)
    cells: List[Tuple[float, float, float, float]] = []
    for chi in np.linspace(0.0, math.pi / 2, points + 1):
        for psi in np.linspace(0.0, 2.0 * math.pi, points, endpoint=False):
            values = rates(chi, psi, g)
            k = int(np.argmax(values))
            cells.append((float(values[k]), chi, psi, deltas[k]))
    cells.sort(key=lambda cell: cell[0], reverse=True)
    best = cells[0][0]

    def negative_rate(x: np.ndarray) -> float:
        return -float(rates(x[0], x[1], uplink(x[2:3]))[0])

    for value, chi, psi, delta in cells[:refine]:
        if value <= 0.0:
            break
        res = scipy.optimize.minimize(
            negative_rate, np.array([chi, psi, delta]), method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12 * value, "maxiter": 2000},
        )
        best = max(best, -float(res.fun))
    logger.debug("Grid oracle: %.6e bps after refining %d cells", best, min(refine, len(cells)))
    return best


def check_oracle(
    cfg: SystemConfig, seeds: Sequence[int], points: int = 36
) -> Tuple[List[CheckResult], List[OracleGap]]:
    """AO never beats the oracle optimum and usually comes close to it."""
    gaps: List[OracleGap] = []
    excess = 0.0
    for seed in seeds:
        tiny, ch, rng = tiny_instance(cfg, seed)
        oracle = grid_search_oracle(ch, tiny, points)
        try:
            ao = algorithm3(tiny, ch, rng).sum_rate
        except StarIsccError as e:
            logger.warning("Oracle seed %d: AO failed: %s", seed, e)
            ao = 0.0
        gaps.append(OracleGap(seed, ao, oracle))
        excess = max(excess, ao - (oracle + ORACLE_SLACK_BPS))
    close = sum(1 for g in gaps if g.ao_bps >= 0.9 * g.oracle_bps)
    checks = [
        _judge("oracle_upper_bound", excess, 0.0, "bps by which AO exceeds the oracle"),
        _judge(
            "oracle_quality", 1.0 - close / max(len(gaps), 1), 0.2,
            f"{close}/{len(gaps)} seeds within 90% of the grid optimum", soft=True,
        ),
    ]
    return checks, gaps


def run_validate(cfg: SystemConfig, plan: Optional[ValidationPlan] = None) -> ValidationReport:
    """Run every check at the scale of ``cfg``.

    Args:
        cfg: Configuration the checks draw instances from
        plan: Instance counts; the full plan when None

    Returns:
        ValidationReport (``passed`` is False when any hard check failed)
    """
    plan = plan or ValidationPlan()
    started = time.perf_counter()
    base = cfg.rng_seed
    report = ValidationReport()

    def seeds(count: int) -> List[int]:
        return [base + k for k in range(count)]

    def guarded(name: str, func: Callable[[], Any]) -> Any:
        try:
            return func()
        except StarIsccError as e:
            logger.warning("Check %s raised %s", name, e)
            report.checks.append(CheckResult(name, ValidationStatus.FAIL, math.nan, 0.0, str(e)))
            return None

    report.checks.append(check_steering_norm())
    report.checks.append(check_embedding(base))
    report.checks.append(check_rate_round_trip(cfg))
    tight = seeds(plan.tightness_instances)
    for name, func in (
        ("target_rank_one", lambda: [check_target_rank(cfg, tight)]),
        ("capacity_tightness", lambda: check_capacity_tightness(cfg, tight)),
        ("mmse_stationary", lambda: [check_mmse_optimality(cfg, tight)]),
        ("covariance_floor", lambda: [check_covariances(cfg, tight)]),
        ("budget_split_closed_form", lambda: [check_budget_split(cfg, base)]),
        ("wmmse", lambda: check_wmmse(cfg, seeds(plan.wmmse_instances))),
        ("star_stage", lambda: check_star_stage(cfg, seeds(plan.star_instances))),
    ):
        results = guarded(name, func)
        if results:
            report.checks.extend(results)

    outcome = guarded("alternation", lambda: check_alternation(cfg, seeds(plan.ao_seeds)))
    if outcome:
        checks, first = outcome
        report.checks.extend(checks)
        if first is not None:
            solved, ch = first
            report.checks.append(check_energy_conservation(solved.star))
            beam = guarded("beampattern", lambda: check_beampattern(solved, ch))
            if beam:
                report.checks.extend(beam)

    oracle = guarded(
        "oracle", lambda: check_oracle(cfg, seeds(plan.oracle_seeds), plan.oracle_grid)
    )
    if oracle:
        checks, gaps = oracle
        report.checks.extend(checks)
        report.oracle = gaps

    report.elapsed_s = time.perf_counter() - started
    logger.info(
        "Validation finished in %.1f s: %d checks, %d failed",
        report.elapsed_s, len(report.checks), len(report.failures),
    )
    return report
