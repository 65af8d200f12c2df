"""Monte Carlo experiments: convergence curves, parameter sweeps, beampatterns.

Every draw builds its generator from ``seed + draw`` and consumes it in the
same order (geometry, channels, initial phases), so all schemes at a sweep
point see the same realization. Rows are sorted by ``(scheme, value, draw)``
before writing, which keeps the CSV independent of the worker count.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from star_iscc.config import (
    SCHEME_NAMES,
    BeampatternSpec,
    ConvergenceSpec,
    SweepSpec,
    SystemConfig,
    linear_to_db,
    watt_to_dbm,
)
from star_iscc.errors import StarIsccError
from star_iscc.model.channels import draw_instance
from star_iscc.model.metrics import beampattern
from star_iscc.solver.ao import SolveReport
from star_iscc.solver.baselines import SchemeKind, solve_scheme
from star_iscc.utils.display import csv_text

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class ResultRow:
    """One (scheme, value, draw) outcome of a sweep."""

    scheme: str
    parameter: str
    value: float
    draw: int
    sum_rate_bps: float
    sensing_sinr_db: float
    iterations: int
    wall_time_s: float
    termination: str


@dataclass(frozen=True)
class SweepSummary:
    """Mean and standard error of the sum rate at one sweep point."""

    scheme: str
    value: float
    mean_bps: float
    stderr_bps: float
    draws: int
    failures: int


@dataclass(frozen=True)
class ConvergenceRow:
    """Outer-iteration sum rate of one draw."""

    n_dr: int
    p_dr_dbm: float
    draw: int
    iteration: int
    sum_rate_bps: float


@dataclass(frozen=True)
class BeampatternRow:
    """Normalized gain at one angle."""

    n_antennas: int
    angle_deg: float
    gain: float
    gain_db: float
    marker: str


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(csv_text(header, rows))
    return path


def _map(func: Callable[[T], R], items: List[T], workers: int) -> List[R]:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _scheme_order(scheme: str) -> int:
    return SCHEME_NAMES.index(scheme) if scheme in SCHEME_NAMES else len(SCHEME_NAMES)


def solve_draw(cfg: SystemConfig, scheme: SchemeKind, seed: int) -> SolveReport:
    """Solve one scheme on the realization drawn from ``seed``."""
    _, ch, rng = draw_instance(cfg, seed)
    return solve_scheme(scheme, cfg, ch, rng)


def _sweep_task(task: Tuple[SystemConfig, str, str, float, int, int]) -> ResultRow:
    cfg, scheme, parameter, value, draw, seed = task
    started = time.perf_counter()
    try:
        report = solve_draw(cfg, SchemeKind(scheme), seed + draw)
    except StarIsccError as e:
        logger.warning("%s at %s=%s draw %d failed: %s", scheme, parameter, value, draw, e)
        return ResultRow(
            scheme, parameter, value, draw, 0.0, float("nan"), 0,
            time.perf_counter() - started, f"error:{type(e).__name__}",
        )
    sinr_db = linear_to_db(report.sensing_sinr) if report.sensing_sinr > 0 else float("nan")
    return ResultRow(
        scheme, parameter, value, draw, report.sum_rate, sinr_db, report.iterations,
        time.perf_counter() - started, report.termination.value,
    )


def run_sweep(spec: SweepSpec, cfg: SystemConfig, workers: int = 1) -> List[ResultRow]:
    """Evaluate every (scheme, value, draw) of a sweep.

    Args:
        spec: Sweep description
        cfg: Base configuration
        workers: Parallel processes (1 runs sequentially)

    Returns:
        Rows sorted by scheme, value and draw
    """
    seed = cfg.rng_seed if spec.seed is None else spec.seed
    values = spec.values if spec.parameter != "none" else [0.0]
    tasks = []
    for value in values:
        point_cfg = spec.apply(cfg, value)
        for scheme in spec.schemes:
            for draw in range(spec.draws):
                tasks.append((point_cfg, scheme, spec.parameter, float(value), draw, seed))
    logger.info("Sweep over %s: %d solves on %d worker(s)", spec.parameter, len(tasks), workers)
    rows = _map(_sweep_task, tasks, workers)
    return sorted(rows, key=lambda r: (_scheme_order(r.scheme), r.value, r.draw))


def summarize_sweep(rows: Sequence[ResultRow]) -> List[SweepSummary]:
    """Mean and standard error per (scheme, value), failed draws excluded."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.scheme, row.value), []).append(row)
    summaries = []
    ordered = sorted(groups.items(), key=lambda kv: (_scheme_order(kv[0][0]), kv[0][1]))
    for (scheme, value), group in ordered:
        ok = np.array([r.sum_rate_bps for r in group if not r.termination.startswith("error")])
        mean = float(np.mean(ok)) if ok.size else float("nan")
        stderr = float(np.std(ok, ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
        failures = len(group) - ok.size
        summaries.append(SweepSummary(scheme, value, mean, stderr, len(group), failures))
    return summaries


def write_sweep_csv(rows: Sequence[ResultRow], path: Path, include_timings: bool = False) -> Path:
    """Write sweep rows; wall time only when requested."""
    header = [f for f in ResultRow.__dataclass_fields__ if include_timings or f != "wall_time_s"]
    return _write_csv(path, header, ([asdict(r)[f] for f in header] for r in rows))


def _convergence_task(task: Tuple[SystemConfig, int, float, int, int]) -> List[ConvergenceRow]:
    cfg, n_dr, p_dr_dbm, draw, seed = task
    try:
        report = solve_draw(cfg, SchemeKind.PROPOSED_STAR, seed + draw)
    except StarIsccError as e:
        logger.warning("Convergence run L=%d P_u=%s draw %d failed: %s", n_dr, p_dr_dbm, draw, e)
        return []
    trajectory = list(report.outer_trajectory)
    # flat after termination
    trajectory += [trajectory[-1]] * (cfg.ao_max_iter - len(trajectory))
    return [ConvergenceRow(n_dr, p_dr_dbm, draw, i + 1, v) for i, v in enumerate(trajectory)]


def run_convergence(
    cfg: SystemConfig, spec: Optional[ConvergenceSpec] = None, workers: int = 1
) -> List[ConvergenceRow]:
    """Outer trajectories for every configured (L, P_u) pair and draw."""
    spec = spec or ConvergenceSpec()
    tasks = []
    for n_dr in spec.n_dr_values:
        for p_dr_dbm in spec.p_dr_dbm_values:
            pair_cfg = cfg.with_overrides(n_dr=n_dr, p_dr_dbm=p_dr_dbm)
            for draw in range(spec.draws):
                tasks.append((pair_cfg, n_dr, float(p_dr_dbm), draw, cfg.rng_seed))
    rows = [row for chunk in _map(_convergence_task, tasks, workers) for row in chunk]
    return sorted(rows, key=lambda r: (r.n_dr, r.p_dr_dbm, r.draw, r.iteration))


def write_convergence_csv(rows: Sequence[ConvergenceRow], path: Path) -> Path:
    """Write convergence rows."""
    header = list(ConvergenceRow.__dataclass_fields__)
    return _write_csv(path, header, ([asdict(r)[f] for f in header] for r in rows))


def angle_grid_deg(step_deg: float = 1.0) -> np.ndarray:
    """Grid over the open interval (-90°, 90°)."""
    count = int(math.floor(90.0 / step_deg))
    if count * step_deg >= 90.0:
        count -= 1
    return step_deg * np.arange(-count, count + 1)


def run_beampattern(
    cfg: SystemConfig, spec: Optional[BeampatternSpec] = None
) -> List[BeampatternRow]:
    """Solve one instance per antenna count and sample its sensing beampattern."""
    spec = spec or BeampatternSpec()
    counts = spec.antenna_counts or [cfg.n_tx]
    grid = angle_grid_deg(spec.grid_step_deg)
    rows: List[BeampatternRow] = []
    for n_antennas in counts:
        ant_cfg = cfg.with_overrides(n_tx=n_antennas, n_rx=n_antennas)
        _, ch, rng = draw_instance(ant_cfg, ant_cfg.rng_seed)
        report = solve_scheme(SchemeKind.PROPOSED_STAR, ant_cfg, ch, rng)
        gains = beampattern(report.bf.u, report.bf.w, np.deg2rad(grid))

        markers = [""] * grid.size
        for theta in ch.thetas_interf:
            markers[int(np.argmin(np.abs(grid - np.rad2deg(theta))))] = "interferer"
        markers[int(np.argmin(np.abs(grid - np.rad2deg(ch.theta_target))))] = "target"
        for angle, gain, marker in zip(grid, gains, markers):
            rows.append(BeampatternRow(
                n_antennas, float(angle), float(gain), linear_to_db(max(float(gain), 1e-30)), marker
            ))
        logger.info(
            "Beampattern for %d antennas: sensing power %.2f dBm",
            n_antennas, watt_to_dbm(max(report.rates.p_sense, 1e-30)),
        )
    return rows


def write_beampattern_csv(rows: Sequence[BeampatternRow], path: Path) -> Path:
    """Write beampattern rows."""
    header = list(BeampatternRow.__dataclass_fields__)
    return _write_csv(path, header, ([asdict(r)[f] for f in header] for r in rows))
