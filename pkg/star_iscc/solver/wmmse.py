"""WMMSE inner solver for the sensing beamformer and compute rates.

Each pass fixes the MMSE receivers and weights at the current beamformer and
solves a conic program over ``(w, r)``. With receivers and weights fixed the
sensing and link capacities are concave quadratics in ``w``, so the program is
exact and every pass keeps the previous point feasible.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from star_iscc.config import SystemConfig
from star_iscc.errors import InfeasibleSensing, NumericalError
from star_iscc.model.core import (
    BeamformerSet,
    ChannelSet,
    RateAllocation,
    StarCoefficients,
    effective_uplink_channels,
)
from star_iscc.model.metrics import CovarianceBundle, mse_dr, mse_rad
from star_iscc.solver.conic import Cone, ConicProblem, ConicStatus, cubic_power_constraint, solve

logger = logging.getLogger(__name__)

CAPACITY_SLACK = 1e-9


@dataclass
class WmmseState:
    """Outcome of one inner WMMSE run."""

    bf: BeamformerSet
    rates: RateAllocation
    trajectory: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def relative_increase(previous: float, current: float) -> float:
    """``(current - previous) / previous``; zero when both are (near) zero."""
    scale = max(abs(previous), abs(current))
    if scale <= 1e-300:
        return 0.0
    return (current - previous) / max(abs(previous), 1e-300)


def _solve_hermitian(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.solve(matrix, rhs, assume_a="her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NumericalError(f"Covariance matrix is singular: {e}") from e


def mmse_receivers(
    w: np.ndarray,
    ch: ChannelSet,
    star: StarCoefficients,
    cfg: SystemConfig,
    cov: Optional[CovarianceBundle] = None,
    include_sensing: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    """MMSE receivers ``u = R_1^{-1} A_0 w`` and ``u_l = √P_u R_2^{-1} g_l``.

    Returns:
        ``(u, u_dr)`` with ``u_dr`` stacked as rows (L x Nr)
    """
    w = np.asarray(w, dtype=complex)
    if cov is None:
        cov = CovarianceBundle.build(w, ch, star, cfg, include_sensing)
    u = _solve_hermitian(cov.r_equiv, ch.a_target @ w)
    if ch.n_dr:
        u_dr = math.sqrt(cfg.p_dr_watt) * _solve_hermitian(cov.r_total_rx, cov.g.T).T
    else:
        u_dr = np.zeros((0, ch.n_rx), dtype=complex)
    return u, u_dr


def auxiliary_weights(e_rad: float, e_dr: Sequence[float]) -> Tuple[float, np.ndarray]:
    """WMMSE weights, the reciprocals of the MSEs.

    Raises:
        NumericalError: If any MSE is not positive
    """
    e_all = np.concatenate([[e_rad], np.asarray(e_dr, dtype=float)])
    if np.any(e_all <= 0.0) or not np.all(np.isfinite(e_all)):
        raise NumericalError(f"MSE must be positive, got {e_all}")
    return float(1.0 / e_rad), 1.0 / np.asarray(e_dr, dtype=float)


def update_beamformers(
    w: np.ndarray,
    ch: ChannelSet,
    star: StarCoefficients,
    cfg: SystemConfig,
    include_sensing: bool = True,
) -> BeamformerSet:
    """Receivers and weights that are optimal for the given ``w``."""
    w = np.asarray(w, dtype=complex)
    cov = CovarianceBundle.build(w, ch, star, cfg, include_sensing)
    u, u_dr = mmse_receivers(w, ch, star, cfg, cov, include_sensing)
    e_rad = mse_rad(u, w, ch, cov)
    e_dr = [mse_dr(l, u_dr[l], cov, cfg) for l in range(ch.n_dr)]
    lam, lam_dr = auxiliary_weights(e_rad, e_dr)
    return BeamformerSet(w=w, u=u, u_dr=u_dr, lambda_rad=lam, lambda_dr=lam_dr)


def sensing_power_floor(ch: ChannelSet, cfg: SystemConfig) -> float:
    """Sensing power below which the threshold is unreachable, ``σ²Γ_rad/|α_0|²``."""
    gain = abs(ch.alpha_target) ** 2
    if gain == 0.0:
        return math.inf
    return cfg.noise_watt * cfg.gamma_rad_linear / gain


def _conj_dot_rows(a: np.ndarray) -> np.ndarray:
    """Rows mapping ``[Re w, Im w]`` to ``[Re a^H w, Im a^H w]``."""
    a = np.asarray(a, dtype=complex)
    return np.vstack([np.concatenate([a.real, a.imag]), np.concatenate([-a.imag, a.real])])


def default_w_init(ch: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """``√(0.9 P_b)`` times the dominant right singular vector of ``A_0``."""
    _, _, vh = np.linalg.svd(ch.a_target)
    return math.sqrt(cfg.w_init_fraction * cfg.p_bs_watt) * vh[0].conj()


def rate_power_subproblem(
    u: np.ndarray,
    lambda_rad: float,
    u_dr: np.ndarray,
    lambda_dr: Sequence[float],
    ch: ChannelSet,
    star: StarCoefficients,
    cfg: SystemConfig,
    sensing: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    """Maximize the sum compute rate for fixed receivers and weights.

    Rates are scaled by ``r_max = (P_b/κ)^{1/3}/φ`` and the beamformer by
    ``√P_b`` so the budget row reads ``‖w̃‖² + Σ x_l³ ≤ 1``.

    Args:
        u: Sensing receiver
        lambda_rad: Sensing weight
        u_dr: DR receivers (L x Nr)
        lambda_dr: DR weights
        ch: Channel realization
        star: STAR coefficients
        cfg: System configuration
        sensing: Keep the sensing constraint and beamformer; when False ``w = 0``

    Returns:
        ``(w, r_dr)`` with rates in bit/s (nats/s when ``rate_log_base = "e"``)

    Raises:
        InfeasibleSensing: If no beamformer meets the sensing bound
        NumericalError: If the conic solve fails
    """
    n_dr, nt = ch.n_dr, ch.n_tx
    p_b = cfg.p_bs_watt
    r_max = cfg.rate_max_bps
    k = r_max * math.log(cfg.log_base) / cfg.bandwidth_hz
    g = effective_uplink_channels(ch, star)
    lambda_dr = np.asarray(lambda_dr, dtype=float)

    prob = ConicProblem("rate_power")
    if n_dr:
        prob.add_variable("x", n_dr, scale=r_max)
        prob.add_variable("s", n_dr)
    if sensing:
        prob.add_variable("w", 2 * nt, scale=math.sqrt(p_b))
        prob.add_variable("q", 1)

    for l in range(n_dr):
        prob.add_rows(cubic_power_constraint(("x", l), ("s", l), 1.0))

    budget_terms = {}
    if n_dr:
        budget_terms["s"] = -np.ones((1, n_dr))
    if sensing:
        budget_terms["q"] = -np.ones((1, 1))
    prob.add_constraint(budget_terms, [1.0], Cone.nonnegative(1), "budget")

    if sensing:
        # ‖w̃‖² ≤ q  <=>  ‖(2w̃, q-1)‖ ≤ q+1
        q_col = np.zeros((2 * nt + 2, 1))
        q_col[0, 0] = q_col[-1, 0] = 1.0
        w_rows = np.zeros((2 * nt + 2, 2 * nt))
        w_rows[1:-1] = 2.0 * np.eye(2 * nt)
        offset = np.zeros(2 * nt + 2)
        offset[0], offset[-1] = 1.0, -1.0
        prob.add_constraint(
            {"q": q_col, "w": w_rows}, offset, Cone.second_order(2 * nt + 2), "power"
        )

    for l in range(n_dr):
        u_l = u_dr[l]
        lam = float(lambda_dr[l])
        gains = np.abs(g.conj() @ u_l) ** 2
        const = (
            cfg.p_dr_watt * np.sum(gains)
            + cfg.noise_watt * np.vdot(u_l, u_l).real
            - 2.0 * math.sqrt(cfg.p_dr_watt) * np.vdot(u_l, g[l]).real
            + 1.0
        )
        c_l = math.log(lam) - lam * const + 1.0
        if c_l < -CAPACITY_SLACK:
            logger.debug("DR %d capacity bound %.3e below zero; clamping", l, c_l)
        c_l = max(c_l, 0.0)
        x_col = np.zeros((4 if sensing else 1, n_dr))
        if not sensing:
            x_col[0, l] = -k
            prob.add_constraint({"x": x_col}, [c_l], Cone.nonnegative(1), f"capacity[{l}]")
            continue
        # λ_l P_b |a_l^H w̃|² ≤ c_l - k x_l
        a_l = ch.a_total.conj().T @ u_l
        z_rows = 2.0 * math.sqrt(lam * p_b) * _conj_dot_rows(a_l)
        x_col[0, l] = x_col[3, l] = -k
        w_rows = np.zeros((4, 2 * nt))
        w_rows[1:3] = z_rows
        prob.add_constraint(
            {"x": x_col, "w": w_rows}, [c_l + 1.0, 0.0, 0.0, c_l - 1.0], Cone.second_order(4),
            f"capacity[{l}]",
        )

    if sensing:
        u = np.asarray(u, dtype=complex)
        bound = (
            math.log(lambda_rad) + 1.0
            - lambda_rad * cfg.noise_watt * np.vdot(u, u).real
            - cfg.rate_rad_nats
        )
        if bound < -CAPACITY_SLACK:
            raise InfeasibleSensing(
                "Sensing threshold unreachable with current receiver",
                sensing_power_floor(ch, cfg), p_b,
            )
        root = math.sqrt(max(bound, 0.0))
        scale = math.sqrt(lambda_rad)
        rows = np.zeros((5, 2 * nt))
        rows[1:3] = scale * math.sqrt(p_b) * _conj_dot_rows(ch.a_target.conj().T @ u)
        rows[3:5] = scale * math.sqrt(p_b) * _conj_dot_rows(ch.a_interf.conj().T @ u)
        prob.add_constraint(
            {"w": rows}, [root, -scale, 0.0, 0.0, 0.0], Cone.second_order(5), "sensing"
        )

    if n_dr:
        prob.set_objective({"x": -np.ones(n_dr)})
    else:
        prob.set_objective({"q": np.ones(1)})

    sol = solve(prob)
    if sol.status is ConicStatus.INFEASIBLE:
        if sensing:
            raise InfeasibleSensing(
                "Rate/power program infeasible", sensing_power_floor(ch, cfg), p_b
            )
        raise NumericalError("Offloading-only rate program reported infeasible")
    if not sol.usable():
        raise NumericalError(f"Rate/power program ended with status {sol.status.value}")

    x = np.clip(prob.value(sol.x, "x"), 0.0, None) if n_dr else np.zeros(0)
    if sensing:
        wv = prob.value(sol.x, "w")
        w_tilde = wv[:nt] + 1j * wv[nt:]
    else:
        w_tilde = np.zeros(nt, dtype=complex)

    # absorb solver round-off in the budget by trimming rates
    spent = float(np.vdot(w_tilde, w_tilde).real)
    cubes = float(np.sum(x ** 3))
    if spent + cubes > 1.0 and cubes > 0.0:
        x = x * (max(1.0 - spent, 0.0) / cubes) ** (1.0 / 3.0)
    return math.sqrt(p_b) * w_tilde, r_max * x


def algorithm1(
    w_init: np.ndarray,
    star: StarCoefficients,
    ch: ChannelSet,
    cfg: SystemConfig,
    sensing: bool = True,
) -> WmmseState:
    """Alternate receiver/weight updates with the rate/power program.

    Stops when the relative sum-rate increase drops below ``cfg.wmmse_tol``,
    after ``cfg.wmmse_max_iter`` solves, or when a solve fails to improve
    (the incumbent is kept).

    Args:
        w_init: Starting beamformer with ``‖w‖² ≤ P_b``
        star: Fixed STAR coefficients
        ch: Channel realization
        cfg: System configuration
        sensing: False runs the offloading-only variant with ``w = 0``

    Returns:
        WmmseState with receivers recomputed at the final beamformer
    """
    nt = ch.n_tx
    w = np.asarray(w_init, dtype=complex) if sensing else np.zeros(nt, dtype=complex)
    degenerate = ch.n_dr == 0 or not np.any(effective_uplink_channels(ch, star))

    trajectory: List[float] = []
    rates: Optional[RateAllocation] = None
    converged = False
    for it in range(cfg.wmmse_max_iter):
        bf = update_beamformers(w, ch, star, cfg, include_sensing=sensing)
        w_new, r_new = rate_power_subproblem(
            bf.u, bf.lambda_rad, bf.u_dr, bf.lambda_dr, ch, star, cfg, sensing
        )
        value = float(np.sum(r_new))
        if trajectory and value < trajectory[-1]:
            logger.debug("WMMSE pass %d did not improve (%.6e < %.6e)", it, value, trajectory[-1])
            converged = True
            break
        w = w_new
        rates = RateAllocation.from_rates(r_new, w, cfg)
        trajectory.append(value)
        if degenerate:
            converged = True
            break
        if len(trajectory) >= 2 and relative_increase(trajectory[-2], value) < cfg.wmmse_tol:
            converged = True
            break

    assert rates is not None
    logger.debug("WMMSE finished after %d passes, sum rate %.6e", len(trajectory), trajectory[-1])
    return WmmseState(
        bf=update_beamformers(w, ch, star, cfg, include_sensing=sensing),
        rates=rates,
        trajectory=trajectory,
        iterations=len(trajectory),
        converged=converged,
    )
