"""STAR coefficient design through lifted matrices and a rank-one penalty.

The coefficient vectors of both sides are lifted to ``V_i = v_i v_i^H``. The
uplink SINR targets become linear trace rows in ``V_i``; rank one is pushed by
the penalty ``ρ(‖V‖_* - ‖V‖_2)`` whose concave part is linearized at the
previous iterate, giving one SDP per iteration.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from star_iscc.config import SystemConfig
from star_iscc.errors import ExtractionLoss, NumericalError, RankNotConverged, StarInfeasible
from star_iscc.model.core import BeamformerSet, ChannelSet, RateAllocation, Side, StarCoefficients
from star_iscc.model.metrics import sinr_from_rate
from star_iscc.solver.conic import Cone, ConicProblem, ConicStatus, HermitianEmbedding, solve

logger = logging.getLogger(__name__)

TARGET_CUSHION = 1e-6
EXTRACTION_LOSS_TOL = 1e-3
EIG_TIE_TOL = 1e-9
# smallest objective decrease (relative to ρ·N) an SCA candidate must achieve
ACCEPT_TOL = 1e-7
SIDES = (Side.TRANSMISSION, Side.REFLECTION)


@dataclass(frozen=True)
class DiagTemplate:
    """Diagonal constraints on the lifted matrices.

    Without fixed diagonals the rows ``diag(V_t + V_r) = 1`` apply. With fixed
    diagonals each side's diagonal is pinned and the side is restricted to the
    elements with a nonzero pinned value.
    """

    name: str
    n: int
    fixed_t: Optional[np.ndarray] = None
    fixed_r: Optional[np.ndarray] = None

    def fixed(self, side: Side) -> Optional[np.ndarray]:
        return self.fixed_t if side is Side.TRANSMISSION else self.fixed_r

    def support(self, side: Side) -> np.ndarray:
        """Element indices a side may use."""
        fixed = self.fixed(side)
        if fixed is None:
            return np.arange(self.n)
        return np.flatnonzero(np.asarray(fixed) > 0)

    @property
    def has_fixed_amplitudes(self) -> bool:
        return self.fixed_t is not None and self.fixed_r is not None

    @classmethod
    def star(cls, n: int) -> "DiagTemplate":
        """Free energy split per element."""
        return cls("star", n)


@dataclass(frozen=True)
class OffloadTargets:
    """Trace-form uplink SINR constraints.

    Attributes:
        gamma_dr: SINR target per DR
        noise_terms: Sensing leakage plus noise ``N_l`` per DR (watt)
        b_matrices: ``B_l^i`` indexed ``[l, i]`` (L x L x N x N)
        side: Side of each DR
    """

    gamma_dr: np.ndarray
    noise_terms: np.ndarray
    b_matrices: np.ndarray
    side: Tuple[Side, ...]

    @property
    def n_dr(self) -> int:
        return int(self.gamma_dr.size)


@dataclass
class LiftedStar:
    """Lifted STAR matrices returned by :func:`algorithm2`."""

    v_t: np.ndarray
    v_r: np.ndarray
    penalty_residuals: Tuple[float, float]
    trajectory: List[float] = field(default_factory=list)
    penalty_trajectory: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    rank_converged: bool = True
    template: Optional[DiagTemplate] = None
    targets: Optional[OffloadTargets] = None

    def matrix(self, side: Side) -> np.ndarray:
        return self.v_t if side is Side.TRANSMISSION else self.v_r


@dataclass(frozen=True)
class SurrogateFunctional:
    """Affine majorant ``-λ_max(V^n) - tr(b b^H (V - V^n))`` of ``-‖V‖_2``."""

    direction: np.ndarray
    anchor_value: float
    anchor_projection: float
    side: Optional[Side] = None

    def __call__(self, v: np.ndarray) -> float:
        b = self.direction
        return float(-self.anchor_value - (np.vdot(b, v @ b).real - self.anchor_projection))

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Matrix ``C`` of the linear part, value = ``tr(C V)`` + constant."""
        return -np.outer(self.direction, self.direction.conj())


def dominant_eigenvector(v: np.ndarray) -> Tuple[float, np.ndarray]:
    """Largest eigenvalue and a deterministic unit eigenvector.

    Among (numerically) tied top eigenvalues the first one in ``eigh`` order
    is taken; the phase is fixed so the first significant entry is real
    positive.
    """
    v = 0.5 * (v + v.conj().T)
    vals, vecs = np.linalg.eigh(v)
    top = vals[-1]
    tied = np.flatnonzero(vals >= top - EIG_TIE_TOL * max(1.0, abs(top)))
    b = vecs[:, tied[0]]
    significant = np.flatnonzero(np.abs(b) > 1e-12)
    if significant.size:
        b = b * np.exp(-1j * np.angle(b[significant[0]]))
    return float(top), b


def penalty_residual(v: np.ndarray) -> float:
    """Nuclear minus spectral norm; zero exactly for rank at most one."""
    vals = np.abs(np.linalg.eigvalsh(0.5 * (v + v.conj().T)))
    if vals.size == 0:
        return 0.0
    return float(max(0.0, np.sum(vals) - np.max(vals)))


def sca_surrogate(v_prev: np.ndarray, side: Optional[Side] = None) -> SurrogateFunctional:
    """Linearize ``-‖V‖_2`` at ``v_prev``."""
    top, b = dominant_eigenvector(np.asarray(v_prev, dtype=complex))
    projection = float(np.vdot(b, v_prev @ b).real)
    return SurrogateFunctional(
        direction=b, anchor_value=top, anchor_projection=projection, side=side
    )


def lift(star: StarCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Rank-one lifted matrices ``(V_t, V_r)`` of STAR coefficients."""
    v_t = star.coefficient_vector(Side.TRANSMISSION)
    v_r = star.coefficient_vector(Side.REFLECTION)
    return np.outer(v_t, v_t.conj()), np.outer(v_r, v_r.conj())


def build_offload_targets(
    rates: RateAllocation,
    bf: BeamformerSet,
    ch: ChannelSet,
    cfg: SystemConfig,
    include_sensing: bool = True,
) -> OffloadTargets:
    """SINR targets and ``B_l^i`` matrices for the current rates and receivers."""
    n_dr, n = ch.n_dr, ch.n_ris
    gamma = np.asarray(sinr_from_rate(rates.r_dr, cfg.bandwidth_hz, cfg), dtype=float).reshape(n_dr)
    b = np.zeros((n_dr, n_dr, n, n), dtype=complex)
    noise = np.zeros(n_dr)
    for l in range(n_dr):
        u_l = bf.u_dr[l]
        hu = ch.h_bs_ris @ u_l
        for i in range(n_dr):
            c = ch.h_ris_dr[i].conj() * hu
            b[l, i] = cfg.p_dr_watt * np.outer(c, c.conj())
        leak = abs(np.vdot(u_l, ch.a_total @ bf.w)) ** 2 if include_sensing else 0.0
        noise[l] = leak + cfg.noise_watt * np.vdot(u_l, u_l).real
    return OffloadTargets(gamma_dr=gamma, noise_terms=noise, b_matrices=b, side=tuple(ch.side))


def trace_sinr(targets: OffloadTargets, v_t: np.ndarray, v_r: np.ndarray) -> np.ndarray:
    """SINR of every DR evaluated through the lifted matrices."""
    mats = {Side.TRANSMISSION: v_t, Side.REFLECTION: v_r}
    sinr = np.zeros(targets.n_dr)
    for l in range(targets.n_dr):
        terms = np.array([
            np.trace(targets.b_matrices[l, i] @ mats[targets.side[i]]).real
            for i in range(targets.n_dr)
        ])
        interference = np.sum(terms) - terms[l] + targets.noise_terms[l]
        sinr[l] = terms[l] / interference if interference > 0 else math.inf
    return sinr


_Row = Tuple[dict, float, bool]


def _sinr_rows(
    targets: OffloadTargets,
    gammas: np.ndarray,
    embeddings: dict,
    supports: dict,
) -> List[_Row]:
    """Normalized trace rows ``row(V) ≥ 0``; the flag marks rows with a positive target."""
    rows = []
    for l in range(targets.n_dr):
        coeffs = {side: np.zeros(embeddings[side].size) for side in embeddings}
        for i in range(targets.n_dr):
            side = targets.side[i]
            if side not in embeddings:
                continue
            sup = supports[side]
            block = targets.b_matrices[l, i][np.ix_(sup, sup)]
            sign = 1.0 if i == l else -gammas[l]
            coeffs[side] += sign * embeddings[side].trace_coefficients(block)
        const = -gammas[l] * targets.noise_terms[l]
        scale = max([np.max(np.abs(c)) for c in coeffs.values()] + [abs(const)])
        if scale <= 0.0:
            continue
        rows.append(
            ({side: c / scale for side, c in coeffs.items()}, const / scale, bool(gammas[l] > 0))
        )
    return rows


def _row_values(rows: List[_Row], params: dict) -> np.ndarray:
    return np.array(
        [sum(c @ params[s] for s, c in coeffs.items()) + const for coeffs, const, _ in rows]
    )


def algorithm2(
    v_init_t: np.ndarray,
    v_init_r: np.ndarray,
    targets: OffloadTargets,
    cfg: SystemConfig,
    template: Optional[DiagTemplate] = None,
) -> LiftedStar:
    """Penalized SCA over the lifted STAR matrices.

    Besides the rank penalty the program maximizes the smallest normalized
    SINR margin of the DRs with a positive target, weighted by
    ``star_slack_weight / N``. A candidate replaces the incumbent only when it
    strictly lowers the objective; with no positive target nothing rewards a
    move and the starting matrices come back unchanged.

    Args:
        v_init_t: Starting transmission matrix (feasible)
        v_init_r: Starting reflection matrix (feasible)
        targets: Trace-form SINR constraints
        cfg: System configuration (``penalty_rho``, ``sca_tol``, ``sca_max_iter``,
            ``rank_tol``, ``star_slack_weight``)
        template: Diagonal constraints; free energy split when None

    Returns:
        LiftedStar

    Raises:
        StarInfeasible: If the first SDP is infeasible after target relaxation
    """
    n = v_init_t.shape[0]
    template = template or DiagTemplate.star(n)
    rho = cfg.penalty_rho
    supports = {side: template.support(side) for side in SIDES}
    embeddings = {
        side: HermitianEmbedding(len(supports[side])) for side in SIDES if len(supports[side])
    }

    current = {
        Side.TRANSMISSION: np.asarray(v_init_t, complex),
        Side.REFLECTION: np.asarray(v_init_r, complex),
    }

    # relax targets the incumbent cannot meet (solver round-off upstream)
    gammas = targets.gamma_dr * (1.0 - TARGET_CUSHION)
    achieved = trace_sinr(targets, current[Side.TRANSMISSION], current[Side.REFLECTION])
    short = achieved < gammas
    if np.any(short):
        logger.debug("Relaxing SINR targets of DRs %s to incumbent values", np.flatnonzero(short))
        gammas = np.where(short, achieved, gammas)

    rows = _sinr_rows(targets, gammas, embeddings, supports)
    slack_weight = cfg.star_slack_weight / n
    slacked = [row for row in rows if row[2]]
    use_slack = slack_weight > 0 and bool(slacked)

    def params_of(mats: dict) -> dict:
        return {
            side: emb.to_params(mats[side][np.ix_(supports[side], supports[side])])
            for side, emb in embeddings.items()
        }

    def total_penalty(mats: dict) -> float:
        return rho * sum(penalty_residual(mats[side]) for side in SIDES)

    def slack_of(mats: dict) -> float:
        if not use_slack:
            return 0.0
        return max(0.0, float(np.min(_row_values(slacked, params_of(mats)))))

    penalty_traj = [total_penalty(current)]
    trajectory = [penalty_traj[0] - rho * slack_weight * slack_of(current)]
    converged = False
    iterations = 0

    for it in range(cfg.sca_max_iter):
        prob = ConicProblem(f"star_sca_{it}")
        for side, emb in embeddings.items():
            prob.add_variable(
                side.value, emb.size, support=supports[side], trace_factor=emb.trace_factor
            )
        if use_slack:
            prob.add_variable("delta", 1)
            prob.add_constraint({"delta": np.ones((1, 1))}, [0.0], Cone.nonnegative(1), "delta")

        objective = {}
        for side, emb in embeddings.items():
            sup = supports[side]
            surrogate = sca_surrogate(current[side][np.ix_(sup, sup)], side)
            objective[side.value] = emb.trace_coefficients(
                np.eye(len(sup)) + surrogate.coefficient_matrix
            )
            prob.add_constraint(
                {side.value: emb.psd_map()}, np.zeros(4 * emb.n * emb.n), Cone.psd(2 * emb.n),
                f"psd_{side.value}",
            )
        if use_slack:
            objective["delta"] = np.array([-slack_weight])
        prob.set_objective(objective)

        _add_diag_rows(prob, template, embeddings, supports, n)

        for k, (coeffs, const, slackable) in enumerate(rows):
            terms = {side.value: c.reshape(1, -1) for side, c in coeffs.items()}
            if use_slack and slackable:
                terms["delta"] = -np.ones((1, 1))
            prob.add_constraint(terms, [const], Cone.nonnegative(1), f"sinr[{k}]")

        sol = solve(prob)
        if sol.status is ConicStatus.INFEASIBLE and it == 0:
            raise StarInfeasible("Lifted STAR program infeasible after target relaxation")
        if not sol.usable():
            if it == 0 and sol.x is None:
                raise NumericalError(f"Lifted STAR program ended with status {sol.status.value}")
            logger.debug("SCA iteration %d unusable (%s); keeping incumbent", it, sol.status.value)
            break

        candidate = {}
        for side in SIDES:
            full = np.zeros((n, n), dtype=complex)
            if side in embeddings:
                sup = supports[side]
                full[np.ix_(sup, sup)] = embeddings[side].from_params(prob.value(sol.x, side.value))
            candidate[side] = full

        value = rho * sol.objective
        if value >= trajectory[-1] - ACCEPT_TOL * max(rho * n, abs(trajectory[-1])):
            logger.debug("SCA iteration %d did not lower the objective; keeping incumbent", it)
            converged = True
            break
        current = candidate
        iterations += 1
        trajectory.append(value)
        penalty_traj.append(total_penalty(current))
        decrease = trajectory[-2] - value
        if decrease <= cfg.sca_tol * max(abs(trajectory[-2]), 1e-12):
            converged = True
            break

    residuals = (
        penalty_residual(current[Side.TRANSMISSION]),
        penalty_residual(current[Side.REFLECTION]),
    )
    rank_ok = all(
        res <= cfg.rank_tol * max(np.trace(current[side]).real, 1e-300) or res <= 1e-12
        for res, side in zip(residuals, SIDES)
    )
    if not rank_ok:
        warnings.warn(
            RankNotConverged(f"Rank-one penalty residuals {residuals} above tolerance"),
            stacklevel=2,
        )
    logger.debug("SCA finished after %d iterations, residuals %s", iterations, residuals)
    return LiftedStar(
        v_t=current[Side.TRANSMISSION],
        v_r=current[Side.REFLECTION],
        penalty_residuals=residuals,
        trajectory=trajectory,
        penalty_trajectory=penalty_traj,
        iterations=iterations,
        converged=converged,
        rank_converged=rank_ok,
        template=template,
        targets=OffloadTargets(gammas, targets.noise_terms, targets.b_matrices, targets.side),
    )


def _add_diag_rows(
    prob: ConicProblem, template: DiagTemplate, embeddings: dict, supports: dict, n: int
) -> None:
    if template.has_fixed_amplitudes:
        for side, emb in embeddings.items():
            fixed = np.asarray(template.fixed(side), dtype=float)
            sup = supports[side]
            coeffs = np.zeros((len(sup), emb.size))
            for row, _ in enumerate(sup):
                coeffs[row, emb.diag_index(row)] = 1.0
            prob.add_constraint(
                {side.value: coeffs}, -fixed[sup], Cone.zero(len(sup)), f"diag_{side.value}"
            )
        return
    terms = {}
    for side, emb in embeddings.items():
        coeffs = np.zeros((n, emb.size))
        for row, element in enumerate(supports[side]):
            coeffs[element, emb.diag_index(row)] = 1.0
        terms[side.value] = coeffs
    prob.add_constraint(terms, -np.ones(n), Cone.zero(n), "diag_sum")


def extraction_degradation(ls: LiftedStar, coeffs: StarCoefficients) -> float:
    """Largest relative SINR shortfall of extracted coefficients against the targets."""
    if ls.targets is None or ls.targets.n_dr == 0:
        return 0.0
    v_t, v_r = lift(coeffs)
    achieved = trace_sinr(ls.targets, v_t, v_r)
    gammas = ls.targets.gamma_dr
    mask = gammas > 0
    if not np.any(mask):
        return 0.0
    shortfall = (gammas[mask] - achieved[mask]) / gammas[mask]
    return float(max(0.0, np.max(shortfall)))


def extract_rank_one(ls: LiftedStar) -> StarCoefficients:
    """Recover STAR coefficients from lifted matrices.

    Amplitudes come from the diagonals (pinned exactly by fixed templates,
    otherwise renormalized so each element's pair sums to one); phases come
    from the dominant eigenvector of each side.
    """
    n = ls.v_t.shape[0]
    template = ls.template
    if template is not None and template.has_fixed_amplitudes:
        amp_t = np.asarray(template.fixed_t, dtype=float).copy()
        amp_r = np.asarray(template.fixed_r, dtype=float).copy()
    else:
        d_t = np.clip(np.diag(ls.v_t).real, 0.0, None)
        d_r = np.clip(np.diag(ls.v_r).real, 0.0, None)
        total = d_t + d_r
        safe = np.where(total > 0, total, 1.0)
        amp_t = np.where(total > 0, d_t / safe, 0.5)
        amp_r = 1.0 - amp_t

    phases = []
    for side in SIDES:
        v = ls.matrix(side)
        if not np.any(np.abs(v) > 0):
            phases.append(np.zeros(n))
            continue
        _, b = dominant_eigenvector(v)
        phases.append(np.where(np.abs(b) > 1e-12, np.angle(b), 0.0))

    coeffs = StarCoefficients(amp_t=amp_t, amp_r=amp_r, phase_t=phases[0], phase_r=phases[1])
    loss = extraction_degradation(ls, coeffs)
    if loss > EXTRACTION_LOSS_TOL:
        warnings.warn(
            ExtractionLoss(f"Extraction degraded SINR targets by {loss:.3e}", degradation=loss),
            stacklevel=2,
        )
    return coeffs
