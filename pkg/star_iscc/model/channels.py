"""Geometry placement and Rician channel realization."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from star_iscc.config import INTERFERER_ANGLES_RAD, SystemConfig
from star_iscc.errors import ConfigError
from star_iscc.model.core import ChannelSet, Side, build_sensing_channels, steering_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Geometry:
    """2-D node positions (meters) and derived angles/distances."""

    pos_bs: Tuple[float, float]
    pos_ris: Tuple[float, float]
    pos_tr: Tuple[float, float]
    pos_dr: Tuple[Tuple[float, float], ...]
    side: Tuple[Side, ...]
    theta_target: float
    thetas_interf: Tuple[float, ...]
    dist_bs_ris: float
    dist_ris_dr: Tuple[float, ...]
    dist_bs_tr: float
    dist_bs_interf: Tuple[float, ...]

    @property
    def n_dr(self) -> int:
        """Number of DRs placed."""
        return len(self.pos_dr)


def _bs_angle(pos: Tuple[float, float]) -> float:
    # measured from the BS broadside (+y axis)
    return math.atan2(pos[0], pos[1])


def _ris_angle(pos: Tuple[float, float], pos_ris: Tuple[float, float]) -> float:
    dx = pos[0] - pos_ris[0]
    dy = pos[1] - pos_ris[1]
    return math.atan2(dx, abs(dy))


def place_geometry(cfg: SystemConfig, rng: np.random.Generator) -> Geometry:
    """Place BS, STAR-RIS, target, interferers and DRs.

    The first half of the DRs lands on the transmission side (y above the
    RIS), the second half on the reflection side.

    Args:
        cfg: System configuration
        rng: Random generator (consumes one uniform draw per DR)

    Returns:
        Geometry

    Raises:
        ConfigError: If ``n_dr`` is odd
    """
    if cfg.n_dr % 2:
        raise ConfigError(f"n_dr must be even for equal side split, got {cfg.n_dr}")

    pos_bs = (0.0, 0.0)
    pos_ris = (0.0, cfg.ris_distance_m)
    pos_tr = (0.0, cfg.target_distance_m)

    thetas_interf = INTERFERER_ANGLES_RAD[: cfg.n_interferer]
    pos_interf = [
        (cfg.interferer_radius_m * math.sin(t), cfg.interferer_radius_m * math.cos(t))
        for t in thetas_interf
    ]

    half = cfg.n_dr // 2
    psi = rng.uniform(0.0, math.pi, size=cfg.n_dr)
    psi[half:] += math.pi
    pos_dr = tuple(
        (pos_ris[0] + cfg.dr_radius_m * math.cos(p), pos_ris[1] + cfg.dr_radius_m * math.sin(p))
        for p in psi
    )
    side = tuple([Side.TRANSMISSION] * half + [Side.REFLECTION] * (cfg.n_dr - half))

    return Geometry(
        pos_bs=pos_bs,
        pos_ris=pos_ris,
        pos_tr=pos_tr,
        pos_dr=pos_dr,
        side=side,
        theta_target=_bs_angle(pos_tr),
        thetas_interf=tuple(thetas_interf),
        dist_bs_ris=math.dist(pos_bs, pos_ris),
        dist_ris_dr=tuple(math.dist(pos_ris, p) for p in pos_dr),
        dist_bs_tr=math.dist(pos_bs, pos_tr),
        dist_bs_interf=tuple(math.dist(pos_bs, p) for p in pos_interf),
    )


def path_loss(d: float, cfg: SystemConfig, sensing: bool = False) -> float:
    """Large-scale gain ``D·d^{-α}``; sensing links use the round trip ``2d``."""
    if d <= 0:
        raise ValueError(f"Distance must be positive, got {d}")
    if sensing:
        d = 2.0 * d
    return cfg.ref_loss_linear * d ** (-cfg.pathloss_exp)


def rician_channel(
    rows: int,
    cols: int,
    beta: float,
    epsilon: float,
    los_component: Optional[np.ndarray],
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``√β(√(ε/(ε+1))·LoS + √(1/(ε+1))·NLoS)``.

    Args:
        rows: Output rows
        cols: Output columns
        beta: Large-scale gain
        epsilon: Rician factor (linear)
        los_component: Unit-modulus LoS matrix (rows x cols); all ones when None
        rng: Random generator

    Returns:
        Complex matrix (rows x cols)
    """
    shape = (rows, cols)
    nlos = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    if los_component is None:
        los_component = np.ones((rows, cols), dtype=complex)
    los = np.asarray(los_component, dtype=complex).reshape(rows, cols)
    los_weight = math.sqrt(epsilon / (epsilon + 1.0))
    nlos_weight = math.sqrt(1.0 / (epsilon + 1.0))
    return math.sqrt(beta) * (los_weight * los + nlos_weight * nlos)


def realize_channels(cfg: SystemConfig, geom: Geometry, rng: np.random.Generator) -> ChannelSet:
    """Draw one block-fading realization of every link.

    Draw order is fixed: ``H``, then each ``h_{u,l}``, then the sensing phases.

    Args:
        cfg: System configuration
        geom: Node placement
        rng: Random generator

    Returns:
        ChannelSet
    """
    n, nr = cfg.n_ris, cfg.n_rx
    eps = cfg.rician_factor_linear

    # RIS seen as a linear array; BS side uses the geometric angle
    theta_bs = _bs_angle(geom.pos_ris)
    theta_ris = _ris_angle(geom.pos_bs, geom.pos_ris)
    los_h = math.sqrt(n * nr) * np.outer(
        steering_vector(theta_ris, n), steering_vector(theta_bs, nr).conj()
    )
    h_bs_ris = rician_channel(n, nr, path_loss(geom.dist_bs_ris, cfg), eps, los_h, rng)

    h_ris_dr = np.zeros((geom.n_dr, n), dtype=complex)
    for l, (pos, dist) in enumerate(zip(geom.pos_dr, geom.dist_ris_dr)):
        los_l = math.sqrt(n) * steering_vector(_ris_angle(pos, geom.pos_ris), n)
        h_ris_dr[l] = rician_channel(n, 1, path_loss(dist, cfg), eps, los_l, rng).ravel()

    distances = (geom.dist_bs_tr,) + geom.dist_bs_interf
    magnitudes = np.array([math.sqrt(path_loss(d, cfg, sensing=True)) for d in distances])
    phases = rng.uniform(0.0, 2.0 * math.pi, size=len(distances))
    alphas = magnitudes * np.exp(1j * phases)

    a_target, a_interf, a_total = build_sensing_channels(
        geom.theta_target, geom.thetas_interf, alphas, cfg.n_tx, cfg.n_rx
    )
    logger.debug(
        "Realized channels: ‖H‖_F²=%.3e, |α_0|=%.3e, %d DRs", np.sum(np.abs(h_bs_ris) ** 2),
        magnitudes[0], geom.n_dr,
    )
    return ChannelSet(
        h_bs_ris=h_bs_ris,
        h_ris_dr=h_ris_dr,
        side=geom.side,
        a_target=a_target,
        a_interf=a_interf,
        a_total=a_total,
        alpha_target=complex(alphas[0]),
        alpha_interf=alphas[1:],
        theta_target=geom.theta_target,
        thetas_interf=np.asarray(geom.thetas_interf),
    )


def draw_instance(cfg: SystemConfig, seed: int) -> Tuple[Geometry, ChannelSet, np.random.Generator]:
    """Seeded geometry plus channels; the returned generator continues the stream."""
    rng = np.random.default_rng(seed)
    geom = place_geometry(cfg, rng)
    return geom, realize_channels(cfg, geom, rng), rng
