"""Closed-form performance quantities: SINRs, rates, MSEs, power, beampattern."""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from star_iscc.config import SystemConfig
from star_iscc.errors import DegeneratePattern, DegenerateReceiver
from star_iscc.model.core import (
    BeamformerSet,
    ChannelSet,
    StarCoefficients,
    effective_uplink_channels,
    steering_vector,
)

ArrayLike = Union[float, np.ndarray]


def _hermitian(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _outer(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class CovarianceBundle:
    """Receive covariances for one ``(w, star)`` pair.

    Attributes:
        g: Effective uplink channels (L x Nr)
        r_interf_dr: Interference-plus-noise covariance ``R_l`` per DR (L x Nr x Nr)
        r_total_rx: Full received covariance ``R_2``
        r_equiv: Equivalent sensing-system covariance ``R_1``
        r_rad_noise: Clutter-plus-noise covariance ``R_rad``
    """

    g: np.ndarray
    r_interf_dr: np.ndarray
    r_total_rx: np.ndarray
    r_equiv: np.ndarray
    r_rad_noise: np.ndarray

    @classmethod
    def build(
        cls,
        w: np.ndarray,
        ch: ChannelSet,
        star: StarCoefficients,
        cfg: SystemConfig,
        include_sensing: bool = True,
    ) -> "CovarianceBundle":
        """Compute every covariance from the beamformer and STAR coefficients.

        Args:
            w: Sensing beamformer
            ch: Channel realization
            star: STAR coefficients
            cfg: System configuration
            include_sensing: Count the sensing echo as uplink interference
        """
        w = np.asarray(w, dtype=complex)
        g = effective_uplink_channels(ch, star)
        noise = cfg.noise_watt * np.eye(ch.n_rx)

        echo_target = _outer(ch.a_target @ w)
        echo_interf = _outer(ch.a_interf @ w)
        r_rad = _hermitian(echo_interf + noise)
        r_equiv = _hermitian(echo_target + echo_interf + noise)

        r_total = noise.astype(complex) + cfg.p_dr_watt * (g.T @ g.conj())
        if include_sensing:
            r_total = r_total + _outer(ch.a_total @ w)
        r_total = _hermitian(r_total)
        r_l = np.stack([_hermitian(r_total - cfg.p_dr_watt * _outer(g_l)) for g_l in g]) if len(g) \
            else np.zeros((0, ch.n_rx, ch.n_rx), dtype=complex)
        return cls(g=g, r_interf_dr=r_l, r_total_rx=r_total, r_equiv=r_equiv, r_rad_noise=r_rad)


def _require_receiver(u: np.ndarray) -> None:
    if not np.any(np.abs(u) > 0):
        raise DegenerateReceiver("Receive beamformer is identically zero")


def uplink_sinr(
    l: int,
    bf: BeamformerSet,
    ch: ChannelSet,
    star: StarCoefficients,
    cfg: SystemConfig,
    include_sensing: bool = True,
) -> float:
    """Uplink SINR of DR ``l`` with receiver ``bf.u_dr[l]``."""
    u_l = np.asarray(bf.u_dr[l], dtype=complex)
    _require_receiver(u_l)
    g = effective_uplink_channels(ch, star)
    gains = np.abs(g.conj() @ u_l) ** 2
    signal = cfg.p_dr_watt * gains[l]
    interference = cfg.p_dr_watt * (np.sum(gains) - gains[l])
    if include_sensing:
        interference += abs(np.vdot(u_l, ch.a_total @ bf.w)) ** 2
    noise = cfg.noise_watt * np.vdot(u_l, u_l).real
    return float(signal / (interference + noise))


def max_uplink_sinr(l: int, cov: CovarianceBundle, cfg: SystemConfig) -> float:
    """Uplink SINR of DR ``l`` under its MMSE receiver, ``P_u g^H R_l^{-1} g``."""
    g_l = cov.g[l]
    return float(cfg.p_dr_watt * np.vdot(g_l, np.linalg.solve(cov.r_interf_dr[l], g_l)).real)


def sensing_sinr(u: np.ndarray, w: np.ndarray, ch: ChannelSet, cfg: SystemConfig) -> float:
    """Sensing SINR of receiver ``u`` and beamformer ``w``."""
    u = np.asarray(u, dtype=complex)
    _require_receiver(u)
    signal = abs(np.vdot(u, ch.a_target @ w)) ** 2
    clutter = abs(np.vdot(u, ch.a_interf @ w)) ** 2
    return float(signal / (clutter + cfg.noise_watt * np.vdot(u, u).real))


def equivalent_sinr(w: np.ndarray, ch: ChannelSet, cov: CovarianceBundle) -> float:
    """Receiver-optimal sensing SINR ``w^H A_0^H R_rad^{-1} A_0 w``."""
    a = ch.a_target @ np.asarray(w, dtype=complex)
    return float(np.vdot(a, np.linalg.solve(cov.r_rad_noise, a)).real)


def rate_from_sinr(gamma: ArrayLike, cfg: SystemConfig) -> ArrayLike:
    """Spectral efficiency ``log_base(1 + γ)``."""
    return np.log1p(gamma) / math.log(cfg.log_base)


def sinr_from_rate(r: ArrayLike, bandwidth_hz: float, cfg: SystemConfig) -> ArrayLike:
    """SINR target ``base^{r/B} - 1`` for rate ``r``."""
    return np.expm1(np.asarray(r, dtype=float) / bandwidth_hz * math.log(cfg.log_base))


def compute_power(r: ArrayLike, cfg: SystemConfig) -> ArrayLike:
    """CPU power ``κ(φ r)³`` needed for compute rate ``r``."""
    return cfg.kappa * (cfg.phi_cycles_per_bit * np.asarray(r, dtype=float)) ** 3


def mse_rad(u: np.ndarray, w: np.ndarray, ch: ChannelSet, cov: CovarianceBundle) -> float:
    """MSE of the equivalent sensing link."""
    u = np.asarray(u, dtype=complex)
    quad = np.vdot(u, cov.r_equiv @ u).real
    return float(quad - 2.0 * np.vdot(u, ch.a_target @ w).real + 1.0)


def mse_dr(l: int, u_l: np.ndarray, cov: CovarianceBundle, cfg: SystemConfig) -> float:
    """MSE of DR ``l``'s uplink stream."""
    u_l = np.asarray(u_l, dtype=complex)
    quad = np.vdot(u_l, cov.r_total_rx @ u_l).real
    return float(quad - 2.0 * math.sqrt(cfg.p_dr_watt) * np.vdot(u_l, cov.g[l]).real + 1.0)


def eta(weight: float, mse: float) -> float:
    """WMMSE capacity bound ``ln λ - λe + 1`` (nats)."""
    return math.log(weight) - weight * mse + 1.0


def beampattern(u: np.ndarray, w: np.ndarray, theta_grid: Sequence[float]) -> np.ndarray:
    """Normalized two-way gain ``|u^H a_r(θ) a_t(θ)^H w|²`` over an angle grid.

    Raises:
        DegeneratePattern: If the pattern vanishes on the whole grid
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("Angle grid must not be empty")
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=complex)
    gains = np.array([
        abs(np.vdot(u, steering_vector(t, u.size)) * np.vdot(steering_vector(t, w.size), w)) ** 2
        for t in grid
    ])
    peak = float(np.max(gains))
    if not peak > 0:
        raise DegeneratePattern("Beampattern is zero over the whole grid")
    return gains / peak
