"""Domain types and deterministic constructions of the STAR-RIS ISCC model."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from star_iscc.config import SystemConfig
from star_iscc.errors import InvalidCoefficients

ENERGY_TOL = 1e-9
TWO_PI = 2.0 * math.pi


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


class Side(Enum):
    """Half-space of a DR relative to the STAR-RIS."""

    TRANSMISSION = "transmission"
    REFLECTION = "reflection"


@dataclass(frozen=True)
class StarCoefficients:
    """Per-element transmission/reflection amplitudes and phases.

    Phases are wrapped into ``[0, 2π)`` on construction. Amplitudes are not
    checked here; :meth:`energy_violation` measures the conservation error and
    :func:`star_matrices` refuses coefficients that break it.
    """

    amp_t: np.ndarray
    amp_r: np.ndarray
    phase_t: np.ndarray
    phase_r: np.ndarray

    def __post_init__(self) -> None:
        arrays = [np.asarray(a, dtype=float).ravel() for a in
                  (self.amp_t, self.amp_r, self.phase_t, self.phase_r)]
        if len({a.size for a in arrays}) != 1:
            raise InvalidCoefficients("Amplitude and phase vectors must have equal length")
        amp_t, amp_r, phase_t, phase_r = arrays
        object.__setattr__(self, "amp_t", _frozen(amp_t))
        object.__setattr__(self, "amp_r", _frozen(amp_r))
        object.__setattr__(self, "phase_t", _frozen(np.mod(phase_t, TWO_PI)))
        object.__setattr__(self, "phase_r", _frozen(np.mod(phase_r, TWO_PI)))

    @property
    def n_elements(self) -> int:
        """Number of STAR-RIS elements."""
        return int(self.amp_t.size)

    def energy_violation(self) -> float:
        """Largest departure from ``amp_t + amp_r = 1`` or from ``[0, 1]``."""
        if self.n_elements == 0:
            return 0.0
        conservation = np.max(np.abs(self.amp_t + self.amp_r - 1.0))
        below = max(0.0, -float(np.min(self.amp_t)), -float(np.min(self.amp_r)))
        above = max(0.0, float(np.max(self.amp_t)) - 1.0, float(np.max(self.amp_r)) - 1.0)
        return float(max(conservation, below, above))

    def coefficient_vector(self, side: Side) -> np.ndarray:
        """Complex vector ``√ρ_n · exp(jθ_n)`` of one side."""
        if side is Side.TRANSMISSION:
            return np.sqrt(np.clip(self.amp_t, 0.0, None)) * np.exp(1j * self.phase_t)
        return np.sqrt(np.clip(self.amp_r, 0.0, None)) * np.exp(1j * self.phase_r)

    @classmethod
    def equal_split(cls, n: int, phase_t: Optional[np.ndarray] = None,
                    phase_r: Optional[np.ndarray] = None) -> "StarCoefficients":
        """Half of the energy to each side, given (default zero) phases."""
        zeros = np.zeros(n)
        return cls(
            amp_t=np.full(n, 0.5),
            amp_r=np.full(n, 0.5),
            phase_t=zeros if phase_t is None else phase_t,
            phase_r=zeros if phase_r is None else phase_r,
        )


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all propagation matrices.

    Attributes:
        h_bs_ris: BS-RIS channel ``H`` (N x Nr)
        h_ris_dr: RIS-DR channels ``h_{u,l}`` stacked as rows (L x N)
        side: Side of each DR
        a_target: Target sensing channel ``A_0`` (Nr x Nt)
        a_interf: Summed clutter channel ``A_I`` (Nr x Nt)
        a_total: ``A_0 + A_I``
        alpha_target: Complex sensing coefficient of the target
        alpha_interf: Complex sensing coefficients of the interferers
        theta_target: Target angle seen from the BS (rad)
        thetas_interf: Interferer angles seen from the BS (rad)
    """

    h_bs_ris: np.ndarray
    h_ris_dr: np.ndarray
    side: Tuple[Side, ...]
    a_target: np.ndarray
    a_interf: np.ndarray
    a_total: np.ndarray
    alpha_target: complex
    alpha_interf: np.ndarray
    theta_target: float = 0.0
    thetas_interf: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        for name in ("h_bs_ris", "a_target", "a_interf", "a_total"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), complex)))
        n_ris = self.h_bs_ris.shape[0]
        object.__setattr__(
            self, "h_ris_dr", _frozen(np.asarray(self.h_ris_dr, complex).reshape(-1, n_ris))
        )
        object.__setattr__(self, "alpha_interf", _frozen(np.asarray(self.alpha_interf, complex)))
        object.__setattr__(self, "thetas_interf", _frozen(np.asarray(self.thetas_interf, float)))
        object.__setattr__(self, "side", tuple(self.side))

    @property
    def n_dr(self) -> int:
        """Number of DRs."""
        return int(self.h_ris_dr.shape[0])

    @property
    def n_ris(self) -> int:
        """Number of STAR-RIS elements."""
        return int(self.h_bs_ris.shape[0])

    @property
    def n_rx(self) -> int:
        """BS receive antennas."""
        return int(self.h_bs_ris.shape[1])

    @property
    def n_tx(self) -> int:
        """BS transmit antennas."""
        return int(self.a_target.shape[1])


@dataclass(frozen=True)
class BeamformerSet:
    """Sensing beamformer, receivers and WMMSE weights."""

    w: np.ndarray
    u: np.ndarray
    u_dr: np.ndarray
    lambda_rad: float
    lambda_dr: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "w", _frozen(np.asarray(self.w, complex)))
        object.__setattr__(self, "u", _frozen(np.asarray(self.u, complex)))
        object.__setattr__(self, "u_dr", _frozen(np.asarray(self.u_dr, complex)))
        object.__setattr__(self, "lambda_dr", _frozen(np.asarray(self.lambda_dr, float)))

    @property
    def sensing_power(self) -> float:
        """``‖w‖²`` in watt."""
        return float(np.vdot(self.w, self.w).real)


@dataclass(frozen=True)
class RateAllocation:
    """Compute rates and the BS power they consume."""

    r_dr: np.ndarray
    p_compute: np.ndarray
    p_sense: float
    sum_rate: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "r_dr", _frozen(np.asarray(self.r_dr, float)))
        object.__setattr__(self, "p_compute", _frozen(np.asarray(self.p_compute, float)))

    @property
    def total_power(self) -> float:
        """Sensing plus compute power in watt."""
        return self.p_sense + float(np.sum(self.p_compute))

    @classmethod
    def from_rates(
        cls, r_dr: Sequence[float], w: np.ndarray, cfg: SystemConfig
    ) -> "RateAllocation":
        """Derive powers from rates and the sensing beamformer."""
        r = np.clip(np.asarray(r_dr, dtype=float), 0.0, None)
        p_compute = cfg.kappa * (cfg.phi_cycles_per_bit * r) ** 3
        p_sense = float(np.vdot(w, w).real)
        return cls(r_dr=r, p_compute=p_compute, p_sense=p_sense, sum_rate=float(np.sum(r)))


def steering_vector(theta: float, n: int) -> np.ndarray:
    """Unit-norm ULA response ``exp(j·k·sin θ)/√n``, k = 0..n-1."""
    k = np.arange(n)
    return np.exp(1j * k * math.sin(theta)) / math.sqrt(n)


def build_sensing_channels(
    theta_target: float,
    thetas_interf: Sequence[float],
    alphas: Sequence[complex],
    n_tx: int,
    n_rx: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build the target, clutter and total sensing channels.

    Args:
        theta_target: Target angle (rad)
        thetas_interf: Interferer angles (rad)
        alphas: Complex coefficients, target first then one per interferer
        n_tx: Transmit antennas
        n_rx: Receive antennas

    Returns:
        ``(A_0, A_I, A)``
    """
    alphas = np.asarray(alphas, dtype=complex)
    if alphas.size != len(thetas_interf) + 1:
        raise ValueError("Need one sensing coefficient per target and interferer")

    def echo(theta: float, alpha: complex) -> np.ndarray:
        return alpha * np.outer(steering_vector(theta, n_rx), steering_vector(theta, n_tx).conj())

    a_target = echo(theta_target, alphas[0])
    a_interf = np.zeros((n_rx, n_tx), dtype=complex)
    for theta, alpha in zip(thetas_interf, alphas[1:]):
        a_interf = a_interf + echo(theta, alpha)
    return a_target, a_interf, a_target + a_interf


def star_matrices(c: StarCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal transmission and reflection matrices ``(Φ_t, Φ_r)``."""
    violation = c.energy_violation()
    if violation > ENERGY_TOL:
        raise InvalidCoefficients(f"Energy conservation violated by {violation:.3e}")
    return (
        np.diag(c.coefficient_vector(Side.TRANSMISSION)),
        np.diag(c.coefficient_vector(Side.REFLECTION)),
    )


def effective_uplink_channel(ch: ChannelSet, c: StarCoefficients, l: int) -> np.ndarray:
    """Cascaded uplink channel ``g_l = H^H Φ(l) h_{u,l}`` of DR ``l``."""
    if not 0 <= l < ch.n_dr:
        raise IndexError(f"DR index {l} out of range for {ch.n_dr} DRs")
    phi_t, phi_r = star_matrices(c)
    phi = phi_t if ch.side[l] is Side.TRANSMISSION else phi_r
    return ch.h_bs_ris.conj().T @ (phi @ ch.h_ris_dr[l])


def effective_uplink_channels(ch: ChannelSet, c: StarCoefficients) -> np.ndarray:
    """All cascaded uplink channels stacked as rows (L x Nr)."""
    if ch.n_dr == 0:
        return np.zeros((0, ch.n_rx), dtype=complex)
    return np.stack([effective_uplink_channel(ch, c, l) for l in range(ch.n_dr)])
