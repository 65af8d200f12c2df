"""System model: domain types, channel generation and closed-form metrics."""

from star_iscc.model.channels import Geometry, place_geometry, realize_channels
from star_iscc.model.core import (
    BeamformerSet,
    ChannelSet,
    RateAllocation,
    Side,
    StarCoefficients,
)

__all__ = [
    "BeamformerSet",
    "ChannelSet",
    "Geometry",
    "RateAllocation",
    "Side",
    "StarCoefficients",
    "place_geometry",
    "realize_channels",
]
