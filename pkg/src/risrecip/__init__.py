"""Desk-scale simulator of RIS-assisted TDD links and their (non)reciprocity."""

from .channel import (ChannelSample, DirectLink, LinkGeometry, Scene, antenna_position,
                      cascaded_channel, direct_channel, evaluate_link, propagation_factor,
                      received_power, reciprocity_report)
from .errors import RisError
from .models import (AngleDependent, CodingPattern, Direction, IdealPin, IdealVaractor,
                     Panel, PatternKind, TableVaractor, apply_pattern, build_panel,
                     make_pattern, reflection_coefficient)

__all__ = [
    "ChannelSample", "DirectLink", "LinkGeometry", "Scene", "antenna_position",
    "cascaded_channel", "direct_channel", "evaluate_link", "propagation_factor",
    "received_power", "reciprocity_report", "RisError", "AngleDependent", "CodingPattern",
    "Direction", "IdealPin", "IdealVaractor", "Panel", "PatternKind", "TableVaractor",
    "apply_pattern", "build_panel", "make_pattern", "reflection_coefficient",
]

__version__ = "0.1.0"
