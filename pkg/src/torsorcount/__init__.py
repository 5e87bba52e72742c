"""Counting rational points of bounded anticanonical height on smooth projective toric varieties."""

from .fan_core import Fan, FanData, FanError, load_fan, validate_fan
from .torsor_points import Box, Congruence, CountQuery, count, enumerate_points

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Congruence",
    "CountQuery",
    "Fan",
    "FanData",
    "FanError",
    "count",
    "enumerate_points",
    "load_fan",
    "validate_fan",
]
