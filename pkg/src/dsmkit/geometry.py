"""Small planar geometry helpers shared across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle.

    For geographic use x is longitude and y is latitude (degrees); for
    projected use x is easting and y is northing (meters).
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"rectangle {name} must be finite, got {v!r}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(
                f"degenerate rectangle: x [{self.x_min}, {self.x_max}], "
                f"y [{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains(self, x: float, y: float) -> bool:
        """Boundary-inclusive membership test."""
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def expanded(self, fraction: float) -> "Rect":
        """Grow the rectangle by `fraction` of its size on every side."""
        dx = fraction * self.width
        dy = fraction * self.height
        return Rect(self.x_min - dx, self.y_min - dy, self.x_max + dx, self.y_max + dy)

    def corners(self) -> list[tuple[float, float]]:
        """The four corners, counter-clockwise from (x_min, y_min)."""
        return [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]
