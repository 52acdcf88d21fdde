"""Disk regions in a chart coordinate."""
from __future__ import annotations

from dataclasses import dataclass

from .sheets import Chart, Sheet


@dataclass(frozen=True)
class Region:
    """|w - center| < radius in ``chart``, minus a puncture disk around ``center``.

    ``sheet`` restricts the region to one sheet of Z-hat.
    """
    chart: Chart
    center: complex
    radius: float
    sheet: Sheet | None = None
    puncture: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("region radius must be positive")
        object.__setattr__(self, "center", complex(self.center))

    def contains(self, w) -> bool:
        d = abs(complex(w) - self.center)
        return self.puncture < d < self.radius
