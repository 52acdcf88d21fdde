"""Resonances of compactly supported potentials on cylinders R x Y."""
from .cross_section import Circle, CrossSection, Interval, Sphere, TwoEnded, build_catalog
from .fredholm import fredholm_det, locate_resonances, winding_count
from .nystrom import Discretization
from .oracle import separable_oracle
from .potential import Profile, separable, zero_potential
from .regions import Region
from .sheets import PHYSICAL, BoundaryChart, LambdaChart, R1Chart, RampChart, Sheet, SurfacePoint

__version__ = "0.1.0"

__all__ = [
    "Circle", "CrossSection", "Interval", "Sphere", "TwoEnded", "build_catalog",
    "fredholm_det", "locate_resonances", "winding_count", "Discretization", "separable_oracle",
    "Profile", "separable", "zero_potential", "Region", "PHYSICAL", "BoundaryChart", "LambdaChart",
    "R1Chart", "RampChart", "Sheet", "SurfacePoint",
]
