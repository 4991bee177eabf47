"""Color value types.

Plain NamedTuples: cheap, immutable, unpackable, and accepted anywhere a
length-3 sequence is. All transform and metric entry points also accept
numpy arrays of shape (..., 3); the tuple types are the scalar face of
the same API.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class XyzColor(NamedTuple):
    """CIE XYZ tristimulus, D65 reference white scaled to Y = 1."""

    x: float
    y: float
    z: float


class SrgbColor(NamedTuple):
    """Gamma-encoded sRGB. In-gamut colors have components in [0, 1]."""

    r: float
    g: float
    b: float


class CieLabColor(NamedTuple):
    """CIE L*a*b* under D65 (Y = 1), L* on the usual 0..100 scale."""

    l: float
    a: float
    b: float


class HelmlabColor(NamedTuple):
    """Coordinates in the Helmlab space.

    L is roughly 0..1 over sRGB (the exact endpoint depends on the
    parameter set), a and b are opponent axes. Chroma and hue are
    derived views, not stored fields.
    """

    l: float
    a: float
    b: float

    @property
    def chroma(self) -> float:
        return math.hypot(self.a, self.b)

    @property
    def hue(self) -> float:
        """Hue angle in radians in (-pi, pi]; 0 by convention at the origin."""
        h = math.atan2(self.b, self.a)
        if h <= -math.pi:
            h = math.pi
        return h
