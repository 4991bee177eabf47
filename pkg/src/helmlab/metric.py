"""Parametric color-difference metric over Helmlab coordinates.

The formula compares two already-transformed colors. Differences are
scaled by lightness- and chroma-dependent denominators, combined with a
power, then passed through a saturating compression:

    S_L = 1 + s_l * (Lbar - 0.5)^2
    S_C = 1 + s_c * Cbar
    d   = ((dL/S_L)^2 + w_c * (da^2 + db^2) / S_C^2)^(p/2)
    dE  = (d / (1 + c*d))^q

Lbar, abar, bbar are pairwise means and Cbar = hypot(abar, bbar), so the
metric is symmetric in its arguments (bitwise: IEEE addition commutes).
It is not guaranteed to satisfy the triangle inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["DistanceParams", "delta_e", "delta_e_euclidean"]


@dataclass(frozen=True)
class DistanceParams:
    """The seven tuned constants of the difference formula.

    alpha reserves a linear mixing term for future revisions; it is 0.0
    in the released parameter set and intentionally not wired into
    delta_e. It is serialized and counted so parameter files stay
    forward compatible.
    """

    s_l: float
    s_c: float
    p: float
    w_c: float
    c: float
    q: float
    alpha: float = 0.0

    def validate(self) -> "DistanceParams":
        if not self.q > 0:
            raise ValidationError(f"distance.q must be > 0, got {self.q}")
        if self.c < 0:
            raise ValidationError(f"distance.c must be >= 0, got {self.c}")
        for name in ("s_l", "s_c", "p", "w_c", "c", "q", "alpha"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"distance.{name} is not finite")
        return self


def _pair(c1, c2):
    """Coerce two colors or color batches to float arrays of shape (..., 3)."""
    a1 = np.asarray(c1, dtype=float)
    a2 = np.asarray(c2, dtype=float)
    if a1.shape[-1] != 3 or a2.shape[-1] != 3:
        raise ValidationError("colors must have 3 components")
    return np.broadcast_arrays(a1, a2)


def delta_e(c1, c2, dp: DistanceParams):
    """Tuned perceptual difference between two Helmlab colors.

    Accepts single colors (any length-3 sequence, returns a float) or
    arrays of shape (..., 3) (returns an array). Identical inputs give
    exactly 0.0.
    """
    a1, a2 = _pair(c1, c2)
    dl = a1[..., 0] - a2[..., 0]
    da = a1[..., 1] - a2[..., 1]
    db = a1[..., 2] - a2[..., 2]
    lbar = (a1[..., 0] + a2[..., 0]) / 2.0
    abar = (a1[..., 1] + a2[..., 1]) / 2.0
    bbar = (a1[..., 2] + a2[..., 2]) / 2.0
    cbar = np.hypot(abar, bbar)

    s_l = 1.0 + dp.s_l * (lbar - 0.5) ** 2
    s_c = 1.0 + dp.s_c * cbar
    d = ((dl / s_l) ** 2 + dp.w_c * (da * da + db * db) / (s_c * s_c)) ** (dp.p / 2.0)
    de = (d / (1.0 + dp.c * d)) ** dp.q
    if de.ndim == 0:
        return float(de)
    return de


def delta_e_euclidean(c1, c2):
    """Plain Euclidean distance in Helmlab coordinates (ablation baseline)."""
    a1, a2 = _pair(c1, c2)
    d = np.sqrt(np.sum((a1 - a2) ** 2, axis=-1))
    if d.ndim == 0:
        return float(d)
    return d
