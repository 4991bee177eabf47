"""Reference color spaces and published difference formulas.

Everything here is textbook material, implemented for two jobs: feeding
stimuli into the pipeline (sRGB and Display-P3 in and out of XYZ) and
benchmarking the tuned metric against the classical ones (CIE Lab
distances CIE76/CIE94/CMC/CIEDE2000, plus Euclidean Oklab).

RGB <-> XYZ matrices are derived at import time from the primary and
white chromaticities (IEC 61966-2-1 for sRGB, SMPTE EG 432-1 for
Display-P3, D65 at x=0.3127 y=0.3290). Deriving instead of pasting a
4-digit table makes Y(white) exactly 1 and round trips tight to machine
precision. Transfer curves are sign-mirrored so out-of-gamut values
survive a round trip.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .types import CieLabColor, SrgbColor, XyzColor

__all__ = [
    "WHITE_D65",
    "srgb_to_xyz",
    "xyz_to_srgb",
    "p3_to_xyz",
    "xyz_to_p3",
    "linear_srgb_to_xyz",
    "xyz_to_linear_srgb",
    "xyz_to_linear_p3",
    "srgb_encode",
    "srgb_decode",
    "cielab_from_xyz",
    "cie76",
    "cie94",
    "cmc",
    "ciede2000",
    "oklab_from_xyz",
]


def _rgb_matrix(primaries, white):
    """RGB -> XYZ matrix from (x, y) chromaticities, white row scaled to Y=1."""
    cols = np.array([[x / y, 1.0, (1.0 - x - y) / y] for x, y in primaries]).T
    xw, yw = white
    white_xyz = np.array([xw / yw, 1.0, (1.0 - xw - yw) / yw])
    scale = np.linalg.solve(cols, white_xyz)
    return cols * scale


_D65_XY = (0.3127, 0.3290)
_SRGB_PRIMARIES = [(0.640, 0.330), (0.300, 0.600), (0.150, 0.060)]
_P3_PRIMARIES = [(0.680, 0.320), (0.265, 0.690), (0.150, 0.060)]

_SRGB_TO_XYZ = _rgb_matrix(_SRGB_PRIMARIES, _D65_XY)
_XYZ_TO_SRGB = np.linalg.inv(_SRGB_TO_XYZ)
_P3_TO_XYZ = _rgb_matrix(_P3_PRIMARIES, _D65_XY)
_XYZ_TO_P3 = np.linalg.inv(_P3_TO_XYZ)

WHITE_D65 = XyzColor(*(_SRGB_TO_XYZ @ np.ones(3)))


def _colors(value, what="color"):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 3:
        raise ValidationError(f"{what} must have 3 components")
    return arr, arr.ndim == 1


def _wrap(arr, single, cls):
    if single:
        return cls(float(arr[..., 0]), float(arr[..., 1]), float(arr[..., 2]))
    return arr


def srgb_decode(v):
    """Gamma-encoded value -> linear, sign-mirrored outside [0, 1]."""
    v = np.asarray(v, dtype=float)
    s = np.sign(v)
    v = np.abs(v)
    lin = np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)
    return s * lin


def srgb_encode(v):
    """Linear value -> gamma-encoded, sign-mirrored outside [0, 1]."""
    v = np.asarray(v, dtype=float)
    s = np.sign(v)
    v = np.abs(v)
    enc = np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1.0 / 2.4) - 0.055)
    return s * enc


def linear_srgb_to_xyz(rgb):
    arr, single = _colors(rgb, "rgb")
    return _wrap(arr @ _SRGB_TO_XYZ.T, single, XyzColor)


def xyz_to_linear_srgb(xyz):
    arr, single = _colors(xyz, "xyz")
    return _wrap(arr @ _XYZ_TO_SRGB.T, single, SrgbColor)


def xyz_to_linear_p3(xyz):
    arr, single = _colors(xyz, "xyz")
    return _wrap(arr @ _XYZ_TO_P3.T, single, SrgbColor)


def srgb_to_xyz(rgb):
    """Gamma-encoded sRGB -> XYZ (D65, Y=1)."""
    arr, single = _colors(rgb, "rgb")
    return _wrap(srgb_decode(arr) @ _SRGB_TO_XYZ.T, single, XyzColor)


def xyz_to_srgb(xyz):
    """XYZ -> gamma-encoded sRGB; out-of-gamut components leave [0, 1]."""
    arr, single = _colors(xyz, "xyz")
    return _wrap(srgb_encode(arr @ _XYZ_TO_SRGB.T), single, SrgbColor)


def p3_to_xyz(rgb):
    """Display-P3 (sRGB transfer curve, P3 primaries) -> XYZ."""
    arr, single = _colors(rgb, "rgb")
    return _wrap(srgb_decode(arr) @ _P3_TO_XYZ.T, single, XyzColor)


def xyz_to_p3(xyz):
    arr, single = _colors(xyz, "xyz")
    return _wrap(srgb_encode(arr @ _XYZ_TO_P3.T), single, SrgbColor)


# --- CIE Lab -----------------------------------------------------------------

_LAB_EPS = (6.0 / 29.0) ** 3
_LAB_KAPPA = 1.0 / (3.0 * (6.0 / 29.0) ** 2)


def _lab_f(t):
    return np.where(t > _LAB_EPS, np.cbrt(t), _LAB_KAPPA * t + 4.0 / 29.0)


def cielab_from_xyz(xyz, white: XyzColor = WHITE_D65):
    """CIE L*a*b* (L* in 0..100) relative to the given white, D65 by default."""
    arr, single = _colors(xyz, "xyz")
    ratios = arr / np.asarray(white, dtype=float)
    f = _lab_f(ratios)
    l = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    out = np.stack([l, a, b], axis=-1)
    return _wrap(out, single, CieLabColor)


# --- Classical difference formulas over CIE Lab ------------------------------


def _lab_pair(lab1, lab2):
    a1 = np.asarray(lab1, dtype=float)
    a2 = np.asarray(lab2, dtype=float)
    if a1.shape[-1] != 3 or a2.shape[-1] != 3:
        raise ValidationError("Lab colors must have 3 components")
    a1, a2 = np.broadcast_arrays(a1, a2)
    return a1, a2


def _scalarize(v):
    return float(v) if np.ndim(v) == 0 else v


def cie76(lab1, lab2):
    """Plain Euclidean distance in CIE Lab."""
    a1, a2 = _lab_pair(lab1, lab2)
    return _scalarize(np.sqrt(np.sum((a1 - a2) ** 2, axis=-1)))


def cie94(lab1, lab2):
    """CIE94, graphic-arts weights (kL=1, K1=0.045, K2=0.015), asymmetric.

    The first argument is the reference color.
    """
    a1, a2 = _lab_pair(lab1, lab2)
    l1, aa1, bb1 = a1[..., 0], a1[..., 1], a1[..., 2]
    l2, aa2, bb2 = a2[..., 0], a2[..., 1], a2[..., 2]
    c1 = np.hypot(aa1, bb1)
    c2 = np.hypot(aa2, bb2)
    dl = l1 - l2
    dc = c1 - c2
    dh2 = np.maximum((aa1 - aa2) ** 2 + (bb1 - bb2) ** 2 - dc * dc, 0.0)
    sc = 1.0 + 0.045 * c1
    sh = 1.0 + 0.015 * c1
    return _scalarize(np.sqrt(dl * dl + (dc / sc) ** 2 + dh2 / (sh * sh)))


def cmc(lab1, lab2, l: float = 2.0, c: float = 1.0):
    """CMC(l:c) difference, 2:1 by default; first argument is the reference."""
    a1, a2 = _lab_pair(lab1, lab2)
    l1, aa1, bb1 = a1[..., 0], a1[..., 1], a1[..., 2]
    l2, aa2, bb2 = a2[..., 0], a2[..., 1], a2[..., 2]
    c1 = np.hypot(aa1, bb1)
    c2 = np.hypot(aa2, bb2)
    dl = l1 - l2
    dc = c1 - c2
    dh2 = np.maximum((aa1 - aa2) ** 2 + (bb1 - bb2) ** 2 - dc * dc, 0.0)
    sl = np.where(l1 < 16.0, 0.511, 0.040975 * l1 / (1.0 + 0.01765 * l1))
    sc = 0.0638 * c1 / (1.0 + 0.0131 * c1) + 0.638
    h1 = np.degrees(np.arctan2(bb1, aa1)) % 360.0
    t = np.where((h1 >= 164.0) & (h1 <= 345.0),
                 0.56 + np.abs(0.2 * np.cos(np.radians(h1 + 168.0))),
                 0.36 + np.abs(0.4 * np.cos(np.radians(h1 + 35.0))))
    c1_4 = c1 ** 4
    f = np.sqrt(c1_4 / (c1_4 + 1900.0))
    sh = sc * (f * t + 1.0 - f)
    return _scalarize(np.sqrt((dl / (l * sl)) ** 2 + (dc / (c * sc)) ** 2
                              + dh2 / (sh * sh)))


def ciede2000(lab1, lab2):
    """CIEDE2000 with kL = kC = kH = 1, including the G and R_T corrections.

    Follows the reference formulation with all hue-average branch cases;
    validated against the published 34-pair test set.
    """
    a1, a2 = _lab_pair(lab1, lab2)
    l1, aa1, bb1 = a1[..., 0], a1[..., 1], a1[..., 2]
    l2, aa2, bb2 = a2[..., 0], a2[..., 1], a2[..., 2]

    c1 = np.hypot(aa1, bb1)
    c2 = np.hypot(aa2, bb2)
    cbar = (c1 + c2) / 2.0
    cbar7 = cbar ** 7
    g = 0.5 * (1.0 - np.sqrt(cbar7 / (cbar7 + 25.0 ** 7)))
    ap1 = (1.0 + g) * aa1
    ap2 = (1.0 + g) * aa2
    cp1 = np.hypot(ap1, bb1)
    cp2 = np.hypot(ap2, bb2)

    hp1 = np.where((ap1 == 0.0) & (bb1 == 0.0), 0.0,
                   np.degrees(np.arctan2(bb1, ap1)) % 360.0)
    hp2 = np.where((ap2 == 0.0) & (bb2 == 0.0), 0.0,
                   np.degrees(np.arctan2(bb2, ap2)) % 360.0)

    dlp = l2 - l1
    dcp = cp2 - cp1

    zero_chroma = cp1 * cp2 == 0.0
    diff = hp2 - hp1
    dhp = np.where(np.abs(diff) <= 180.0, diff,
                   np.where(diff > 180.0, diff - 360.0, diff + 360.0))
    dhp = np.where(zero_chroma, 0.0, dhp)
    dbig_hp = 2.0 * np.sqrt(cp1 * cp2) * np.sin(np.radians(dhp) / 2.0)

    lbp = (l1 + l2) / 2.0
    cbp = (cp1 + cp2) / 2.0
    hsum = hp1 + hp2
    habs = np.abs(hp1 - hp2)
    hbp = np.where(zero_chroma, hsum,
                   np.where(habs <= 180.0, hsum / 2.0,
                            np.where(hsum < 360.0, (hsum + 360.0) / 2.0,
                                     (hsum - 360.0) / 2.0)))

    t = (1.0 - 0.17 * np.cos(np.radians(hbp - 30.0))
         + 0.24 * np.cos(np.radians(2.0 * hbp))
         + 0.32 * np.cos(np.radians(3.0 * hbp + 6.0))
         - 0.20 * np.cos(np.radians(4.0 * hbp - 63.0)))
    dtheta = 30.0 * np.exp(-(((hbp - 275.0) / 25.0) ** 2))
    cbp7 = cbp ** 7
    rc = 2.0 * np.sqrt(cbp7 / (cbp7 + 25.0 ** 7))
    rt = -np.sin(np.radians(2.0 * dtheta)) * rc

    lm50 = (lbp - 50.0) ** 2
    sl = 1.0 + 0.015 * lm50 / np.sqrt(20.0 + lm50)
    sc = 1.0 + 0.045 * cbp
    sh = 1.0 + 0.015 * cbp * t

    return _scalarize(np.sqrt((dlp / sl) ** 2 + (dcp / sc) ** 2
                              + (dbig_hp / sh) ** 2
                              + rt * (dcp / sc) * (dbig_hp / sh)))


# --- Oklab -------------------------------------------------------------------

_OKLAB_M1 = np.array([
    [0.8189330101, 0.3618667424, -0.1288597137],
    [0.0329845436, 0.9293118715, 0.0361456387],
    [0.0482003018, 0.2643662691, 0.6338517070],
])
_OKLAB_M2 = np.array([
    [0.2104542553, 0.7936177850, -0.0040720468],
    [1.9779984951, -2.4285922050, 0.4505937099],
    [0.0259040371, 0.7827717662, -0.8086757660],
])


def oklab_from_xyz(xyz):
    """Oklab coordinates via the published constant matrices and cube root."""
    arr, single = _colors(xyz, "xyz")
    lms = arr @ _OKLAB_M1.T
    out = np.cbrt(lms) @ _OKLAB_M2.T
    return _wrap(out, single, CieLabColor)
