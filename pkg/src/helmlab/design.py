"""Design-system utilities: gamut mapping, WCAG contrast, palettes, mode adaptation.

Everything here works on Helmlab coordinates and defers device questions to a
:class:`GamutSpec`. Gamut mapping reduces chroma at fixed lightness and hue,
which keeps ramps and rings perceptually coherent even when parts of them fall
outside the display gamut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .baselines import srgb_decode, xyz_to_linear_p3, xyz_to_linear_srgb, xyz_to_p3, xyz_to_srgb
from .errors import ContrastError, ConvergenceError, NumericDomainError, ValidationError
from .params import ParameterSet
from .transform import inverse
from .types import HelmlabColor, SrgbColor

_TARGETS = ("srgb", "p3")
_BISECT_MIN_ITERS = 40
_BISECT_WIDTH = 1e-10
_CHROMA_GRID = 1024
_CHROMA_CHUNK = 64
_CONTRAST_L_TOL = 1e-6
_CONTRAST_ITERS = 60
# measured ratios pick up ~1e-14 of float noise through the display round
# trip, which would make e.g. 21:1 on a white background unsatisfiable
_RATIO_SLACK = 1e-9

SEMANTIC_STOPS = (50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 950)


@dataclass(frozen=True)
class GamutSpec:
    """Target display gamut: ``"srgb"`` or ``"p3"`` (Display P3).

    ``tolerance`` is the slack on linear RGB components when deciding
    membership: in gamut means every component lies in [-tol, 1 + tol].
    """

    target: str = "srgb"
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if self.target not in _TARGETS:
            raise ValidationError(
                f"unknown gamut target {self.target!r}; expected one of {_TARGETS}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValidationError("gamut tolerance must be positive and finite")


class GamutMapDetails(NamedTuple):
    chroma_scale: float
    l_clamped: bool


def _linear_components(xyz, spec: GamutSpec) -> np.ndarray:
    fn = xyz_to_linear_srgb if spec.target == "srgb" else xyz_to_linear_p3
    return np.asarray(fn(np.asarray(xyz, dtype=float)), dtype=float)


def in_gamut(xyz, spec: GamutSpec | None = None) -> bool:
    """True when an XYZ color lies inside the target gamut (within tolerance)."""
    spec = GamutSpec() if spec is None else spec
    lin = _linear_components(xyz, spec)
    return bool(np.all(lin >= -spec.tolerance) and np.all(lin <= 1.0 + spec.tolerance))


def _hl(c) -> HelmlabColor:
    if isinstance(c, HelmlabColor):
        return c
    l, a, b = (float(v) for v in c)
    return HelmlabColor(l, a, b)


def _feasible(l: float, a: float, b: float, p: ParameterSet, spec: GamutSpec) -> bool:
    try:
        xyz = inverse(HelmlabColor(l, a, b), p)
    except (NumericDomainError, ConvergenceError):
        # unrepresentable coordinates are by definition outside any display gamut
        return False
    return in_gamut(xyz, spec)


def _feasible_rows(lab: np.ndarray, p: ParameterSet, spec: GamutSpec) -> np.ndarray:
    try:
        xyz = np.asarray(inverse(lab, p), dtype=float)
    except (NumericDomainError, ConvergenceError):
        # batch solve gives up as a whole; sort the rows out one by one
        return np.array([_feasible(r[0], r[1], r[2], p, spec) for r in lab])
    lin = _linear_components(xyz, spec)
    tol = spec.tolerance
    return np.all((lin >= -tol) & (lin <= 1.0 + tol), axis=-1)


def _top_chroma_bracket(c: HelmlabColor, p: ParameterSet,
                        spec: GamutSpec) -> tuple[float, float]:
    """Bracket the topmost in-gamut chroma scale on a fixed descending grid.

    Feasibility along the chroma ray is not always a single interval: near
    the lightness ceiling the fixed-L gamut slice can split into a neutral
    disk plus a detached high-chroma lobe, and a bisection started from the
    full ray lands on the lower boundary. Returns ``(bad, good)`` with
    ``good`` the highest feasible grid scale and ``bad`` the next grid point
    above it.
    """
    ts = np.linspace(0.0, 1.0, _CHROMA_GRID + 1)
    hi = _CHROMA_GRID  # scale 1.0, already known infeasible
    while hi > 1:
        lo = max(hi - _CHROMA_CHUNK, 1)
        block = ts[lo:hi]
        lab = np.empty((block.size, 3))
        lab[:, 0] = c.l
        lab[:, 1] = block * c.a
        lab[:, 2] = block * c.b
        ok = _feasible_rows(lab, p, spec)
        idx = np.flatnonzero(ok)
        if idx.size:
            j = int(idx[-1])
            return float(ts[lo + j + 1]), float(block[j])
        hi = lo
    # only the achromatic end of the grid is feasible
    return float(ts[1]), 0.0


def _bisect_toward(feasible, bad: float, good: float) -> float:
    """Shrink [bad, good] by bisection; returns the surviving feasible end."""
    iters = 0
    while iters < _BISECT_MIN_ITERS or abs(good - bad) >= _BISECT_WIDTH:
        mid = 0.5 * (bad + good)
        if feasible(mid):
            good = mid
        else:
            bad = mid
        iters += 1
    return good


def gamut_map(hl, p: ParameterSet, spec: GamutSpec | None = None, *,
              return_details: bool = False):
    """Map a Helmlab color into the target gamut by chroma reduction.

    Lightness and hue are held fixed while chroma is scaled by the largest
    factor t in [0, 1] whose display image is in gamut, found by a coarse
    descending scan to bracket the boundary followed by binary search. An
    already-in-gamut color is returned unchanged, so the map is idempotent. If even the achromatic color at this lightness is out of
    gamut, lightness is clamped along the gray axis toward mid-gray instead
    and the result is flagged.

    With ``return_details=True`` returns ``(color, GamutMapDetails)`` where
    ``chroma_scale`` is the applied factor and ``l_clamped`` marks the
    gray-axis fallback.
    """
    spec = GamutSpec() if spec is None else spec
    c = _hl(hl)
    if _feasible(c.l, c.a, c.b, p, spec):
        out, details = c, GamutMapDetails(1.0, False)
    elif _feasible(c.l, 0.0, 0.0, p, spec):
        bad, good = _top_chroma_bracket(c, p, spec)
        t = _bisect_toward(lambda m: _feasible(c.l, m * c.a, m * c.b, p, spec), bad, good)
        out, details = HelmlabColor(c.l, t * c.a, t * c.b), GamutMapDetails(t, False)
    else:
        # mid-gray is inside both supported gamuts for any sane parameter set
        if not _feasible(0.5, 0.0, 0.0, p, spec):
            raise NumericDomainError("gamut map", "gray axis leaves the target gamut at L=0.5")
        lv = _bisect_toward(lambda m: _feasible(m, 0.0, 0.0, p, spec), c.l, 0.5)
        out, details = HelmlabColor(lv, 0.0, 0.0), GamutMapDetails(0.0, True)
    return (out, details) if return_details else out


def _display_encode(hl: HelmlabColor, p: ParameterSet, spec: GamutSpec) -> SrgbColor:
    xyz = np.asarray(inverse(hl, p), dtype=float)
    enc = xyz_to_srgb(xyz) if spec.target == "srgb" else xyz_to_p3(xyz)
    vals = np.clip(np.asarray(enc, dtype=float), 0.0, 1.0)
    return SrgbColor(float(vals[0]), float(vals[1]), float(vals[2]))


# --- WCAG contrast -----------------------------------------------------------


def relative_luminance(srgb) -> float:
    """WCAG relative luminance of an encoded sRGB color, components in [0, 1]."""
    r, g, b = (float(v) for v in srgb)
    lin = srgb_decode(np.array([r, g, b]))
    return float(0.2126 * lin[0] + 0.7152 * lin[1] + 0.0722 * lin[2])


def contrast_ratio(srgb1, srgb2) -> float:
    """WCAG 2.x contrast ratio, (Y_lighter + 0.05) / (Y_darker + 0.05)."""
    y1 = relative_luminance(srgb1)
    y2 = relative_luminance(srgb2)
    lighter, darker = (y1, y2) if y1 >= y2 else (y2, y1)
    return (lighter + 0.05) / (darker + 0.05)


def _bisect_l(pred, bad: float, good: float) -> float:
    for _ in range(_CONTRAST_ITERS):
        if abs(good - bad) < _CONTRAST_L_TOL:
            break
        mid = 0.5 * (bad + good)
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good


def ensure_contrast(fg, bg, min_ratio: float, p: ParameterSet) -> HelmlabColor:
    """Adjust foreground lightness until WCAG contrast against bg is met.

    Only L moves; the foreground's (a, b) direction is kept and the candidate
    is gamut-mapped before its luminance is read, so the returned color is
    displayable and its measured ratio is >= ``min_ratio`` up to a 1e-9
    slack that absorbs float noise in the display round trip. Both directions
    are searched and the candidate with the smaller lightness change wins
    (darker on a tie). If neither direction can reach the ratio, raises
    :class:`ContrastError` carrying the best achievable value.

    Contrast is always evaluated in sRGB, per WCAG.
    """
    min_ratio = float(min_ratio)
    if not (1.0 <= min_ratio <= 21.0):
        raise ValidationError("min_ratio must lie in [1, 21]")
    fgc, bgc = _hl(fg), _hl(bg)
    spec = GamutSpec()
    y_bg = relative_luminance(_display_encode(gamut_map(bgc, p, spec), p, spec))

    def luminance_at(lv: float) -> float:
        col = gamut_map(HelmlabColor(lv, fgc.a, fgc.b), p, spec)
        return relative_luminance(_display_encode(col, p, spec))

    def ratio_of(y: float) -> float:
        lighter, darker = (y, y_bg) if y >= y_bg else (y_bg, y)
        return (lighter + 0.05) / (darker + 0.05)

    if ratio_of(luminance_at(fgc.l)) >= min_ratio - _RATIO_SLACK:
        return fgc

    l_top = float(p.neutral_lut.l_nodes[-1])
    l_bot = 0.0
    start = min(max(fgc.l, l_bot), l_top)

    def meets_up(lv: float) -> bool:
        y = luminance_at(lv)
        return y >= y_bg and ratio_of(y) >= min_ratio - _RATIO_SLACK

    def meets_down(lv: float) -> bool:
        y = luminance_at(lv)
        return y <= y_bg and ratio_of(y) >= min_ratio - _RATIO_SLACK

    candidates = []
    if meets_up(l_top):
        candidates.append(_bisect_l(meets_up, start, l_top))
    if meets_down(l_bot):
        candidates.append(_bisect_l(meets_down, start, l_bot))
    if not candidates:
        best = max(ratio_of(luminance_at(l_top)), ratio_of(luminance_at(l_bot)))
        raise ContrastError(min_ratio, best)

    chosen = min(candidates, key=lambda lv: (abs(lv - fgc.l), lv))
    return gamut_map(HelmlabColor(chosen, fgc.a, fgc.b), p, spec)


# --- Palettes ----------------------------------------------------------------


@dataclass(frozen=True)
class PaletteSpec:
    """Recipe for a palette.

    ``kind`` is one of ``"lightness-ramp"`` (evenly spaced L between
    ``l_endpoints`` at fixed chroma/hue), ``"hue-ring"`` (evenly spaced hue at
    fixed L/chroma), or ``"semantic-scale"`` (the 11 stops 50-950 with L
    interpolated linearly between ``l_endpoints``). ``chroma`` and ``hue``
    override the anchor color's values when given; hue is in radians.
    """

    kind: str
    steps: int | None = None
    chroma: float | None = None
    hue: float | None = None
    l_endpoints: tuple[float, float] = (0.97, 0.10)

    def __post_init__(self) -> None:
        kinds = ("lightness-ramp", "hue-ring", "semantic-scale")
        if self.kind not in kinds:
            raise ValidationError(f"unknown palette kind {self.kind!r}; expected one of {kinds}")
        if self.kind == "semantic-scale":
            if self.steps is not None and self.steps != len(SEMANTIC_STOPS):
                raise ValidationError(
                    f"semantic-scale has exactly {len(SEMANTIC_STOPS)} stops")
        else:
            if self.steps is None or int(self.steps) < 2:
                raise ValidationError(f"{self.kind} needs steps >= 2")
        if self.chroma is not None and not (math.isfinite(self.chroma) and self.chroma >= 0):
            raise ValidationError("chroma must be finite and non-negative")
        if self.hue is not None and not math.isfinite(self.hue):
            raise ValidationError("hue must be finite")
        lo, hi = self.l_endpoints
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValidationError("l_endpoints must be finite")


def palette(spec: PaletteSpec, anchor, p: ParameterSet, *,
            gamut: GamutSpec | None = None) -> list[SrgbColor]:
    """Generate a palette anchored at a Helmlab color, gamut-mapped throughout.

    Returns display-encoded colors for the requested gamut (sRGB encoding for
    ``"srgb"``, Display-P3 encoding for ``"p3"``).
    """
    gamut = GamutSpec() if gamut is None else gamut
    a = _hl(anchor)
    chroma = a.chroma if spec.chroma is None else float(spec.chroma)
    hue = a.hue if spec.hue is None else float(spec.hue)

    if spec.kind == "lightness-ramp":
        ls = np.linspace(spec.l_endpoints[0], spec.l_endpoints[1], spec.steps)
        coords = [(lv, hue) for lv in ls]
    elif spec.kind == "hue-ring":
        n = int(spec.steps)
        coords = [(a.l, hue + 2.0 * math.pi * k / n) for k in range(n)]
    else:
        ls = np.linspace(spec.l_endpoints[0], spec.l_endpoints[1], len(SEMANTIC_STOPS))
        coords = [(lv, hue) for lv in ls]

    out = []
    for lv, h in coords:
        hl = HelmlabColor(float(lv), chroma * math.cos(h), chroma * math.sin(h))
        out.append(_display_encode(gamut_map(hl, p, gamut), p, gamut))
    return out


def adapt_mode(c, from_s: float, to_s: float, p: ParameterSet, *,
               gamut: GamutSpec | None = None) -> HelmlabColor:
    """Soft lightness inversion between surround levels.

    L' = (1 - k) * L + k * (1 - L) with k = |to_s - from_s| clamped to [0, 1];
    chroma and hue are preserved and the result gamut-mapped. Identity when
    the surrounds are equal. Note the blend collapses to L' = 0.5 for every
    input at k = 0.5 (the default light 0.7 / dark 0.2 pairing); apply
    :func:`ensure_contrast` afterwards when that matters.
    """
    for name, v in (("from_s", from_s), ("to_s", to_s)):
        if not (0.0 <= float(v) <= 1.0):
            raise ValidationError(f"{name} must lie in [0, 1]")
    col = _hl(c)
    k = min(abs(float(to_s) - float(from_s)), 1.0)
    if k == 0.0:
        return col
    l_adapted = (1.0 - k) * col.l + k * (1.0 - col.l)
    return gamut_map(HelmlabColor(l_adapted, col.a, col.b), p,
                     GamutSpec() if gamut is None else gamut)
