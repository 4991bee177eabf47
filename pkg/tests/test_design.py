import math

import numpy as np
import pytest

from helmlab.baselines import p3_to_xyz, srgb_to_xyz
from helmlab.design import (SEMANTIC_STOPS, GamutSpec, PaletteSpec, adapt_mode,
                            contrast_ratio, ensure_contrast, gamut_map,
                            in_gamut, palette, relative_luminance)
from helmlab.errors import ContrastError, ValidationError
from helmlab.transform import forward, inverse
from helmlab.types import HelmlabColor, SrgbColor


def _hl_of_rgb(rgb, params):
    return forward(srgb_to_xyz(SrgbColor(*rgb)), params)


# --- gamut membership --------------------------------------------------------


def test_gamut_spec_validation():
    GamutSpec("p3")  # fine
    with pytest.raises(ValidationError):
        GamutSpec("rec2020")
    with pytest.raises(ValidationError):
        GamutSpec("srgb", tolerance=0.0)
    with pytest.raises(ValidationError):
        GamutSpec("srgb", tolerance=math.inf)


def test_in_gamut_srgb_cube(rng):
    xyz = np.asarray(srgb_to_xyz(rng.random((32, 3))))
    for row in xyz:
        assert in_gamut(row)


def test_p3_red_is_outside_srgb_inside_p3():
    xyz = p3_to_xyz(SrgbColor(1.0, 0.0, 0.0))
    assert not in_gamut(xyz, GamutSpec("srgb"))
    assert in_gamut(xyz, GamutSpec("p3"))


# --- gamut mapping -----------------------------------------------------------


def test_gamut_map_is_noop_in_gamut(params):
    c = _hl_of_rgb((0.3, 0.5, 0.7), params)
    out, details = gamut_map(c, params, return_details=True)
    assert out == c
    assert details.chroma_scale == 1.0 and not details.l_clamped


def test_gamut_map_idempotent(params):
    # a saturated P3 red is outside sRGB, so the map has work to do
    c = forward(p3_to_xyz(SrgbColor(1.0, 0.05, 0.0)), params)
    once = gamut_map(c, params)
    twice = gamut_map(once, params)
    assert once == twice


def test_gamut_map_preserves_lightness_and_hue(params):
    c = forward(p3_to_xyz(SrgbColor(1.0, 0.05, 0.0)), params)
    out, details = gamut_map(c, params, return_details=True)
    assert 0.0 < details.chroma_scale < 1.0
    assert not details.l_clamped
    assert out.l == c.l
    # chroma scaling cannot rotate the (a, b) direction
    assert abs(math.remainder(out.hue - c.hue, 2.0 * math.pi)) < 1e-6
    assert out.chroma < c.chroma


def test_gamut_map_matches_dense_scan(params):
    # bisection against a brute-force scan over the chroma scale; the probes
    # must land in the chroma-reduction branch (saturated blues and greens
    # carry so much lightness boost that even their gray is out of gamut)
    for rgb in ((1.0, 0.05, 0.0), (1.0, 0.0, 0.6)):
        c = forward(p3_to_xyz(SrgbColor(*rgb)), params)
        _, details = gamut_map(c, params, return_details=True)
        assert not details.l_clamped
        ts = np.linspace(0.0, 1.0, 20001)
        ok = np.array([in_gamut(inverse(HelmlabColor(c.l, t * c.a, t * c.b),
                                        params))
                       for t in ts])
        t_scan = ts[np.flatnonzero(ok)[-1]]
        assert details.chroma_scale == pytest.approx(t_scan, abs=1e-3)


def test_gamut_map_clamps_overbright_saturated_color(params):
    # deep display-P3 blue: the lightness credit for saturated blue pushes
    # its L above anything sRGB can reach, so the gray-axis clamp kicks in
    c = forward(p3_to_xyz(SrgbColor(0.0, 0.3, 1.0)), params)
    out, details = gamut_map(c, params, return_details=True)
    assert details.l_clamped and details.chroma_scale == 0.0
    assert out.a == 0.0 and out.b == 0.0
    assert in_gamut(inverse(out, params))


def test_gamut_map_gray_axis_fallback(params):
    # lightness beyond the white point: even the gray is unrepresentable
    c = HelmlabColor(1.3, 0.02, 0.0)
    out, details = gamut_map(c, params, return_details=True)
    assert details.l_clamped and details.chroma_scale == 0.0
    assert out.a == 0.0 and out.b == 0.0
    assert 0.5 <= out.l < c.l
    assert in_gamut(inverse(out, params))


def test_gamut_map_accepts_plain_tuples(params):
    c = _hl_of_rgb((0.2, 0.4, 0.6), params)
    assert gamut_map((c.l, c.a, c.b), params) == c


# --- WCAG contrast -----------------------------------------------------------


def test_relative_luminance_endpoints():
    assert relative_luminance((1.0, 1.0, 1.0)) == 1.0
    assert relative_luminance((0.0, 0.0, 0.0)) == 0.0
    # coefficient check on primaries
    r = relative_luminance((1.0, 0.0, 0.0))
    g = relative_luminance((0.0, 1.0, 0.0))
    b = relative_luminance((0.0, 0.0, 1.0))
    assert (r, g, b) == pytest.approx((0.2126, 0.7152, 0.0722), abs=1e-12)


def test_contrast_ratio_black_white_exact():
    assert contrast_ratio((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)) == 21.0
    assert contrast_ratio((1.0, 1.0, 1.0), (0.0, 0.0, 0.0)) == 21.0
    assert contrast_ratio((1.0, 1.0, 1.0), (1.0, 1.0, 1.0)) == 1.0


def test_ensure_contrast_already_met(params):
    black = _hl_of_rgb((0.0, 0.0, 0.0), params)
    white = _hl_of_rgb((1.0, 1.0, 1.0), params)
    # the 8-bit endpoints measure exactly 21 up to display round-trip noise
    out = ensure_contrast(black, white, 21.0, params)
    assert out == black


def test_ensure_contrast_raises_lightness_on_dark_bg(params):
    fg = _hl_of_rgb((0.45, 0.45, 0.45), params)
    bg = _hl_of_rgb((0.1, 0.1, 0.1), params)
    out = ensure_contrast(fg, bg, 7.0, params)
    assert out.l > fg.l
    assert (out.a, out.b) == (fg.a, fg.b)
    got = contrast_ratio(_display_of(out, params), _display_of(bg, params))
    assert got >= 7.0 - 2e-9


def test_ensure_contrast_lowers_lightness_on_light_bg(params):
    fg = _hl_of_rgb((0.75, 0.75, 0.75), params)
    bg = _hl_of_rgb((1.0, 1.0, 1.0), params)
    out = ensure_contrast(fg, bg, 4.5, params)
    assert out.l < fg.l
    got = contrast_ratio(_display_of(out, params), _display_of(bg, params))
    assert got >= 4.5 - 2e-9
    # the bisection stops once the met candidate is within the L tolerance
    assert got < 4.6


def _display_of(hl, params):
    from helmlab.baselines import xyz_to_srgb
    vals = np.clip(np.asarray(xyz_to_srgb(inverse(gamut_map(hl, params),
                                                  params))), 0.0, 1.0)
    return SrgbColor(*(float(v) for v in vals))


def test_ensure_contrast_unachievable(params):
    bg = _hl_of_rgb((0.5, 0.5, 0.5), params)
    fg = _hl_of_rgb((0.2, 0.2, 0.2), params)
    with pytest.raises(ContrastError) as exc:
        ensure_contrast(fg, bg, 21.0, params)
    assert exc.value.requested == 21.0
    assert 1.0 < exc.value.best_ratio < 21.0


def test_ensure_contrast_validates_ratio(params):
    fg = _hl_of_rgb((0.3, 0.3, 0.3), params)
    bg = _hl_of_rgb((1.0, 1.0, 1.0), params)
    for bad in (0.5, 21.5, math.nan):
        with pytest.raises(ValidationError):
            ensure_contrast(fg, bg, bad, params)


# --- palettes ----------------------------------------------------------------


def test_palette_spec_validation():
    with pytest.raises(ValidationError):
        PaletteSpec("mood-board", steps=4)
    with pytest.raises(ValidationError):
        PaletteSpec("lightness-ramp", steps=1)
    with pytest.raises(ValidationError):
        PaletteSpec("lightness-ramp")  # steps required
    with pytest.raises(ValidationError):
        PaletteSpec("semantic-scale", steps=7)
    PaletteSpec("semantic-scale")  # steps optional here
    with pytest.raises(ValidationError):
        PaletteSpec("hue-ring", steps=6, chroma=-0.1)
    with pytest.raises(ValidationError):
        PaletteSpec("hue-ring", steps=6, hue=math.inf)
    with pytest.raises(ValidationError):
        PaletteSpec("lightness-ramp", steps=4, l_endpoints=(0.9, math.nan))


def test_lightness_ramp(params):
    anchor = _hl_of_rgb((0.2, 0.4, 0.8), params)
    cols = palette(PaletteSpec("lightness-ramp", steps=7), anchor, params)
    assert len(cols) == 7
    assert all(isinstance(c, SrgbColor) for c in cols)
    ys = [relative_luminance(c) for c in cols]
    assert all(b < a for a, b in zip(ys, ys[1:]))  # light to dark
    for c in cols:
        assert all(0.0 <= v <= 1.0 for v in c)


def test_hue_ring_distinct_hues(params):
    anchor = _hl_of_rgb((0.7, 0.3, 0.3), params)
    cols = palette(PaletteSpec("hue-ring", steps=6), anchor, params)
    assert len(cols) == 6
    assert len({tuple(np.round(c, 6)) for c in cols}) == 6


def test_semantic_scale(params):
    # no absolute luminance claim at stop 50: a saturated blue anchor keeps
    # its chroma, and the lightness credit for it means the displayed
    # luminance sits well below what the L target suggests
    anchor = _hl_of_rgb((0.3, 0.45, 0.9), params)
    cols = palette(PaletteSpec("semantic-scale"), anchor, params)
    assert len(cols) == len(SEMANTIC_STOPS) == 11
    ys = [relative_luminance(c) for c in cols]
    assert all(a > b for a, b in zip(ys, ys[1:]))
    assert ys[0] > 10.0 * ys[-1]
    for c in cols:
        assert all(0.0 <= v <= 1.0 for v in c)


def test_palette_p3_target(params):
    anchor = _hl_of_rgb((0.8, 0.2, 0.2), params)
    cols = palette(PaletteSpec("lightness-ramp", steps=5), anchor, params,
                   gamut=GamutSpec("p3"))
    for c in cols:  # display-p3 encoded components
        assert all(0.0 <= v <= 1.0 for v in c)


def test_palette_chroma_override_maps_into_gamut(params):
    anchor = _hl_of_rgb((0.5, 0.5, 0.5), params)
    cols = palette(PaletteSpec("lightness-ramp", steps=5, chroma=3.0,
                               hue=0.5), anchor, params)
    for c in cols:
        assert all(0.0 <= v <= 1.0 for v in c)


# --- mode adaptation ---------------------------------------------------------


def test_adapt_mode_identity(params):
    c = _hl_of_rgb((0.6, 0.4, 0.2), params)
    assert adapt_mode(c, 0.7, 0.7, params) == c


def test_adapt_mode_full_inversion(params):
    c = HelmlabColor(0.3, 0.0, 0.0)
    out = adapt_mode(c, 0.0, 1.0, params)
    assert out.l == pytest.approx(0.7, abs=1e-12)
    assert out.a == 0.0 and out.b == 0.0


def test_adapt_mode_half_collapses_to_mid(params):
    for l0 in (0.2, 0.5, 0.9):
        out = adapt_mode(HelmlabColor(l0, 0.0, 0.0), 0.7, 0.2, params)
        assert out.l == pytest.approx(0.5, abs=1e-12)


def test_adapt_mode_preserves_hue(params):
    c = _hl_of_rgb((0.2, 0.3, 0.9), params)
    out = adapt_mode(c, 0.2, 0.7, params)
    assert abs(math.remainder(out.hue - c.hue, 2.0 * math.pi)) < 1e-6


def test_adapt_mode_validates_surrounds(params):
    c = HelmlabColor(0.5, 0.0, 0.0)
    with pytest.raises(ValidationError):
        adapt_mode(c, -0.1, 0.5, params)
    with pytest.raises(ValidationError):
        adapt_mode(c, 0.5, 1.5, params)
