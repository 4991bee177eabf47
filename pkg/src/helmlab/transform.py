"""The invertible XYZ -> Helmlab pipeline.

Eleven stages run in a fixed order:

     1  linear primary mix            c  = M1 xyz
     2  signed per-channel power      c' = sign(c) |c|^gamma
     3  opponent projection           (L, a, b) = M2 c'
     4  hue-angle correction          rotate (a, b) by delta(h), chroma kept
     5  Helmholtz-Kohlrausch boost    L += w C^p (1 + f(h))
     6  lightness reshaping           cubic correction, then dark compression
     7a hue-dependent chroma gain     (a, b) *= exp(Fourier4(h))
     7b chroma power                  C -> C^(1 + eps(h))
     7c lightness-dependent gain      (a, b) *= exp(l1 dL + l2 dL^2)
     7d hue x lightness interaction   (a, b) *= exp(dL * Fourier2(h))
     9  hue-dependent L gain          L *= exp(g(h))
    10  neutral correction            subtract the gray-axis error at this L
    11  rigid rotation of (a, b)      distance invariant

The hue angle is recomputed from the current (a, b) at the entry of
every stage that references it. Stages 7a-7d scale (a, b) by positive
factors, so hue survives them unchanged; that is what makes their
inverses closed form. Only the stage 4 rotation and the two lightness
equations of stage 6 need Newton iteration on the way back.

Inputs are not clamped: any finite XYZ goes through, in-gamut or not.
A non-finite intermediate raises NumericDomainError naming the stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    ConfigurationError,
    ConvergenceError,
    LutConstructionError,
    NumericDomainError,
    ValidationError,
)
from .params import ParameterSet
from .types import HelmlabColor, XyzColor

__all__ = [
    "StageMask",
    "NeutralCorrectionLut",
    "forward",
    "inverse",
    "build_neutral_lut",
    "stage_hue_angle",
]

NEWTON_TOL = 1e-13
NEWTON_CAP = 50
CHROMA_POWER_GUARD = 1e-12  # below this chroma, stage 7b is the identity
LUT_SAMPLES = 256
LUT_Y_RANGE = (0.001, 2.0)
DEFAULT_SURROUND_LEVEL = 0.5  # inert while surround coefficients are zero


@dataclass(frozen=True)
class StageMask:
    """Per-stage enable switches; the default is the full pipeline.

    The cubic part of stage 6 is structural and cannot be disabled,
    only its dark-compression half can.
    """

    hue_correction: bool = True       # stage 4
    hk: bool = True                   # stage 5
    dark_compression: bool = True     # stage 6, exponential half
    chroma_hue: bool = True           # stage 7a
    chroma_power: bool = True         # stage 7b
    chroma_lightness: bool = True     # stage 7c
    chroma_interaction: bool = True   # stage 7d
    hue_lightness: bool = True        # stage 9
    neutral_correction: bool = True   # stage 10
    rotation: bool = True             # stage 11

    def without(self, *names: str) -> "StageMask":
        for n in names:
            if n not in self.__dataclass_fields__:
                raise ValidationError(f"unknown stage name {n!r}")
        return StageMask(**{f: (False if f in names else getattr(self, f))
                            for f in self.__dataclass_fields__})


FULL_PIPELINE = StageMask()


class NeutralCorrectionLut:
    """Gray-axis error curves a_err(L), b_err(L) as monotone PCHIP interpolants.

    Nodes come from a dense gray sweep through stages 1..9; the
    interpolant passes exactly through every node, so the grays used to
    build it map to zero chroma after subtraction.
    """

    __slots__ = ("l_nodes", "a_err_nodes", "b_err_nodes", "_ab")

    def __init__(self, l_nodes, a_err_nodes, b_err_nodes):
        self.l_nodes = np.asarray(l_nodes, dtype=float)
        self.a_err_nodes = np.asarray(a_err_nodes, dtype=float)
        self.b_err_nodes = np.asarray(b_err_nodes, dtype=float)
        self.validate()
        # one interpolant for both columns; the table is rebuilt at every
        # optimizer trial point, so construction cost matters
        self._ab = PchipInterpolator(
            self.l_nodes,
            np.column_stack([self.a_err_nodes, self.b_err_nodes]),
            extrapolate=True)

    @classmethod
    def from_nodes(cls, l_nodes, a_err_nodes, b_err_nodes) -> "NeutralCorrectionLut":
        return cls(l_nodes, a_err_nodes, b_err_nodes)

    def validate(self) -> None:
        if self.l_nodes.ndim != 1 or self.l_nodes.size < 2:
            raise ValidationError("neutral_lut.L must be a 1-d array with >= 2 nodes")
        if self.a_err_nodes.shape != self.l_nodes.shape or self.b_err_nodes.shape != self.l_nodes.shape:
            raise ValidationError("neutral_lut arrays must share one length")
        for name, arr in (("L", self.l_nodes), ("a_err", self.a_err_nodes),
                          ("b_err", self.b_err_nodes)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"neutral_lut.{name} contains non-finite values")
        if not np.all(np.diff(self.l_nodes) > 0):
            raise ValidationError("neutral_lut.L nodes must be strictly increasing")

    def a_err(self, l):
        return self._ab(l)[..., 0]

    def b_err(self, l):
        return self._ab(l)[..., 1]

    def ab_err(self, l):
        """Both error curves at once, shape ``l.shape + (2,)``."""
        return self._ab(l)

    def equals(self, other: "NeutralCorrectionLut") -> bool:
        return (
            np.array_equal(self.l_nodes, other.l_nodes)
            and np.array_equal(self.a_err_nodes, other.a_err_nodes)
            and np.array_equal(self.b_err_nodes, other.b_err_nodes)
        )


def stage_hue_angle(a, b):
    """Hue angle atan2(b, a) mapped into (-pi, pi]; (0, 0) -> 0 by convention."""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    h = np.arctan2(b_arr, a_arr)
    h = np.where(h <= -np.pi, np.pi, h)
    if h.ndim == 0:
        return float(h)
    return h


def _cs2(h, c1, s1, c2, s2):
    """c1 cos h + s1 sin h + c2 cos 2h + s2 sin 2h."""
    z1 = np.exp(1j * np.asarray(h, dtype=float))
    z2 = z1 * z1
    return c1 * z1.real + s1 * z1.imag + c2 * z2.real + s2 * z2.imag


def _fourier4(h, coeffs):
    """Four-harmonic series: coeffs[0:4] are cos k h, coeffs[4:8] are sin k h.

    The harmonics come from complex powers of exp(i h), one
    transcendental evaluation instead of eight; this sits on the hot
    path of every gradient step during fitting.
    """
    z1 = np.exp(1j * np.asarray(h, dtype=float))
    z2 = z1 * z1
    z3 = z2 * z1
    z4 = z2 * z2
    return (coeffs[0] * z1.real + coeffs[4] * z1.imag
            + coeffs[1] * z2.real + coeffs[5] * z2.imag
            + coeffs[2] * z3.real + coeffs[6] * z3.imag
            + coeffs[3] * z4.real + coeffs[7] * z4.imag)


def _dfourier4(h, coeffs):
    z1 = np.exp(1j * np.asarray(h, dtype=float))
    z2 = z1 * z1
    z3 = z2 * z1
    z4 = z2 * z2
    return (-coeffs[0] * z1.imag + coeffs[4] * z1.real
            + 2.0 * (-coeffs[1] * z2.imag + coeffs[5] * z2.real)
            + 3.0 * (-coeffs[2] * z3.imag + coeffs[6] * z3.real)
            + 4.0 * (-coeffs[3] * z4.imag + coeffs[7] * z4.real))


def _check(stage: str, *arrays) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericDomainError(stage)


def _coerce(points, what: str):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 3:
        raise ValidationError(f"{what} must have 3 components per color")
    single = arr.ndim == 1
    pts = arr.reshape(-1, 3)
    if not np.all(np.isfinite(pts)):
        raise NumericDomainError("input", f"non-finite {what}")
    return arr, pts, single


def _lightness_hue_gain(h, hue_l):
    # hue_l is stored in (g_c1, g_c2, g_s1, g_s2) order
    return _cs2(h, hue_l[0], hue_l[2], hue_l[1], hue_l[3])


def _forward_channels(pts, p, mask, surround_level):
    s = surround_level
    c = pts @ p.m1.T
    _check("stage 1 (primaries)", c)
    cp = np.sign(c) * np.abs(c) ** p.gamma
    _check("stage 2 (channel compression)", cp)
    lab = cp @ p.m2.T
    _check("stage 3 (opponent projection)", lab)
    l = lab[:, 0].copy()
    a = lab[:, 1].copy()
    b = lab[:, 2].copy()

    if mask.hue_correction:
        h = np.arctan2(b, a)
        delta = _fourier4(h, p.hue_corr)
        cd, sd = np.cos(delta), np.sin(delta)
        a, b = a * cd - b * sd, a * sd + b * cd
        _check("stage 4 (hue correction)", a, b)

    if mask.hk:
        h = np.arctan2(b, a)
        chroma = np.hypot(a, b)
        f = _cs2(h, p.hk.m, p.hk.s1, p.hk.c2, p.hk.s2)
        l = l + p.hk.w * chroma ** p.hk.p * (1.0 + f) * (1.0 + s * p.surround.hk)
        _check("stage 5 (hk boost)", l)

    h = np.arctan2(b, a)
    flh = p.lightness.lh_c1 * np.cos(h) + p.lightness.lh_s1 * np.sin(h)
    l1 = l + p.lightness.p1 * l ** 3 + p.lightness.p2 * l ** 2 + p.lightness.p3 * l \
        + l * (1.0 - l) * flh
    if mask.dark_compression:
        lam = p.lightness.lam_d * (1.0 + p.lightness.h_c * np.cos(h)
                                   + p.lightness.h_s * np.sin(h))
        lam = lam * (1.0 + s * p.surround.dark)
        l = l1 * np.exp(lam * l1 * (1.0 - l1) ** 2)
    else:
        l = l1
    _check("stage 6 (lightness reshaping)", l)

    if mask.chroma_hue:
        h = np.arctan2(b, a)
        gain = np.exp(_fourier4(h, p.chroma.scale))
        a, b = a * gain, b * gain
        _check("stage 7a (chroma hue gain)", a, b)

    if mask.chroma_power:
        h = np.arctan2(b, a)
        chroma = np.hypot(a, b)
        eps = _cs2(h, *p.chroma.power)
        # C^eps is ill-defined at C = 0; tiny chromas pass through untouched
        tiny = chroma < CHROMA_POWER_GUARD
        safe = np.where(tiny, 1.0, chroma)
        gain = np.where(tiny, 1.0, safe ** eps)
        a, b = a * gain, b * gain
        _check("stage 7b (chroma power)", a, b)

    if mask.chroma_lightness:
        dl = l - 0.5
        gain = np.exp(p.chroma.l1 * dl + p.chroma.l2 * dl ** 2)
        gain = gain * (1.0 + s * p.surround.chroma)
        a, b = a * gain, b * gain
        _check("stage 7c (chroma lightness gain)", a, b)

    if mask.chroma_interaction:
        h = np.arctan2(b, a)
        gain = np.exp((l - 0.5) * _cs2(h, *p.chroma.interaction))
        a, b = a * gain, b * gain
        _check("stage 7d (chroma interaction)", a, b)

    if mask.hue_lightness:
        h = np.arctan2(b, a)
        l = l * np.exp(_lightness_hue_gain(h, p.hue_l))
        _check("stage 9 (hue lightness gain)", l)

    if mask.neutral_correction:
        if p.neutral_lut is None:
            raise ConfigurationError(
                "neutral correction enabled but ParameterSet.neutral_lut is missing; "
                "build one with build_neutral_lut()")
        err = p.neutral_lut.ab_err(l)
        a = a - err[..., 0]
        b = b - err[..., 1]
        _check("stage 10 (neutral correction)", a, b)

    if mask.rotation:
        phi = math.radians(p.rotation_phi_deg)
        cp_, sp_ = math.cos(phi), math.sin(phi)
        a, b = a * cp_ - b * sp_, a * sp_ + b * cp_

    return l, a, b


def forward(xyz, p: ParameterSet, mask: StageMask | None = None, *,
            surround_level: float = DEFAULT_SURROUND_LEVEL):
    """Transform XYZ (D65, Y=1 white) into Helmlab coordinates.

    Accepts a single color (length-3 sequence, returns HelmlabColor) or
    an array of shape (..., 3) (returns an equally shaped array).
    """
    mask = FULL_PIPELINE if mask is None else mask
    arr, pts, single = _coerce(xyz, "xyz")
    # extreme trial parameters overflow into inf/nan, which _check turns
    # into NumericDomainError; the interim warnings are just noise
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        l, a, b = _forward_channels(pts, p, mask, surround_level)
    out = np.stack([l, a, b], axis=-1).reshape(arr.shape)
    if single:
        return HelmlabColor(float(out[0]), float(out[1]), float(out[2]))
    return out


def _newton(func, deriv, x0, stage: str):
    """Vectorized Newton iteration; converges to |f| < NEWTON_TOL or raises.

    One extra step runs after the tolerance is met: quadratic
    convergence turns the 1e-13 residual into the floating-point floor,
    which is what keeps full round trips below 1e-12.
    """
    x = np.array(x0, dtype=float)
    fx = func(x)
    converged = False
    for _ in range(NEWTON_CAP):
        bad = ~(np.abs(fx) < NEWTON_TOL)
        if not bad.any():
            converged = True
            break
        d = deriv(x)
        step = np.zeros_like(x)
        np.divide(fx, d, out=step, where=bad & (d != 0.0))
        x = x - step
        fx = func(x)
    if not converged:
        bad = ~(np.abs(fx) < NEWTON_TOL)
        if bad.any():
            resid = float(np.nanmax(np.abs(np.where(bad, fx, 0.0))))
            if not math.isfinite(resid):
                resid = float("inf")
            raise ConvergenceError(stage, resid, NEWTON_CAP)
    d = deriv(x)
    step = np.zeros_like(x)
    np.divide(fx, d, out=step, where=d != 0.0)
    return x - step


def _inverse_channels(pts, p, mask, surround_level):
    s = surround_level
    l = pts[:, 0].copy()
    a = pts[:, 1].copy()
    b = pts[:, 2].copy()

    if mask.rotation:
        phi = math.radians(p.rotation_phi_deg)
        cp_, sp_ = math.cos(phi), math.sin(phi)
        a, b = a * cp_ + b * sp_, -a * sp_ + b * cp_

    if mask.neutral_correction:
        if p.neutral_lut is None:
            raise ConfigurationError(
                "neutral correction enabled but ParameterSet.neutral_lut is missing; "
                "build one with build_neutral_lut()")
        # stage 10 never touches L, so the stored L keys the same node lookup
        err = p.neutral_lut.ab_err(l)
        a = a + err[..., 0]
        b = b + err[..., 1]

    if mask.hue_lightness:
        h = np.arctan2(b, a)
        l = l / np.exp(_lightness_hue_gain(h, p.hue_l))
        _check("stage 9 inverse", l)

    if mask.chroma_interaction:
        h = np.arctan2(b, a)  # positive scaling preserved this hue
        gain = np.exp((l - 0.5) * _cs2(h, *p.chroma.interaction))
        a, b = a / gain, b / gain
        _check("stage 7d inverse", a, b)

    if mask.chroma_lightness:
        dl = l - 0.5
        gain = np.exp(p.chroma.l1 * dl + p.chroma.l2 * dl ** 2)
        gain = gain * (1.0 + s * p.surround.chroma)
        a, b = a / gain, b / gain
        _check("stage 7c inverse", a, b)

    if mask.chroma_power:
        h = np.arctan2(b, a)
        eps = _cs2(h, *p.chroma.power)
        exponent = 1.0 + eps
        chroma_out = np.hypot(a, b)
        live = chroma_out >= CHROMA_POWER_GUARD
        if np.any(live & (np.abs(exponent) < 1e-9)):
            raise NumericDomainError("stage 7b inverse",
                                     "chroma power exponent vanishes")
        safe = np.where(live, chroma_out, 1.0)
        gain = np.where(live, safe ** (1.0 / exponent - 1.0), 1.0)
        a, b = a * gain, b * gain
        _check("stage 7b inverse", a, b)

    if mask.chroma_hue:
        h = np.arctan2(b, a)
        gain = np.exp(_fourier4(h, p.chroma.scale))
        a, b = a / gain, b / gain
        _check("stage 7a inverse", a, b)

    # stage 6: L2 -> L1 (dark compression), then L1 -> L (cubic correction)
    h = np.arctan2(b, a)
    if mask.dark_compression:
        lam = p.lightness.lam_d * (1.0 + p.lightness.h_c * np.cos(h)
                                   + p.lightness.h_s * np.sin(h))
        lam = lam * (1.0 + s * p.surround.dark)
        target = l

        def f_dark(x):
            return x * np.exp(lam * x * (1.0 - x) ** 2) - target

        def df_dark(x):
            g = x * (1.0 - x) ** 2
            dg = 1.0 - 4.0 * x + 3.0 * x ** 2
            return np.exp(lam * g) * (1.0 + lam * x * dg)

        l1 = _newton(f_dark, df_dark, target, "stage 6 inverse (dark compression)")
    else:
        l1 = l
    flh = p.lightness.lh_c1 * np.cos(h) + p.lightness.lh_s1 * np.sin(h)
    lp = p.lightness

    def f_cubic(x):
        return (x + lp.p1 * x ** 3 + lp.p2 * x ** 2 + lp.p3 * x
                + x * (1.0 - x) * flh - l1)

    def df_cubic(x):
        return 1.0 + 3.0 * lp.p1 * x ** 2 + 2.0 * lp.p2 * x + lp.p3 \
            + (1.0 - 2.0 * x) * flh

    l = _newton(f_cubic, df_cubic, l1, "stage 6 inverse (cubic correction)")

    if mask.hk:
        h = np.arctan2(b, a)
        chroma = np.hypot(a, b)
        f = _cs2(h, p.hk.m, p.hk.s1, p.hk.c2, p.hk.s2)
        l = l - p.hk.w * chroma ** p.hk.p * (1.0 + f) * (1.0 + s * p.surround.hk)
        _check("stage 5 inverse", l)

    if mask.hue_correction:
        h_out = np.arctan2(b, a)
        coeffs = p.hue_corr

        def f_hue(x):
            return x + _fourier4(x, coeffs) - h_out

        def df_hue(x):
            return 1.0 + _dfourier4(x, coeffs)

        h_in = _newton(f_hue, df_hue, h_out, "stage 4 inverse (hue correction)")
        delta = _fourier4(h_in, coeffs)
        cd, sd = np.cos(delta), np.sin(delta)
        a, b = a * cd + b * sd, -a * sd + b * cd
        _check("stage 4 inverse", a, b)

    lab = np.stack([l, a, b], axis=-1)
    cp = lab @ np.linalg.inv(p.m2).T
    _check("stage 3 inverse", cp)
    c = np.sign(cp) * np.abs(cp) ** (1.0 / p.gamma)
    _check("stage 2 inverse", c)
    xyz = c @ np.linalg.inv(p.m1).T
    _check("stage 1 inverse", xyz)
    return xyz


def inverse(hl, p: ParameterSet, mask: StageMask | None = None, *,
            surround_level: float = DEFAULT_SURROUND_LEVEL):
    """Map Helmlab coordinates back to XYZ, undoing exactly the masked stages.

    Single colors come back as XyzColor, batches as arrays of the input
    shape. Newton steps converge to |f| < 1e-13 or raise
    ConvergenceError naming the stage.
    """
    mask = FULL_PIPELINE if mask is None else mask
    arr, pts, single = _coerce(hl, "helmlab")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        xyz = _inverse_channels(pts, p, mask, surround_level).reshape(arr.shape)
    if single:
        return XyzColor(float(xyz[0]), float(xyz[1]), float(xyz[2]))
    return xyz


def build_neutral_lut(p: ParameterSet, mask: StageMask | None = None,
                      samples: int = LUT_SAMPLES,
                      y_range: tuple[float, float] = LUT_Y_RANGE) -> NeutralCorrectionLut:
    """Sweep grays through stages 1..9 and fit the residual chroma curves.

    256 grays, geometrically spaced in Y over [0.001, 2.0] so the dark
    end is densely sampled, define the working nodes. Below the sweep a
    short geometric anchor ramp (down to Y = 1e-6) plus an exact origin
    node are prepended: the origin keeps XYZ=(0,0,0) a fixed point of
    the corrected pipeline, and the ramp stops the long origin segment
    from polluting the interpolant slope at the dark end of the sweep.
    Raises LutConstructionError when the gray lightness ramp is not
    strictly monotone under the given parameters.
    """
    from .baselines import WHITE_D65

    base = FULL_PIPELINE if mask is None else mask
    sweep_mask = base.without("neutral_correction", "rotation")
    y_lo, y_hi = y_range
    if not (0.0 < y_lo < y_hi):
        raise ValidationError("y_range must satisfy 0 < lo < hi")
    ys = np.geomspace(y_lo, y_hi, samples)
    anchor_lo = y_lo * 1e-3
    ys = np.concatenate([np.geomspace(anchor_lo, y_lo, 33)[:-1], ys])
    grays = ys[:, None] * np.asarray(WHITE_D65, dtype=float)[None, :]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        l, a, b = _forward_channels(grays, p, sweep_mask, DEFAULT_SURROUND_LEVEL)
    if not np.all(np.diff(l) > 0):
        raise LutConstructionError(
            "gray lightness ramp is not strictly increasing for this parameter set")
    if l[0] > 0.0:
        l = np.concatenate([[0.0], l])
        a = np.concatenate([[0.0], a])
        b = np.concatenate([[0.0], b])
    return NeutralCorrectionLut(l, a, b)
