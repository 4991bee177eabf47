"""Parameter sets: schema, defaults, validation, JSON serialization.

A full space + metric configuration is 72 scalars:

    m1 (9) + gamma (3) + m2 (9) + hue_corr (8) + hk (6)
    + lightness (8) + chroma (18) + hue_l (4) + distance (7) = 72

plus structural pieces that are not tuned parameters: the rigid output
rotation angle, the surround-modulation block (all zero in this
release), and the derived neutral-correction LUT.

The shipped defaults mix published constants with documented
placeholders; consult PROVENANCE / is_paper_exact before treating any
group as authoritative.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ParseError, ValidationError
from .metric import DistanceParams

if TYPE_CHECKING:
    from .transform import NeutralCorrectionLut

__all__ = [
    "HkParams",
    "LightnessParams",
    "ChromaParams",
    "SurroundParams",
    "ParameterSet",
    "PARAMETER_COUNT",
    "GROUP_SIZES",
    "PROVENANCE",
    "is_paper_exact",
    "default_params",
    "load_params",
    "save_params",
    "dumps_params",
    "loads_params",
]

GROUP_SIZES = {
    "m1": 9,
    "gamma": 3,
    "m2": 9,
    "hue_corr": 8,
    "hk": 6,
    "lightness": 8,
    "chroma": 18,
    "hue_l": 4,
    "distance": 7,
}

PARAMETER_COUNT = sum(GROUP_SIZES.values())  # 72


@dataclass(frozen=True)
class HkParams:
    """Helmholtz-Kohlrausch lightness boost: L += w * C^p * (1 + f(h)).

    f(h) = m cos h + s1 sin h + c2 cos 2h + s2 sin 2h.
    """

    w: float
    p: float
    m: float
    s1: float
    c2: float
    s2: float


@dataclass(frozen=True)
class LightnessParams:
    """Lightness reshaping stage.

    p1..p3 are cubic correction coefficients (L1 = L + p1 L^3 + p2 L^2
    + p3 L + ...), lh_c1/lh_s1 weight the hue-dependent additive term,
    lam_d with h_c/h_s drive the dark-region exponential compression.
    """

    p1: float
    p2: float
    p3: float
    lh_c1: float
    lh_s1: float
    lam_d: float
    h_c: float
    h_s: float


@dataclass(frozen=True, eq=False)
class ChromaParams:
    """Chroma field coefficients, 18 scalars in four blocks.

    scale: 8 Fourier coefficients (cos 1..4h then sin 1..4h) of the
        log hue-dependent chroma gain.
    power: 4 coefficients (cos h, sin h, cos 2h, sin 2h) of the chroma
        power exponent offset eps(h); chroma maps C -> C^(1 + eps).
    l1, l2: lightness-dependent log chroma gain in (L - 0.5).
    interaction: 4 coefficients of the hue term multiplied by (L - 0.5).
    """

    scale: np.ndarray
    power: np.ndarray
    l1: float
    l2: float
    interaction: np.ndarray

    def __post_init__(self):
        for name, size in (("scale", 8), ("power", 4), ("interaction", 4)):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (size,):
                raise ValidationError(f"chroma.{name} must have shape ({size},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, ChromaParams):
            return NotImplemented
        return (
            np.array_equal(self.scale, other.scale)
            and np.array_equal(self.power, other.power)
            and self.l1 == other.l1
            and self.l2 == other.l2
            and np.array_equal(self.interaction, other.interaction)
        )


@dataclass(frozen=True)
class SurroundParams:
    """Surround-modulation coefficients, all zero in this release.

    Hooks exist in the H-K, dark-compression, and lightness-chroma
    stages as (1 + S * coef) factors; with zero coefficients the
    surround level S has no observable effect.
    """

    hk: float = 0.0
    dark: float = 0.0
    chroma: float = 0.0


def _ro_array(value, shape, name) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """Immutable bundle of every number the pipeline and metric consume."""

    m1: np.ndarray
    gamma: np.ndarray
    m2: np.ndarray
    hue_corr: np.ndarray
    hk: HkParams
    lightness: LightnessParams
    chroma: ChromaParams
    hue_l: np.ndarray
    distance: DistanceParams
    rotation_phi_deg: float = -28.2
    surround: SurroundParams = field(default_factory=SurroundParams)
    neutral_lut: "NeutralCorrectionLut | None" = None

    def __post_init__(self):
        object.__setattr__(self, "m1", _ro_array(self.m1, (3, 3), "m1"))
        object.__setattr__(self, "gamma", _ro_array(self.gamma, (3,), "gamma"))
        object.__setattr__(self, "m2", _ro_array(self.m2, (3, 3), "m2"))
        object.__setattr__(self, "hue_corr", _ro_array(self.hue_corr, (8,), "hue_corr"))
        object.__setattr__(self, "hue_l", _ro_array(self.hue_l, (4,), "hue_l"))

    def __eq__(self, other):
        if not isinstance(other, ParameterSet):
            return NotImplemented
        same_lut = (self.neutral_lut is None) == (other.neutral_lut is None)
        if same_lut and self.neutral_lut is not None:
            same_lut = self.neutral_lut.equals(other.neutral_lut)
        return (
            np.array_equal(self.m1, other.m1)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.m2, other.m2)
            and np.array_equal(self.hue_corr, other.hue_corr)
            and self.hk == other.hk
            and self.lightness == other.lightness
            and self.chroma == other.chroma
            and np.array_equal(self.hue_l, other.hue_l)
            and self.distance == other.distance
            and self.rotation_phi_deg == other.rotation_phi_deg
            and self.surround == other.surround
            and same_lut
        )

    def validate(self) -> "ParameterSet":
        """Check every documented invariant; raise ValidationError naming the field."""
        for name in ("m1", "gamma", "m2", "hue_corr", "hue_l"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} contains non-finite values")
        for group, obj in (("hk", self.hk), ("lightness", self.lightness), ("surround", self.surround)):
            for f in dataclasses.fields(obj):
                v = getattr(obj, f.name)
                if not math.isfinite(v):
                    raise ValidationError(f"{group}.{f.name} is not finite")
        for name in ("scale", "power", "interaction"):
            if not np.all(np.isfinite(getattr(self.chroma, name))):
                raise ValidationError(f"chroma.{name} contains non-finite values")
        if not (math.isfinite(self.chroma.l1) and math.isfinite(self.chroma.l2)):
            raise ValidationError("chroma.l1/l2 must be finite")
        if not math.isfinite(self.rotation_phi_deg):
            raise ValidationError("rotation_phi_deg is not finite")
        if abs(float(np.linalg.det(self.m1))) <= 1e-9:
            raise ValidationError("m1 is singular (|det| <= 1e-9)")
        if abs(float(np.linalg.det(self.m2))) <= 1e-9:
            raise ValidationError("m2 is singular (|det| <= 1e-9)")
        if not np.all(self.gamma > 0):
            raise ValidationError("gamma components must be > 0")
        self.distance.validate()
        if self.neutral_lut is not None:
            self.neutral_lut.validate()
        n = sum(GROUP_SIZES.values())
        if n != PARAMETER_COUNT:
            raise ValidationError(f"parameter count {n} != {PARAMETER_COUNT}")
        return self

    def with_neutral_lut(self, lut) -> "ParameterSet":
        return dataclasses.replace(self, neutral_lut=lut)

    def replace(self, **kw) -> "ParameterSet":
        return dataclasses.replace(self, **kw)

    # Flat-vector view in canonical group order, used by the fit module.

    def to_vector(self) -> np.ndarray:
        d = self.distance
        return np.concatenate([
            self.m1.ravel(),
            self.gamma,
            self.m2.ravel(),
            self.hue_corr,
            [self.hk.w, self.hk.p, self.hk.m, self.hk.s1, self.hk.c2, self.hk.s2],
            [self.lightness.p1, self.lightness.p2, self.lightness.p3,
             self.lightness.lh_c1, self.lightness.lh_s1,
             self.lightness.lam_d, self.lightness.h_c, self.lightness.h_s],
            self.chroma.scale,
            self.chroma.power,
            [self.chroma.l1, self.chroma.l2],
            self.chroma.interaction,
            self.hue_l,
            [d.s_l, d.s_c, d.p, d.w_c, d.c, d.q, d.alpha],
        ])

    def from_vector(self, v) -> "ParameterSet":
        """Rebuild a set from a flat 72-vector, keeping structural fields.

        The neutral LUT is dropped (it must be rebuilt for new
        parameters), rotation and surround are carried over unchanged.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (PARAMETER_COUNT,):
            raise ValidationError(f"expected vector of length {PARAMETER_COUNT}")
        i = iter(np.cumsum([9, 3, 9, 8, 6, 8, 8, 4, 2, 4, 4, 7]))
        parts = np.split(v, list(i)[:-1])
        (m1, gamma, m2, hue_corr, hk, light, cscale, cpower, cl, cint, hue_l, dist) = parts
        return ParameterSet(
            m1=m1.reshape(3, 3),
            gamma=gamma,
            m2=m2.reshape(3, 3),
            hue_corr=hue_corr,
            hk=HkParams(*hk),
            lightness=LightnessParams(*light),
            chroma=ChromaParams(scale=cscale, power=cpower, l1=cl[0], l2=cl[1],
                                interaction=cint),
            hue_l=hue_l,
            distance=DistanceParams(*dist),
            rotation_phi_deg=self.rotation_phi_deg,
            surround=self.surround,
            neutral_lut=None,
        )


def vector_names() -> list[str]:
    """Names of the 72 flat-vector slots, aligned with to_vector order."""
    names = [f"m1[{r}][{c}]" for r in range(3) for c in range(3)]
    names += [f"gamma[{i}]" for i in range(3)]
    names += [f"m2[{r}][{c}]" for r in range(3) for c in range(3)]
    names += [f"hue_corr[{i}]" for i in range(8)]
    names += ["hk.w", "hk.p", "hk.m", "hk.s1", "hk.c2", "hk.s2"]
    names += ["lightness.p1", "lightness.p2", "lightness.p3",
              "lightness.lh_c1", "lightness.lh_s1",
              "lightness.lam_d", "lightness.h_c", "lightness.h_s"]
    names += [f"chroma.scale[{i}]" for i in range(8)]
    names += [f"chroma.power[{i}]" for i in range(4)]
    names += ["chroma.l1", "chroma.l2"]
    names += [f"chroma.interaction[{i}]" for i in range(4)]
    names += ["hue_l[0]", "hue_l[1]", "hue_l[2]", "hue_l[3]"]
    names += ["distance.s_l", "distance.s_c", "distance.p", "distance.w_c",
              "distance.c", "distance.q", "distance.alpha"]
    return names


# Which shipped default values come from the published constants table and
# which are documented placeholders awaiting the released parameter file.
PROVENANCE: dict[str, bool] = {
    "m1": True,
    "gamma": True,
    "m2": True,
    "hue_corr": False,
    "hk.w": True,
    "hk.p": True,
    "hk.m": True,
    "hk.s1": False,
    "hk.c2": False,
    "hk.s2": False,
    "lightness.p1": True,
    "lightness.p2": True,
    "lightness.p3": True,
    "lightness.lh_c1": False,
    "lightness.lh_s1": False,
    "lightness.lam_d": False,
    "lightness.h_c": False,
    "lightness.h_s": False,
    "chroma": False,
    "hue_l": False,
    "distance": True,
    "rotation_phi_deg": True,
}


def is_paper_exact(group: str | None = None) -> bool:
    """True when the named group (or, with None, the whole set) is published.

    Accepts either a group name ("hk") or a field path ("hk.s1").
    """
    if group is None:
        return all(PROVENANCE.values())
    if group in PROVENANCE:
        return PROVENANCE[group]
    prefix = group.split(".", 1)[0]
    if prefix in PROVENANCE:
        return PROVENANCE[prefix]
    keys = [k for k in PROVENANCE if k.startswith(prefix + ".")]
    if not keys:
        raise ValidationError(f"unknown parameter group {group!r}")
    return all(PROVENANCE[k] for k in keys)


def default_params(with_lut: bool = True) -> ParameterSet:
    """The shipped default configuration.

    Matrices, gamma, the printed H-K and cubic constants, the distance
    block, and the rotation angle are the published values. Every other
    coefficient is a small documented placeholder (|x| <= 0.1), chosen
    nonzero so all pipeline machinery is exercised; see PROVENANCE.
    """
    p = ParameterSet(
        m1=[[0.734, 0.240, -0.158],
            [-0.330, 1.235, -0.000],
            [0.086, 0.341, 0.832]],
        gamma=[0.389, 0.416, 0.424],
        m2=[[-0.420, 0.485, 0.642],
            [1.933, -2.718, 0.764],
            [0.006, 1.628, -1.261]],
        hue_corr=[0.04, -0.03, 0.02, -0.01, -0.05, 0.03, -0.02, 0.01],
        hk=HkParams(w=0.389, p=0.849, m=-0.494, s1=0.06, c2=-0.05, s2=0.03),
        lightness=LightnessParams(p1=0.222, p2=-0.727, p3=0.695,
                                  lh_c1=0.04, lh_s1=-0.03,
                                  lam_d=-0.10, h_c=0.05, h_s=-0.04),
        chroma=ChromaParams(
            scale=[0.05, -0.04, 0.03, -0.02, -0.03, 0.02, 0.02, -0.01],
            power=[0.03, -0.02, 0.02, -0.01],
            l1=0.08, l2=-0.05,
            interaction=[0.03, -0.02, 0.02, -0.02],
        ),
        hue_l=[0.05, -0.02, -0.04, 0.02],
        distance=DistanceParams(s_l=1.01e-3, s_c=0.022, p=0.804,
                                w_c=1.046, c=1.590, q=1.100, alpha=0.000),
        rotation_phi_deg=-28.2,
    ).validate()
    if with_lut:
        from .transform import build_neutral_lut

        p = p.with_neutral_lut(build_neutral_lut(p))
    return p


# ---------------------------------------------------------------------------
# JSON serialization. Numbers are written with 17 significant digits so the
# file round-trips bit exactly; a tiny recursive emitter keeps the format
# stable instead of fighting json.dump float handling.


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  "{k}": {_emit(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = [_emit(v, indent + 1) for v in obj]
        if all(isinstance(v, (int, float)) for v in obj):
            return "[" + ", ".join(inner) + "]"
        return "[\n" + ",\n".join(f"{pad}  {s}" for s in inner) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_params(p: ParameterSet) -> str:
    """Serialize a ParameterSet to the canonical JSON text."""
    doc: dict = {
        "m1": [list(row) for row in p.m1],
        "gamma": list(p.gamma),
        "m2": [list(row) for row in p.m2],
        "hue_corr": list(p.hue_corr),
        "hk": [p.hk.w, p.hk.p, p.hk.m, p.hk.s1, p.hk.c2, p.hk.s2],
        "lightness": [p.lightness.p1, p.lightness.p2, p.lightness.p3,
                      p.lightness.lh_c1, p.lightness.lh_s1,
                      p.lightness.lam_d, p.lightness.h_c, p.lightness.h_s],
        "chroma": list(p.chroma.scale) + list(p.chroma.power)
                  + [p.chroma.l1, p.chroma.l2] + list(p.chroma.interaction),
        "hue_l": list(p.hue_l),
        "distance": {"sL": p.distance.s_l, "sC": p.distance.s_c,
                     "p": p.distance.p, "wC": p.distance.w_c,
                     "c": p.distance.c, "q": p.distance.q,
                     "alpha": p.distance.alpha},
        "surround": {"hk": p.surround.hk, "dark": p.surround.dark,
                     "chroma": p.surround.chroma},
        "rotation_phi_deg": p.rotation_phi_deg,
    }
    if p.neutral_lut is not None:
        doc["neutral_lut"] = {
            "L": list(p.neutral_lut.l_nodes),
            "a_err": list(p.neutral_lut.a_err_nodes),
            "b_err": list(p.neutral_lut.b_err_nodes),
        }
    return _emit(doc, 0) + "\n"


def _require(doc: dict, key: str, kind, shape=None):
    if key not in doc:
        raise ParseError(f"missing required key {key!r}")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ParseError(f"{key} must be a number")
        return float(value)
    if kind is list:
        arr = np.asarray(value, dtype=object)
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ParseError(f"{key} must be an array of numbers") from None
        if shape is not None and arr.shape != shape:
            raise ParseError(f"{key} must have shape {shape}, got {arr.shape}")
        return arr
    if kind is dict:
        if not isinstance(value, dict):
            raise ParseError(f"{key} must be an object")
        return value
    raise AssertionError(kind)


def loads_params(text: str) -> ParameterSet:
    """Parse the canonical JSON text into a validated ParameterSet."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")

    m1 = _require(doc, "m1", list, (3, 3))
    gamma = _require(doc, "gamma", list, (3,))
    m2 = _require(doc, "m2", list, (3, 3))
    hue_corr = _require(doc, "hue_corr", list, (8,))
    hk = _require(doc, "hk", list, (6,))
    light = _require(doc, "lightness", list, (8,))
    chroma = _require(doc, "chroma", list, (18,))
    hue_l = _require(doc, "hue_l", list, (4,))
    dist_doc = _require(doc, "distance", dict)
    dist_vals = []
    for key in ("sL", "sC", "p", "wC", "c", "q", "alpha"):
        if key not in dist_doc:
            raise ParseError(f"distance is missing key {key!r}")
        v = dist_doc[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ParseError(f"distance.{key} must be a number")
        dist_vals.append(float(v))
    phi = _require(doc, "rotation_phi_deg", float)

    surround = SurroundParams()
    if "surround" in doc:
        sdoc = _require(doc, "surround", dict)
        vals = {}
        for key in ("hk", "dark", "chroma"):
            v = sdoc.get(key, 0.0)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParseError(f"surround.{key} must be a number")
            vals[key] = float(v)
        surround = SurroundParams(**vals)

    lut = None
    if "neutral_lut" in doc:
        ldoc = _require(doc, "neutral_lut", dict)
        for key in ("L", "a_err", "b_err"):
            if key not in ldoc:
                raise ParseError(f"neutral_lut is missing key {key!r}")
        from .transform import NeutralCorrectionLut

        try:
            lut = NeutralCorrectionLut.from_nodes(
                np.asarray(ldoc["L"], dtype=float),
                np.asarray(ldoc["a_err"], dtype=float),
                np.asarray(ldoc["b_err"], dtype=float),
            )
        except (TypeError, ValueError):
            raise ParseError("neutral_lut arrays must be numeric") from None

    p = ParameterSet(
        m1=m1, gamma=gamma, m2=m2, hue_corr=hue_corr,
        hk=HkParams(*hk),
        lightness=LightnessParams(*light),
        chroma=ChromaParams(scale=chroma[:8], power=chroma[8:12],
                            l1=chroma[12], l2=chroma[13],
                            interaction=chroma[14:18]),
        hue_l=hue_l,
        distance=DistanceParams(*dist_vals),
        rotation_phi_deg=phi,
        surround=surround,
        neutral_lut=lut,
    )
    return p.validate()


def save_params(p: ParameterSet, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_params(p))


def load_params(path: str | os.PathLike) -> ParameterSet:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ParseError(f"cannot read parameter file {path}: {e}") from None
    return loads_params(text)
