"""Token export to CSS, Android XML, iOS Swift, Tailwind config, and JSON.

Formats that commit to a display gamut (all but the JSON document's raw
coordinates) gamut-map their colors first and record a warning line in the
output header for every token that needed it. Hex values quantize to 8 bits
with round-half-to-even.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .baselines import oklab_from_xyz
from .design import GamutSpec, _display_encode, gamut_map
from .errors import ParseError, ValidationError
from .params import ParameterSet
from .transform import inverse
from .types import HelmlabColor

FORMATS = ("css", "android", "ios", "tailwind", "json")
_SLUG = re.compile(r"[a-z0-9-]+")
_JSON_FORMAT_TAG = "helmlab-tokens"


@dataclass(frozen=True)
class TokenEntry:
    """One named color with optional role metadata (scale stop, semantic tag)."""

    name: str
    color: HelmlabColor
    stop: int | None = None
    tag: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.color, HelmlabColor):
            l, a, b = (float(v) for v in self.color)
            object.__setattr__(self, "color", HelmlabColor(l, a, b))
        if self.stop is not None:
            object.__setattr__(self, "stop", int(self.stop))


@dataclass(frozen=True)
class TokenSet:
    entries: tuple[TokenEntry, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if not e.name or not _SLUG.fullmatch(e.name):
                raise ValidationError(
                    f"token name {e.name!r} must be a nonempty [a-z0-9-] slug")
            if e.name in seen:
                raise ValidationError(f"duplicate token name {e.name!r}")
            seen.add(e.name)

    def __len__(self) -> int:
        return len(self.entries)


def _map_all(ts: TokenSet, p: ParameterSet, spec: GamutSpec):
    """Gamut-map every entry; returns (mapped colors, warning lines)."""
    mapped, warnings = [], []
    for e in ts.entries:
        color, details = gamut_map(e.color, p, spec, return_details=True)
        mapped.append(color)
        if details.l_clamped:
            warnings.append(f"{e.name}: out of {spec.target} gamut, lightness clamped to {color.l:.4f}")
        elif details.chroma_scale < 1.0:
            warnings.append(f"{e.name}: out of {spec.target} gamut, chroma scaled to {details.chroma_scale:.4f}")
    return mapped, warnings


def _oklch(color: HelmlabColor, p: ParameterSet) -> tuple[float, float, float]:
    ok = np.asarray(oklab_from_xyz(np.asarray(inverse(color, p), dtype=float)), dtype=float)
    c = math.hypot(ok[1], ok[2])
    h = math.degrees(math.atan2(ok[2], ok[1])) % 360.0
    return float(ok[0]), c, h


def _hex8(v: float) -> int:
    return min(255, max(0, round(v * 255.0)))


def _srgb_hex(color: HelmlabColor, p: ParameterSet, alpha: bool = False) -> str:
    enc = _display_encode(color, p, GamutSpec("srgb"))
    digits = "".join(f"{_hex8(v):02x}" for v in enc)
    return ("#ff" + digits) if alpha else ("#" + digits)


def _css(ts, p, mapped, warnings):
    lines = ["/* helmlab design tokens (display-p3 committed) */"]
    lines += [f"/* warning: {w} */" for w in warnings]
    lines.append(":root {")
    for e, color in zip(ts.entries, mapped):
        l, c, h = _oklch(color, p)
        p3 = _display_encode(color, p, GamutSpec("p3"))
        lines.append(f"  --{e.name}: oklch({l * 100.0:.3f}% {c:.5f} {h:.2f});")
        lines.append(f"  --{e.name}-p3: color(display-p3 {p3.r:.5f} {p3.g:.5f} {p3.b:.5f});")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _android(ts, p, mapped, warnings):
    lines = ['<?xml version="1.0" encoding="utf-8"?>',
             "<!-- helmlab design tokens (srgb committed) -->"]
    lines += [f"<!-- warning: {w.replace('-', '_')} -->" for w in warnings]
    lines.append("<resources>")
    for e, color in zip(ts.entries, mapped):
        name = e.name.replace("-", "_")
        hue = math.degrees(color.hue) % 360.0
        lines.append(f"  <!-- {name}: tone {color.l * 100.0:.1f}, "
                     f"chroma {color.chroma:.4f}, hue {hue:.1f} deg -->")
        lines.append(f'  <color name="{name}">{_srgb_hex(color, p, alpha=True).upper()}</color>')
    lines.append("</resources>")
    return "\n".join(lines) + "\n"


_CAMEL_DIGIT = re.compile(r"^[0-9]")


def _swift_name(slug: str) -> str:
    parts = [s for s in slug.split("-") if s]
    name = parts[0] + "".join(s.capitalize() for s in parts[1:])
    return ("token" + name[0].upper() + name[1:]) if _CAMEL_DIGIT.match(name) else name


def _ios(ts, p, mapped, warnings):
    lines = ["// helmlab design tokens (display-p3 committed)"]
    lines += [f"// warning: {w}" for w in warnings]
    lines += ["import SwiftUI", "", "enum HelmlabTokens {"]
    for e, color in zip(ts.entries, mapped):
        p3 = _display_encode(color, p, GamutSpec("p3"))
        lines.append(f"    /// {e.name}")
        lines.append(f"    static let {_swift_name(e.name)} = Color(.displayP3, "
                     f"red: {p3.r:.5f}, green: {p3.g:.5f}, blue: {p3.b:.5f}, opacity: 1.0)")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _tailwind(ts, p, mapped, warnings):
    groups: dict[str, object] = {}
    for e, color in zip(ts.entries, mapped):
        value = _srgb_hex(color, p)
        suffix = f"-{e.stop}"
        if e.stop is not None and e.name.endswith(suffix):
            base = e.name[: -len(suffix)]
            prior = groups.get(base)
            if not isinstance(prior, dict):
                # a flat token of the same base name becomes its DEFAULT shade
                groups[base] = {} if prior is None else {"DEFAULT": prior}
            groups[base][str(e.stop)] = value
        elif isinstance(groups.get(e.name), dict):
            groups[e.name]["DEFAULT"] = value
        else:
            groups[e.name] = value
    lines = ["// helmlab design tokens (srgb committed)"]
    lines += [f"// warning: {w}" for w in warnings]
    lines.append("module.exports = {")
    lines.append("  colors: {")
    for key, val in groups.items():
        if isinstance(val, dict):
            lines.append(f'    "{key}": {{')
            lines += [f'      "{stop}": "{hx}",' for stop, hx in val.items()]
            lines.append("    },")
        else:
            lines.append(f'    "{key}": "{val}",')
    lines += ["  },", "};"]
    return "\n".join(lines) + "\n"


def _json_doc(ts, p):
    srgb_mapped, srgb_warnings = _map_all(ts, p, GamutSpec("srgb"))
    p3_mapped, p3_warnings = _map_all(ts, p, GamutSpec("p3"))
    tokens = []
    for e, s_col, p_col in zip(ts.entries, srgb_mapped, p3_mapped):
        p3 = _display_encode(p_col, p, GamutSpec("p3"))
        tokens.append({
            "name": e.name,
            "helmlab": [e.color.l, e.color.a, e.color.b],
            "stop": e.stop,
            "tag": e.tag,
            "srgb_hex": _srgb_hex(s_col, p),
            "srgb_in_gamut": all(not w.startswith(e.name + ":") for w in srgb_warnings),
            "p3": [p3.r, p3.g, p3.b],
            "p3_in_gamut": all(not w.startswith(e.name + ":") for w in p3_warnings),
        })
    doc = {
        "format": _JSON_FORMAT_TAG,
        "version": 1,
        "gamut_warnings": {"srgb": srgb_warnings, "p3": p3_warnings},
        "tokens": tokens,
    }
    return json.dumps(doc, indent=2) + "\n"


def export_tokens(ts: TokenSet, format: str, p: ParameterSet) -> str:
    """Render a token set in one of the supported output formats.

    ``format`` is one of ``css``, ``android``, ``ios``, ``tailwind``,
    ``json``. Gamut-committed formats auto-map out-of-gamut colors and note
    it in the header; the JSON document instead keeps raw Helmlab
    coordinates (lossless) alongside mapped display values per gamut.
    """
    if format not in FORMATS:
        raise ValidationError(f"unknown export format {format!r}; expected one of {FORMATS}")
    if format == "json":
        return _json_doc(ts, p)
    spec = GamutSpec("p3") if format in ("css", "ios") else GamutSpec("srgb")
    mapped, warnings = _map_all(ts, p, spec)
    render = {"css": _css, "android": _android, "ios": _ios, "tailwind": _tailwind}[format]
    return render(ts, p, mapped, warnings)


def import_tokens(text: str) -> TokenSet:
    """Parse a JSON token document produced by :func:`export_tokens`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != _JSON_FORMAT_TAG:
        raise ParseError(f"not a {_JSON_FORMAT_TAG} document")
    entries = []
    for i, tok in enumerate(doc.get("tokens", [])):
        try:
            l, a, b = (float(v) for v in tok["helmlab"])
            entries.append(TokenEntry(tok["name"], HelmlabColor(l, a, b),
                                      tok.get("stop"), tok.get("tag")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"token {i}: {exc}") from None
    return TokenSet(tuple(entries))
