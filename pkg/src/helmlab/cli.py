"""Command-line surface: convert, distance, stress, fit, ablate, palette, tokens, check.

All output is reproducible byte for byte for identical inputs and seeds:
seeds default to 42 and are printed, nothing emits timestamps. Exit codes:
0 success, 1 parse/validation problems, 2 numeric failures, 3 unachievable
constraints.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

import numpy as np

from .baselines import srgb_to_xyz
from .design import GamutSpec, PaletteSpec, in_gamut, palette
from .errors import (ConfigurationError, ContrastError, ConvergenceError,
                     DegenerateInputError, FitError, LutConstructionError,
                     NumericDomainError, ParseError, ValidationError)
from .evaluation import (BASELINE_METRICS, ablation, achromatic_audit, evaluate,
                         helmlab_metric, jacobian_stats, load_dataset,
                         rotation_audit, round_trip_audit, stress)
from .export import TokenEntry, TokenSet, export_tokens, FORMATS as EXPORT_FORMATS
from .fit import LossConfig, fit, loss_config_from_doc
from .metric import delta_e, delta_e_euclidean
from .params import default_params, load_params, save_params
from .transform import forward, inverse
from .types import HelmlabColor, XyzColor

_COLOR_FN = re.compile(r"(xyz|helmlab)\(([^)]*)\)$")
_HEX = re.compile(r"#[0-9a-fA-F]{6}$")
_METRICS = ("helmlab", "euclidean") + tuple(BASELINE_METRICS)


def parse_color(text: str):
    """Parse ``#rrggbb``, ``xyz(x,y,z)``, or ``helmlab(L,a,b)``.

    Returns ``(kind, components)`` with kind in {"srgb", "xyz", "helmlab"}.
    """
    text = text.strip()
    if _HEX.match(text):
        vals = tuple(int(text[i:i + 2], 16) / 255.0 for i in (1, 3, 5))
        return "srgb", vals
    m = _COLOR_FN.match(text)
    if m:
        parts = m.group(2).split(",")
        if len(parts) != 3:
            raise ParseError(f"color {text!r} needs exactly 3 components")
        try:
            vals = tuple(float(v) for v in parts)
        except ValueError:
            raise ParseError(f"color {text!r} has a non-numeric component") from None
        return m.group(1), vals
    raise ParseError(
        f"cannot parse color {text!r}; use #rrggbb, xyz(x,y,z), or helmlab(L,a,b)")


def _to_helmlab(kind: str, vals, p) -> HelmlabColor:
    if kind == "helmlab":
        return HelmlabColor(*vals)
    xyz = srgb_to_xyz(vals) if kind == "srgb" else XyzColor(*vals)
    return forward(xyz, p)


def _params_for(args) -> tuple:
    path = getattr(args, "params", None) or os.environ.get("HELMLAB_PARAMS")
    if path:
        return load_params(path), path
    return default_params(), None


def _emit(args, doc: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


# --- subcommands -------------------------------------------------------------


def _cmd_convert(args) -> int:
    p, _ = _params_for(args)
    kind, vals = parse_color(args.color)
    hl = _to_helmlab(kind, vals, p)
    xyz = np.asarray(inverse(hl, p), dtype=float)
    from .baselines import xyz_to_srgb
    srgb = np.asarray(xyz_to_srgb(xyz), dtype=float)
    gamut_ok = in_gamut(xyz, GamutSpec("srgb"))
    hex_code = "#" + "".join(f"{min(255, max(0, round(v * 255))):02x}" for v in srgb)
    doc = {
        "input": args.color,
        "helmlab": [hl.l, hl.a, hl.b],
        "chroma": hl.chroma,
        "hue_rad": hl.hue,
        "xyz": [float(v) for v in xyz],
        "srgb": [float(v) for v in srgb],
        "srgb_hex": hex_code if gamut_ok else None,
        "srgb_in_gamut": gamut_ok,
    }
    lines = [
        f"helmlab  L={hl.l:.6f} a={hl.a:.6f} b={hl.b:.6f}  (C={hl.chroma:.6f}, h={hl.hue:.6f} rad)",
        f"xyz      xyz({xyz[0]:.6f}, {xyz[1]:.6f}, {xyz[2]:.6f})",
        f"srgb     {hex_code if gamut_ok else 'out of gamut'}"
        + (f"  ({srgb[0]:.6f}, {srgb[1]:.6f}, {srgb[2]:.6f})" if not gamut_ok else ""),
    ]
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_distance(args) -> int:
    p, _ = _params_for(args)
    k1, v1 = parse_color(args.color1)
    k2, v2 = parse_color(args.color2)
    if args.metric in ("helmlab", "euclidean"):
        c1, c2 = _to_helmlab(k1, v1, p), _to_helmlab(k2, v2, p)
        de = (delta_e(c1, c2, p.distance) if args.metric == "helmlab"
              else delta_e_euclidean(c1, c2))
    else:
        xyz1 = np.asarray(srgb_to_xyz(v1) if k1 == "srgb"
                          else inverse(HelmlabColor(*v1), p) if k1 == "helmlab"
                          else XyzColor(*v1), dtype=float)
        xyz2 = np.asarray(srgb_to_xyz(v2) if k2 == "srgb"
                          else inverse(HelmlabColor(*v2), p) if k2 == "helmlab"
                          else XyzColor(*v2), dtype=float)
        de = float(BASELINE_METRICS[args.metric](xyz1[None, :], xyz2[None, :])[0])
    _emit(args, {"metric": args.metric, "delta_e": de}, f"{de:.17g}")
    return 0


def _cmd_stress(args) -> int:
    p, _ = _params_for(args)
    ds = load_dataset(_read(args.dataset))
    if args.metric == "all":
        report = evaluate(ds, p, bootstrap_iters=args.bootstrap_iters,
                          seed=args.seed, jacobian_grid=args.jacobian_grid,
                          munsell_file=_read(args.munsell) if args.munsell else None)
        _emit(args, report.to_doc(), report.to_text())
        return 0
    if args.metric == "helmlab":
        de = helmlab_metric(p)(ds.xyz1, ds.xyz2)
    elif args.metric == "euclidean":
        de = delta_e_euclidean(forward(ds.xyz1, p), forward(ds.xyz2, p))
    else:
        de = BASELINE_METRICS[args.metric](ds.xyz1, ds.xyz2)
    value = stress(de, ds.dv)
    _emit(args, {"metric": args.metric, "stress": value, "pairs": len(ds)},
          f"STRESS ({args.metric}): {value:.4f}  (n={len(ds)})")
    return 0


def _cmd_fit(args) -> int:
    p_init, _ = _params_for(args)
    train = load_dataset(_read(args.dataset))
    he = load_dataset(_read(args.he)) if args.he else None
    cfg = LossConfig()
    if args.config:
        try:
            doc = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from None
        cfg = loss_config_from_doc(doc)
    munsell = _read(args.munsell) if args.munsell else None
    result = fit(train, he, cfg, restarts=args.restarts, iters=args.iters,
                 seed=args.seed, init_params=p_init, munsell_chains=munsell)
    save_params(result.params, args.out)
    doc = {
        "seed": result.seed,
        "restarts": args.restarts,
        "iterations": list(result.iterations),
        "evaluations": list(result.evaluations),
        "loss": result.loss,
        "breakdown": dict(result.breakdown),
        "notes": list(result.notes),
        "out": args.out,
    }
    lines = [f"seed: {result.seed}",
             f"restarts: {args.restarts}  iters: {list(result.iterations)}"
             f"  evals: {list(result.evaluations)}",
             f"final loss: {result.loss:.6f}"]
    lines += [f"  {k}: {v:.6f}" for k, v in result.breakdown.items()]
    lines += [f"note: {n}" for n in result.notes]
    lines.append(f"wrote {args.out}")
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_ablate(args) -> int:
    p, _ = _params_for(args)
    ds = load_dataset(_read(args.dataset))
    rows = ablation(ds, p)
    width = max(len(r.label) for r in rows)
    lines = [f"{'variant':<{width}}  STRESS   delta"]
    lines += [f"{r.label:<{width}}  {r.stress:6.2f}  {r.delta:+6.2f}" for r in rows]
    doc = {"rows": [{"label": r.label, "stress": r.stress, "delta": r.delta}
                    for r in rows]}
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_palette(args) -> int:
    p, _ = _params_for(args)
    kind, vals = parse_color(args.anchor)
    anchor = _to_helmlab(kind, vals, p)
    spec = PaletteSpec(args.kind, steps=args.steps, chroma=args.chroma,
                       hue=args.hue)
    colors = palette(spec, anchor, p, gamut=GamutSpec(args.target))
    rows = []
    for c in colors:
        comp = [float(c.r), float(c.g), float(c.b)]
        hex_code = "#" + "".join(f"{min(255, max(0, round(v * 255))):02x}" for v in comp)
        rows.append({"components": comp, "hex": hex_code if args.target == "srgb" else None})
    if args.target == "srgb":
        text = "\n".join(r["hex"] for r in rows)
    else:
        text = "\n".join(
            f"display-p3 {r['components'][0]:.5f} {r['components'][1]:.5f} "
            f"{r['components'][2]:.5f}" for r in rows)
    _emit(args, {"target": args.target, "colors": rows}, text)
    return 0


def _cmd_tokens(args) -> int:
    p, _ = _params_for(args)
    kind, vals = parse_color(args.anchor)
    anchor = _to_helmlab(kind, vals, p)
    from .design import SEMANTIC_STOPS
    ls = np.linspace(0.97, 0.10, len(SEMANTIC_STOPS))
    chroma, hue = anchor.chroma, anchor.hue
    entries = tuple(
        TokenEntry(f"{args.name}-{stop}",
                   HelmlabColor(float(lv), chroma * math.cos(hue), chroma * math.sin(hue)),
                   stop=stop)
        for stop, lv in zip(SEMANTIC_STOPS, ls))
    print(export_tokens(TokenSet(entries), args.export, p), end="")
    return 0


def _cmd_check(args) -> int:
    p, _ = _params_for(args)
    rt = round_trip_audit(p, n=10000, seed=args.seed)
    ach = achromatic_audit(p)
    rot = rotation_audit(p, n=2000, seed=args.seed)
    jac = jacobian_stats(p, grid=16)
    checks = [
        ("round-trip", f"max err {rt:.3e}", rt < 1e-12, "< 1e-12"),
        ("achromatic", f"max chroma {ach:.3e}", ach < 1e-6, "< 1e-6"),
        ("rotation-invariance", f"max dE diff {rot:.3e}", rot < 1e-12, "< 1e-12"),
        ("jacobian", f"min det {jac.min_det:.4f}",
         jac.min_det > 0 and math.isfinite(jac.median_cond), "> 0"),
    ]
    all_ok = all(ok for _, _, ok, _ in checks)
    doc = {
        "seed": args.seed,
        "checks": [{"name": n, "detail": d, "threshold": t, "pass": ok}
                   for n, d, ok, t in checks],
        "pass": all_ok,
    }
    lines = [f"seed: {args.seed}"]
    lines += [f"{n:<20} {d:<22} {t:<8} {'PASS' if ok else 'FAIL'}"
              for n, d, ok, t in checks]
    lines.append("all checks passed" if all_ok else "CHECK FAILED")
    _emit(args, doc, "\n".join(lines))
    return 0 if all_ok else 2


# --- parser ------------------------------------------------------------------


def _add_common(sp, *, seed=False, fmt=True):
    sp.add_argument("--params", help="parameter file (else $HELMLAB_PARAMS, else built-ins)")
    if seed:
        sp.add_argument("--seed", type=int, default=42)
    if fmt:
        sp.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="helmlab",
                                 description="Helmlab color space toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("convert", help="color in hex/xyz/helmlab -> all representations")
    sp.add_argument("color")
    _add_common(sp)
    sp.set_defaults(func=_cmd_convert)

    sp = sub.add_parser("distance", help="delta E between two colors")
    sp.add_argument("--metric", choices=_METRICS, default="helmlab")
    sp.add_argument("color1")
    sp.add_argument("color2")
    _add_common(sp)
    sp.set_defaults(func=_cmd_distance)

    sp = sub.add_parser("stress", help="STRESS of a metric against a dataset")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--metric", choices=("all",) + _METRICS, default="all")
    sp.add_argument("--bootstrap-iters", type=int, default=1000)
    sp.add_argument("--jacobian-grid", type=int, default=16)
    sp.add_argument("--munsell", help="Munsell chain file for the CV report")
    _add_common(sp, seed=True)
    sp.set_defaults(func=_cmd_stress)

    sp = sub.add_parser("fit", help="refit parameters against a dataset")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--he", help="secondary dataset for the lambda_he loss term (e.g. He 2022)")
    sp.add_argument("--config", help="loss-config JSON file")
    sp.add_argument("--restarts", type=int, default=1)
    sp.add_argument("--iters", type=int, default=200)
    sp.add_argument("--munsell", help="Munsell chain file for the smoothness term")
    sp.add_argument("--out", default="fit_params.json")
    _add_common(sp, seed=True)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("ablate", help="stage-ablation STRESS table")
    sp.add_argument("--dataset", required=True)
    _add_common(sp)
    sp.set_defaults(func=_cmd_ablate)

    sp = sub.add_parser("palette", help="generate a palette from an anchor color")
    sp.add_argument("--kind", choices=("lightness-ramp", "hue-ring", "semantic-scale"),
                    required=True)
    sp.add_argument("--anchor", required=True)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--chroma", type=float)
    sp.add_argument("--hue", type=float)
    sp.add_argument("--target", choices=("srgb", "p3"), default="srgb")
    _add_common(sp)
    sp.set_defaults(func=_cmd_palette)

    sp = sub.add_parser("tokens", help="semantic token scale in an export format")
    sp.add_argument("--anchor", required=True)
    sp.add_argument("--name", default="primary")
    sp.add_argument("--export", choices=EXPORT_FORMATS, default="css")
    _add_common(sp, fmt=False)
    sp.set_defaults(func=_cmd_tokens)

    sp = sub.add_parser("check", help="run the full invariant audit")
    _add_common(sp, seed=True)
    sp.set_defaults(func=_cmd_check)

    return ap


def run(argv=None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ParseError, ValidationError, ConfigurationError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericDomainError, ConvergenceError, LutConstructionError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContrastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
