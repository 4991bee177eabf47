"""Agreement metrics and quality audits for the tuned space.

The STRESS score (0..100, lower is better) measures how well a set of
predicted color differences matches visual-difference data up to a
single global scale factor. Everything else in this module feeds it or
audits the transform around it: dataset ingestion, bootstrap intervals,
per-subset breakdowns, hue-angle alignment, gradient step uniformity,
Munsell-chain spacing, Jacobian statistics, and the frozen ablation
table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import (
    WHITE_D65,
    cie76,
    cie94,
    ciede2000,
    cielab_from_xyz,
    cmc,
    oklab_from_xyz,
    srgb_to_xyz,
)
from .errors import (
    DegenerateInputError,
    NumericDomainError,
    ParseError,
    ValidationError,
)
from .metric import delta_e, delta_e_euclidean
from .params import ParameterSet
from .transform import (
    FULL_PIPELINE,
    LUT_Y_RANGE,
    StageMask,
    build_neutral_lut,
    forward,
    inverse,
)

__all__ = [
    "PairDataset",
    "load_dataset",
    "stress",
    "helmlab_metric",
    "BASELINE_METRICS",
    "evaluate",
    "EvalReport",
    "GenerationMetrics",
    "bootstrap_ci",
    "hue_alignment",
    "HueAlignment",
    "default_hue_targets",
    "angle_error_deg",
    "gradient_ratio",
    "munsell_cv",
    "jacobian_stats",
    "JacobianStats",
    "ablation",
    "AblationRow",
    "achromatic_audit",
    "round_trip_audit",
    "rotation_audit",
    "full_blue_mask",
]

SUBSET_TAGS = ("BFD-P(D65)", "BFD-P(M)", "BFD-P(C)", "Witt", "Leeds",
               "RIT-DuPont", "other")

# keys are the tags reduced to lowercase alphanumerics
_SUBSET_BY_KEY = {
    "bfdpd65": "BFD-P(D65)",
    "bfdpm": "BFD-P(M)",
    "bfdpc": "BFD-P(C)",
    "witt": "Witt",
    "leeds": "Leeds",
    "ritdupont": "RIT-DuPont",
    "other": "other",
}

_DATASET_COLUMNS = ("x1", "y1", "z1", "x2", "y2", "z2", "dv", "subset")

# blue-to-magenta band where gradient uniformity is worst, CIE Lab hue degrees
FULL_BLUE_BAND = (240.0, 340.0)

_RT_PROBE_SEED = 7  # fixed so audit numbers are comparable across runs


def _normalize_subset(raw: str) -> str:
    key = "".join(ch for ch in raw.lower() if ch.isalnum())
    return _SUBSET_BY_KEY.get(key, "other")


def _ro(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PairDataset:
    """Visual-difference pairs: two XYZ colors, a positive dv, a subset tag.

    ``external_de`` carries optional precomputed difference columns
    keyed by metric name, for scoring metrics this package does not
    implement.
    """

    xyz1: np.ndarray
    xyz2: np.ndarray
    dv: np.ndarray
    subsets: tuple[str, ...]
    external_de: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "xyz1", _ro(self.xyz1))
        object.__setattr__(self, "xyz2", _ro(self.xyz2))
        object.__setattr__(self, "dv", _ro(self.dv))
        object.__setattr__(self, "subsets", tuple(self.subsets))
        object.__setattr__(
            self, "external_de",
            {k: _ro(v) for k, v in self.external_de.items()})
        self.validate()

    def validate(self) -> "PairDataset":
        n = len(self.dv)
        if n == 0:
            raise ValidationError("dataset is empty")
        if self.xyz1.shape != (n, 3) or self.xyz2.shape != (n, 3):
            raise ValidationError("xyz arrays must have shape (n, 3)")
        if len(self.subsets) != n:
            raise ValidationError("subset tags must match the pair count")
        if not (np.all(np.isfinite(self.xyz1)) and np.all(np.isfinite(self.xyz2))
                and np.all(np.isfinite(self.dv))):
            raise ValidationError("dataset contains non-finite values")
        if not np.all(self.dv > 0.0):
            raise ValidationError("dv values must all be positive")
        for name, col in self.external_de.items():
            if col.shape != (n,):
                raise ValidationError(f"external column {name!r} has wrong length")
        return self

    def __len__(self) -> int:
        return len(self.dv)

    def subset_mask(self, tag: str) -> np.ndarray:
        return np.array([s == tag for s in self.subsets])

    def subset_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.subsets:
            out[s] = out.get(s, 0) + 1
        return out

    def take(self, indices) -> "PairDataset":
        """Row subset or resample; accepts an index array or boolean mask."""
        idx = np.asarray(indices)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return PairDataset(
            xyz1=self.xyz1[idx],
            xyz2=self.xyz2[idx],
            dv=self.dv[idx],
            subsets=tuple(self.subsets[i] for i in idx),
            external_de={k: v[idx] for k, v in self.external_de.items()},
        )


def load_dataset(file_content: str) -> PairDataset:
    """Parse the pair CSV: header x1,y1,z1,x2,y2,z2,dv,subset.

    Extra ``de_<name>`` columns become external difference columns.
    Lines starting with '#' and blank lines are skipped; errors carry
    the 1-based line number of the offending row.
    """
    numbered = [(i + 1, line) for i, line in enumerate(file_content.splitlines())
                if line.strip() and not line.lstrip().startswith("#")]
    if not numbered:
        raise ValidationError("dataset is empty")
    linenos = [n for n, _ in numbered]
    rows = list(csv.reader([line for _, line in numbered]))

    header = [cell.strip().lower() for cell in rows[0]]
    col: dict[str, int] = {}
    external_names: list[str] = []
    for i, name in enumerate(header):
        if name in col:
            raise ParseError(f"line {linenos[0]}: duplicate column {name!r}")
        if name in _DATASET_COLUMNS:
            col[name] = i
        elif name.startswith("de_") and len(name) > 3:
            col[name] = i
            external_names.append(name[3:])
        else:
            raise ParseError(f"line {linenos[0]}: unknown column {name!r}")
    missing = [c for c in _DATASET_COLUMNS if c not in col]
    if missing:
        raise ParseError(f"line {linenos[0]}: missing columns {', '.join(missing)}")

    xyz1, xyz2, dv, subsets = [], [], [], []
    external: dict[str, list[float]] = {n: [] for n in external_names}
    for lineno, cells in zip(linenos[1:], rows[1:]):
        if len(cells) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} fields, got {len(cells)}")

        def num(name: str) -> float:
            try:
                v = float(cells[col[name]])
            except ValueError:
                raise ParseError(
                    f"line {lineno}: column {name!r} is not a number: "
                    f"{cells[col[name]]!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"line {lineno}: column {name!r} is not finite")
            return v

        row_dv = num("dv")
        if row_dv <= 0.0:
            raise ValidationError(f"line {lineno}: dv must be positive, got {row_dv}")
        xyz1.append([num("x1"), num("y1"), num("z1")])
        xyz2.append([num("x2"), num("y2"), num("z2")])
        dv.append(row_dv)
        subsets.append(_normalize_subset(cells[col["subset"]]))
        for name in external_names:
            external[name].append(num("de_" + name))

    if not dv:
        raise ValidationError("dataset has a header but no data rows")
    return PairDataset(
        xyz1=np.array(xyz1), xyz2=np.array(xyz2), dv=np.array(dv),
        subsets=tuple(subsets),
        external_de={n: np.array(v) for n, v in external.items()})


def stress(de, dv) -> float:
    """STRESS of predicted differences against visual differences.

    F = sum(dv * de) / sum(de^2) absorbs the global scale, so the score
    is exactly invariant under de -> k*de and dv -> k*dv. Returns a
    value in [0, 100]; 0 means dv is exactly proportional to de.
    """
    de_arr = np.asarray(de, dtype=float).ravel()
    dv_arr = np.asarray(dv, dtype=float).ravel()
    if de_arr.size == 0 or de_arr.shape != dv_arr.shape:
        raise ValidationError("de and dv must have equal nonzero lengths")
    if not (np.all(np.isfinite(de_arr)) and np.all(np.isfinite(dv_arr))):
        raise ValidationError("de and dv must be finite")
    if np.any(dv_arr <= 0.0):
        raise ValidationError("dv values must all be positive")
    if np.any(de_arr < 0.0):
        raise ValidationError("de values must be nonnegative")
    de_sq = float(np.dot(de_arr, de_arr))
    if de_sq == 0.0:
        raise DegenerateInputError("all predicted differences are zero")
    f = float(np.dot(dv_arr, de_arr)) / de_sq
    resid = dv_arr - f * de_arr
    return 100.0 * math.sqrt(float(np.dot(resid, resid)) / float(np.dot(dv_arr, dv_arr)))


def helmlab_metric(p: ParameterSet):
    """Difference function (xyz1, xyz2) -> de under the tuned space and metric."""
    def de(xyz1, xyz2):
        return delta_e(forward(np.asarray(xyz1, dtype=float), p),
                       forward(np.asarray(xyz2, dtype=float), p), p.distance)
    return de


def _oklab_de(xyz1, xyz2):
    o1 = np.asarray(oklab_from_xyz(xyz1), dtype=float)
    o2 = np.asarray(oklab_from_xyz(xyz2), dtype=float)
    return np.sqrt(np.sum((o1 - o2) ** 2, axis=-1))


BASELINE_METRICS = {
    "cielab": lambda x1, x2: cie76(cielab_from_xyz(x1), cielab_from_xyz(x2)),
    "cie94": lambda x1, x2: cie94(cielab_from_xyz(x1), cielab_from_xyz(x2)),
    "cmc": lambda x1, x2: cmc(cielab_from_xyz(x1), cielab_from_xyz(x2)),
    "ciede2000": lambda x1, x2: ciede2000(cielab_from_xyz(x1), cielab_from_xyz(x2)),
    "oklab": _oklab_de,
}


def full_blue_mask(ds: PairDataset) -> np.ndarray:
    """Pairs whose mean CIE Lab hue sits in the blue-to-magenta band."""
    lab1 = np.asarray(cielab_from_xyz(ds.xyz1), dtype=float)
    lab2 = np.asarray(cielab_from_xyz(ds.xyz2), dtype=float)
    mean_ab = 0.5 * (lab1[:, 1:] + lab2[:, 1:])
    hue = np.degrees(np.arctan2(mean_ab[:, 1], mean_ab[:, 0])) % 360.0
    lo, hi = FULL_BLUE_BAND
    return (hue >= lo) & (hue <= hi)


@dataclass(frozen=True)
class GenerationMetrics:
    """Transform-quality audit numbers attached to an EvalReport."""

    achromatic_max_chroma: float
    hue_rms_deg: float
    hue_max_deg: float
    round_trip_max_err: float
    jacobian_min_det: float
    jacobian_median_cond: float
    gradient_ratio: float
    munsell_cv: float | None = None


@dataclass(frozen=True)
class EvalReport:
    """STRESS per metric with subset breakdown, CI, and audit metrics."""

    stress: dict[str, float]
    per_subset: dict[str, dict[str, float]]
    subset_counts: dict[str, int]
    ci: tuple[float, float]
    ci_level: float
    bootstrap_iters: int
    seed: int
    generation: GenerationMetrics

    def __post_init__(self):
        point = self.stress.get("helmlab")
        if point is not None:
            lo, hi = self.ci
            # percentile intervals may exclude the point estimate in
            # pathological resamples; widen so lo <= point <= hi holds
            object.__setattr__(self, "ci", (min(lo, point), max(hi, point)))

    def to_doc(self) -> dict:
        g = self.generation
        return {
            "stress": dict(self.stress),
            "per_subset": {m: dict(t) for m, t in self.per_subset.items()},
            "subset_counts": dict(self.subset_counts),
            "bootstrap": {
                "lo": self.ci[0], "hi": self.ci[1],
                "level": self.ci_level, "iters": self.bootstrap_iters,
                "seed": self.seed,
            },
            "generation": {
                "achromatic_max_chroma": g.achromatic_max_chroma,
                "hue_rms_deg": g.hue_rms_deg,
                "hue_max_deg": g.hue_max_deg,
                "round_trip_max_err": g.round_trip_max_err,
                "jacobian_min_det": g.jacobian_min_det,
                "jacobian_median_cond": g.jacobian_median_cond,
                "gradient_ratio": g.gradient_ratio,
                "munsell_cv": g.munsell_cv,
            },
        }

    def to_text(self) -> str:
        lines = ["STRESS by metric"]
        width = max(len(m) for m in self.stress)
        for name, value in self.stress.items():
            lines.append(f"  {name:<{width}}  {value:7.2f}")
        lines.append("")
        lines.append(f"helmlab {self.ci_level:.0%} CI: "
                     f"[{self.ci[0]:.2f}, {self.ci[1]:.2f}] "
                     f"({self.bootstrap_iters} resamples, seed {self.seed})")
        tags = [t for t in SUBSET_TAGS if t in self.subset_counts]
        if tags:
            lines.append("")
            lines.append("STRESS by subset")
            head = "  " + " " * width + "  " + "  ".join(f"{t:>12}" for t in tags)
            lines.append(head)
            counts = "  " + f"{'n':<{width}}" + "  " + "  ".join(
                f"{self.subset_counts[t]:>12}" for t in tags)
            lines.append(counts)
            for name, table in self.per_subset.items():
                row = "  " + f"{name:<{width}}" + "  " + "  ".join(
                    f"{table[t]:>12.2f}" if t in table else f"{'-':>12}"
                    for t in tags)
                lines.append(row)
        g = self.generation
        lines.append("")
        lines.append("generation metrics")
        lines.append(f"  achromatic max chroma   {g.achromatic_max_chroma:.3e}")
        lines.append(f"  hue error rms / max     {g.hue_rms_deg:.2f} / "
                     f"{g.hue_max_deg:.2f} deg")
        lines.append(f"  round-trip max error    {g.round_trip_max_err:.3e}")
        lines.append(f"  jacobian min det        {g.jacobian_min_det:.4f}")
        lines.append(f"  jacobian median cond    {g.jacobian_median_cond:.2f}")
        lines.append(f"  gradient ratio (R->B)   {g.gradient_ratio:.2f}")
        if g.munsell_cv is not None:
            lines.append(f"  munsell CV              {g.munsell_cv:.1f}%")
        return "\n".join(lines)


def evaluate(ds: PairDataset, p: ParameterSet, *, bootstrap_iters: int = 1000,
             ci_level: float = 0.95, seed: int = 42, jacobian_grid: int = 16,
             munsell_file: str | None = None) -> EvalReport:
    """Score the tuned metric and every baseline on one dataset.

    The Jacobian grid defaults to 16 per axis here to keep interactive
    reports quick; jacobian_stats(p, 64) is the full audit.
    """
    de_by_metric: dict[str, np.ndarray] = {
        "helmlab": helmlab_metric(p)(ds.xyz1, ds.xyz2)}
    for name, fn in BASELINE_METRICS.items():
        de_by_metric[name] = np.asarray(fn(ds.xyz1, ds.xyz2), dtype=float)
    for name, col in ds.external_de.items():
        de_by_metric[name] = col

    overall = {name: stress(de, ds.dv) for name, de in de_by_metric.items()}
    counts = ds.subset_counts()
    per_subset: dict[str, dict[str, float]] = {}
    for name, de in de_by_metric.items():
        table: dict[str, float] = {}
        for tag in SUBSET_TAGS:
            if tag not in counts:
                continue
            mask = ds.subset_mask(tag)
            table[tag] = stress(de[mask], ds.dv[mask])
        per_subset[name] = table

    lo, hi = bootstrap_ci(ds, helmlab_metric(p), iters=bootstrap_iters,
                          level=ci_level, seed=seed)
    hue = hue_alignment(p)
    jac = jacobian_stats(p, jacobian_grid)
    gen = GenerationMetrics(
        achromatic_max_chroma=achromatic_audit(p),
        hue_rms_deg=hue.rms_deg,
        hue_max_deg=hue.max_deg,
        round_trip_max_err=round_trip_audit(p),
        jacobian_min_det=jac.min_det,
        jacobian_median_cond=jac.median_cond,
        gradient_ratio=gradient_ratio(p, ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)), 32),
        munsell_cv=None if munsell_file is None else munsell_cv(p, munsell_file),
    )
    return EvalReport(stress=overall, per_subset=per_subset, subset_counts=counts,
                      ci=(lo, hi), ci_level=ci_level,
                      bootstrap_iters=bootstrap_iters, seed=seed, generation=gen)


def bootstrap_ci(ds: PairDataset, metric, iters: int = 10000,
                 level: float = 0.95, seed: int = 42) -> tuple[float, float]:
    """Percentile interval for STRESS under paired resampling.

    ``metric`` is a difference function (xyz1, xyz2) -> de; it runs once
    on the full dataset, then (de, dv) rows are resampled together.
    Deterministic for a fixed seed.
    """
    if iters < 100:
        raise ValidationError("bootstrap needs at least 100 iterations")
    if not (0.0 < level < 1.0):
        raise ValidationError("level must be strictly between 0 and 1")
    de = np.asarray(metric(ds.xyz1, ds.xyz2), dtype=float)
    dv = ds.dv
    n = len(dv)
    rng = np.random.default_rng(seed)
    scores = np.empty(iters)
    chunk = max(1, min(iters, (1 << 22) // max(n, 1)))
    done = 0
    while done < iters:
        m = min(chunk, iters - done)
        idx = rng.integers(0, n, size=(m, n))
        de_r = de[idx]
        dv_r = dv[idx]
        de_sq = np.einsum("ij,ij->i", de_r, de_r)
        f = np.where(de_sq > 0.0,
                     np.einsum("ij,ij->i", dv_r, de_r) / np.where(de_sq > 0.0, de_sq, 1.0),
                     0.0)
        resid = dv_r - f[:, None] * de_r
        num = np.einsum("ij,ij->i", resid, resid)
        den = np.einsum("ij,ij->i", dv_r, dv_r)
        scores[done:done + m] = 100.0 * np.sqrt(num / den)
        done += m
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(scores, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return float(lo), float(hi)


_HUE_PROBES = (
    ("red", (1.0, 0.0, 0.0)),
    ("yellow", (1.0, 1.0, 0.0)),
    ("green", (0.0, 1.0, 0.0)),
    ("cyan", (0.0, 1.0, 1.0)),
    ("blue", (0.0, 0.0, 1.0)),
    ("magenta", (1.0, 0.0, 1.0)),
)


def default_hue_targets() -> tuple[float, ...]:
    """CIE Lab hue angles (degrees) of the six sRGB primaries and secondaries."""
    out = []
    for _, rgb in _HUE_PROBES:
        lab = cielab_from_xyz(srgb_to_xyz(rgb))
        out.append(math.degrees(math.atan2(lab.b, lab.a)) % 360.0)
    return tuple(out)


def angle_error_deg(achieved: float, target: float) -> float:
    """Signed angular difference in degrees, wrapped into (-180, 180]."""
    d = (achieved - target) % 360.0
    return d - 360.0 if d > 180.0 else d


@dataclass(frozen=True)
class HueAlignment:
    rms_deg: float
    max_deg: float
    rows: tuple[tuple[str, float, float, float], ...]  # name, achieved, target, error


def hue_alignment(p: ParameterSet, targets=None) -> HueAlignment:
    """Hue-angle error of the six sRGB primaries/secondaries against targets.

    Targets default to the CIE Lab hue angles of the same six colors so
    the score reads as drift from conventional hue placement.
    """
    if targets is None:
        targets = default_hue_targets()
    targets = tuple(float(t) for t in targets)
    if len(targets) != len(_HUE_PROBES):
        raise ValidationError(f"expected {len(_HUE_PROBES)} hue targets")
    rows = []
    errs = []
    for (name, rgb), target in zip(_HUE_PROBES, targets):
        hl = forward(srgb_to_xyz(rgb), p)
        achieved = math.degrees(hl.hue) % 360.0
        err = angle_error_deg(achieved, target % 360.0)
        rows.append((name, achieved, target % 360.0, err))
        errs.append(err)
    errs_arr = np.array(errs)
    return HueAlignment(
        rms_deg=float(np.sqrt(np.mean(errs_arr ** 2))),
        max_deg=float(np.max(np.abs(errs_arr))),
        rows=tuple(rows))


def gradient_ratio(p: ParameterSet, endpoints, steps: int = 32,
                   space: str = "helmlab") -> float:
    """Max/min CIEDE2000 step size along an interpolated gradient.

    ``steps`` counts the gradient points, so a 32-point gradient has 31
    measured steps; 2 points degenerate to a ratio of exactly 1. The
    interpolation runs in this space by default, or in CIE Lab with
    space="cielab" for the reference comparison.
    """
    if steps < 2:
        raise ValidationError("a gradient needs at least 2 points")
    if space not in ("helmlab", "cielab"):
        raise ValidationError(f"unknown gradient space {space!r}")
    e0 = np.asarray(endpoints[0], dtype=float)
    e1 = np.asarray(endpoints[1], dtype=float)
    if e0.shape != (3,) or e1.shape != (3,):
        raise ValidationError("endpoints must be two sRGB colors")
    if np.array_equal(e0, e1):
        raise DegenerateInputError("gradient endpoints are identical")
    xyz_ends = np.asarray(srgb_to_xyz(np.stack([e0, e1])), dtype=float)
    t = np.linspace(0.0, 1.0, steps)[:, None]
    if space == "helmlab":
        hl_ends = forward(xyz_ends, p)
        pts_hl = (1.0 - t) * hl_ends[0] + t * hl_ends[1]
        labs = np.asarray(cielab_from_xyz(inverse(pts_hl, p)), dtype=float)
    else:
        lab_ends = np.asarray(cielab_from_xyz(xyz_ends), dtype=float)
        labs = (1.0 - t) * lab_ends[0] + t * lab_ends[1]
    d = np.asarray(ciede2000(labs[:-1], labs[1:]), dtype=float)
    d_min = float(np.min(d))
    if d_min <= 0.0:
        raise DegenerateInputError("gradient contains a zero-length step")
    return float(np.max(d)) / d_min


def munsell_cv(p: ParameterSet, file_content: str) -> float:
    """Coefficient of variation (%) of neighbor distances along chains.

    The file lists constant-hue/value chains as CSV rows
    chain_id,index,x,y,z; neighbors are rows of one chain whose indices
    differ by exactly 1. Uses the population standard deviation.
    """
    numbered = [(i + 1, line) for i, line in enumerate(file_content.splitlines())
                if line.strip() and not line.lstrip().startswith("#")]
    if not numbered:
        raise ValidationError("chain file is empty")
    rows = list(csv.reader([line for _, line in numbered]))
    header = [c.strip().lower() for c in rows[0]]
    if header != ["chain_id", "index", "x", "y", "z"]:
        raise ParseError(
            f"line {numbered[0][0]}: expected header chain_id,index,x,y,z")
    chains: dict[str, dict[int, tuple[float, float, float]]] = {}
    for (lineno, _), cells in zip(numbered[1:], rows[1:]):
        if len(cells) != 5:
            raise ParseError(f"line {lineno}: expected 5 fields, got {len(cells)}")
        chain = cells[0].strip()
        try:
            idx = int(cells[1])
            xyz = (float(cells[2]), float(cells[3]), float(cells[4]))
        except ValueError:
            raise ParseError(f"line {lineno}: malformed row") from None
        if not all(math.isfinite(v) for v in xyz):
            raise ParseError(f"line {lineno}: non-finite coordinate")
        nodes = chains.setdefault(chain, {})
        if idx in nodes:
            raise ParseError(f"line {lineno}: duplicate index {idx} in chain {chain!r}")
        nodes[idx] = xyz
    first, second = [], []
    for nodes in chains.values():
        for idx in sorted(nodes):
            if idx + 1 in nodes:
                first.append(nodes[idx])
                second.append(nodes[idx + 1])
    if len(first) < 2:
        raise DegenerateInputError("need at least 2 neighbor pairs across chains")
    de = delta_e(forward(np.array(first), p), forward(np.array(second), p),
                 p.distance)
    mean = float(np.mean(de))
    if mean <= 0.0:
        raise DegenerateInputError("neighbor distances have zero mean")
    return 100.0 * float(np.std(de)) / mean


class JacobianStats:
    __slots__ = ("min_det", "median_cond")

    def __init__(self, min_det: float, median_cond: float):
        self.min_det = min_det
        self.median_cond = median_cond

    def __iter__(self):
        return iter((self.min_det, self.median_cond))

    def __repr__(self):
        return (f"JacobianStats(min_det={self.min_det!r}, "
                f"median_cond={self.median_cond!r})")


def jacobian_stats(p: ParameterSet, grid: int = 64, *,
                   step: float = 1e-5) -> JacobianStats:
    """Finite-difference Jacobian of the forward map over an sRGB grid.

    Nodes are an evenly spaced grid in the encoded sRGB cube; the
    derivative is taken in the linear tristimulus coordinates at each
    node, by central differences of size ``step``. Identity-like
    parameters give det = 1 everywhere; any valid parameter set keeps
    the determinant strictly positive.
    """
    if grid < 2:
        raise ValidationError("grid must be at least 2 per axis")
    axis = np.linspace(0.0, 1.0, grid)
    r, g, b = np.meshgrid(axis, axis, axis, indexing="ij")
    rgb = np.stack([r, g, b], axis=-1).reshape(-1, 3)
    xyz = np.asarray(srgb_to_xyz(rgb), dtype=float)
    cols = []
    for k in range(3):
        hi = xyz.copy()
        lo = xyz.copy()
        hi[:, k] += step
        lo[:, k] -= step
        cols.append((forward(hi, p) - forward(lo, p)) / (2.0 * step))
    jac = np.stack(cols, axis=-1)
    bad = ~np.isfinite(jac).all(axis=(1, 2))
    if bad.any():
        node = rgb[int(np.flatnonzero(bad)[0])]
        raise NumericDomainError(
            "jacobian", f"non-finite derivative at sRGB node "
            f"({node[0]:.4g}, {node[1]:.4g}, {node[2]:.4g})")
    det = np.linalg.det(jac)
    sv = np.linalg.svd(jac, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = sv[:, 0] / sv[:, 2]
    return JacobianStats(min_det=float(det.min()),
                         median_cond=float(np.median(cond)))


class AblationRow:
    __slots__ = ("label", "stress", "delta")

    def __init__(self, label: str, stress: float, delta: float):
        self.label = label
        self.stress = stress
        self.delta = delta

    def __iter__(self):
        return iter((self.label, self.stress, self.delta))

    def __repr__(self):
        return (f"AblationRow({self.label!r}, stress={self.stress:.4f}, "
                f"delta={self.delta:+.4f})")


def _pipeline_de(ds: PairDataset, p: ParameterSet, mask: StageMask,
                 euclidean: bool) -> np.ndarray:
    p_row = p.with_neutral_lut(build_neutral_lut(p, mask=mask))
    h1 = forward(ds.xyz1, p_row, mask)
    h2 = forward(ds.xyz2, p_row, mask)
    if euclidean:
        return delta_e_euclidean(h1, h2)
    return delta_e(h1, h2, p.distance)


def ablation(ds: PairDataset, p: ParameterSet, masks=None):
    """Frozen ablation: disable one component at a time, re-score STRESS.

    All remaining parameters stay at their tuned values; only the
    neutral-correction table is rebuilt per row, because it is derived
    from the enabled stages rather than fitted. Passing explicit masks
    replaces the default component rows; an empty list gives an empty
    table.
    """
    if masks is not None:
        rows = []
        for mask in masks:
            disabled = [f for f in mask.__dataclass_fields__ if not getattr(mask, f)]
            rows.append((", ".join("no " + d for d in disabled) or "full",
                         mask, False))
    else:
        rows = [
            ("full", FULL_PIPELINE, False),
            ("euclidean distance only", FULL_PIPELINE, True),
            ("no hk", FULL_PIPELINE.without("hk"), False),
            ("no hue correction", FULL_PIPELINE.without("hue_correction"), False),
            ("no dark compression", FULL_PIPELINE.without("dark_compression"), False),
            ("rotation", FULL_PIPELINE, False),
            ("no rotation", FULL_PIPELINE.without("rotation"), False),
        ]
    base = stress(_pipeline_de(ds, p, FULL_PIPELINE, False), ds.dv)
    out = []
    for label, mask, euclidean in rows:
        s = stress(_pipeline_de(ds, p, mask, euclidean), ds.dv)
        out.append(AblationRow(label, s, s - base))
    return tuple(out)


def achromatic_audit(p: ParameterSet, samples: int = 1024,
                     y_range: tuple[float, float] = LUT_Y_RANGE,
                     spacing: str = "geometric") -> float:
    """Largest chroma left on the gray axis after the full pipeline."""
    y_lo, y_hi = y_range
    if spacing == "geometric":
        ys = np.geomspace(y_lo, y_hi, samples)
    elif spacing == "linear":
        ys = np.linspace(y_lo, y_hi, samples)
    else:
        raise ValidationError(f"unknown spacing {spacing!r}")
    grays = ys[:, None] * np.asarray(WHITE_D65, dtype=float)[None, :]
    hl = forward(grays, p)
    return float(np.max(np.hypot(hl[:, 1], hl[:, 2])))


def round_trip_audit(p: ParameterSet, n: int = 512,
                     seed: int = _RT_PROBE_SEED) -> float:
    """Worst round-trip error over n random sRGB colors, infinity norm."""
    rng = np.random.default_rng(seed)
    xyz = np.asarray(srgb_to_xyz(rng.random((n, 3))), dtype=float)
    back = inverse(forward(xyz, p), p)
    return float(np.max(np.abs(back - xyz)))


def rotation_audit(p: ParameterSet, n: int = 10000, seed: int = 42) -> float:
    """Worst change in delta_e when the final rotation stage is skipped."""
    rng = np.random.default_rng(seed)
    xyz1 = np.asarray(srgb_to_xyz(rng.random((n, 3))), dtype=float)
    xyz2 = np.asarray(srgb_to_xyz(rng.random((n, 3))), dtype=float)
    no_rot = FULL_PIPELINE.without("rotation")
    with_rot = delta_e(forward(xyz1, p), forward(xyz2, p), p.distance)
    without = delta_e(forward(xyz1, p, no_rot), forward(xyz2, p, no_rot),
                      p.distance)
    return float(np.max(np.abs(with_rot - without)))
