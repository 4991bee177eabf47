"""Training loss assembly and box-constrained refitting.

The loss couples the STRESS of the metric on a training set with
soft constraints that keep the space usable while its parameters move:
round-trip accuracy, a clean gray axis, blue-band subset scores, and an
optional Munsell-spacing cap. Fitting runs limited-memory BFGS with
projection onto per-parameter boxes, central finite-difference
gradients, and seeded random restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .baselines import srgb_to_xyz
from .errors import FitError, HelmlabError, ParseError, ValidationError
from .evaluation import (
    PairDataset,
    full_blue_mask,
    munsell_cv,
    stress,
)
from .metric import delta_e
from .params import PARAMETER_COUNT, ParameterSet, default_params, vector_names
from .transform import build_neutral_lut, forward, inverse

__all__ = [
    "LossConfig",
    "loss_config_from_doc",
    "loss",
    "fit",
    "FitResult",
    "cross_validate",
    "CrossValidation",
    "FoldResult",
]

ROUND_TRIP_TARGET = 1e-10
_RT_PROBE_COUNT = 512
_RT_PROBE_SEED = 7
_ACHROMATIC_PROBES = 64
_FD_STEP = 1e-6
# Returned when a trial point breaks the pipeline (usually a non-monotone
# gray ramp). Kept within a few orders of real loss values; a 1e12 wall
# makes the line-search interpolants degenerate and dcsrch can stall on
# the plateau without accepting any step.
_FAILED_EVAL_LOSS = 1e6

# box half-widths by slot family; exponents get their own asymmetric boxes
_MATRIX_BOUND = (-5.0, 5.0)
_GAMMA_BOUND = (0.1, 1.5)
_FOURIER_BOUND = (-1.0, 1.0)
_SHAPE_BOUND = (-2.0, 2.0)
_POSITIVE_BOUND = (0.0, 5.0)
_EXPONENT_BOUND = (0.2, 2.0)


def _default_bound(name: str) -> tuple[float, float]:
    group = name.split("[")[0]
    if group in ("m1", "m2"):
        return _MATRIX_BOUND
    if group == "gamma":
        return _GAMMA_BOUND
    if group in ("hk.p", "distance.p", "distance.q"):
        return _EXPONENT_BOUND
    if group in ("lightness.p1", "lightness.p2", "lightness.p3",
                 "lightness.lam_d", "chroma.l1", "chroma.l2"):
        return _SHAPE_BOUND
    if group.startswith("distance."):
        return _POSITIVE_BOUND
    return _FOURIER_BOUND


@dataclass(frozen=True)
class LossConfig:
    """Loss-term weights, toggles, and parameter box bounds.

    The blue-band term adds the Leeds and RIT-DuPont subset scores plus
    ``full_blue_weight`` times the score over pairs in the
    blue-to-magenta hue band; ``lambda_blue`` scales the sum.
    """

    lambda_he: float = 0.05
    lambda_blue: float = 0.1
    full_blue_weight: float = 0.5
    lambda_rt: float = 100.0
    lambda_ach: float = 500.0
    munsell_weight: float = 0.1
    munsell_cv_floor: float = 20.0
    include_he: bool = True
    include_blue: bool = True
    include_rt: bool = True
    include_ach: bool = True
    include_munsell: bool = True
    bound_overrides: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("lambda_he", "lambda_blue", "full_blue_weight", "lambda_rt",
                     "lambda_ach", "munsell_weight"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"{name} must be finite and nonnegative")
        known = set(vector_names())
        known.update(n.split("[")[0] for n in vector_names())
        for key, bound in self.bound_overrides.items():
            if key not in known:
                raise ValidationError(f"bound override names unknown slot {key!r}")
            lo, hi = bound
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"bound override for {key!r} must satisfy lo < hi")

    def bounds(self) -> np.ndarray:
        """(72, 2) array of per-slot box constraints in vector order."""
        out = np.empty((PARAMETER_COUNT, 2))
        for i, name in enumerate(vector_names()):
            bound = self.bound_overrides.get(name)
            if bound is None:
                bound = self.bound_overrides.get(name.split("[")[0])
            if bound is None:
                bound = _default_bound(name)
            out[i] = bound
        return out


def loss_config_from_doc(doc: dict) -> LossConfig:
    """Build a LossConfig from a parsed JSON object, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ParseError("loss config must be a JSON object")
    fields = set(LossConfig.__dataclass_fields__)
    unknown = set(doc) - fields
    if unknown:
        raise ParseError(f"unknown loss config keys: {', '.join(sorted(unknown))}")
    kwargs = dict(doc)
    if "bound_overrides" in kwargs:
        raw = kwargs["bound_overrides"]
        if not isinstance(raw, dict):
            raise ParseError("bound_overrides must be an object")
        kwargs["bound_overrides"] = {
            k: (float(v[0]), float(v[1])) for k, v in raw.items()}
    try:
        return LossConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise ParseError(f"invalid loss config: {e}") from None


@lru_cache(maxsize=1)
def _rt_probe_xyz() -> np.ndarray:
    rng = np.random.default_rng(_RT_PROBE_SEED)
    xyz = np.asarray(srgb_to_xyz(rng.random((_RT_PROBE_COUNT, 3))), dtype=float)
    xyz.flags.writeable = False
    return xyz


@lru_cache(maxsize=1)
def _gray_probe_xyz() -> np.ndarray:
    from .baselines import WHITE_D65
    from .transform import LUT_Y_RANGE
    ys = np.geomspace(LUT_Y_RANGE[0], LUT_Y_RANGE[1], _ACHROMATIC_PROBES)
    xyz = ys[:, None] * np.asarray(WHITE_D65, dtype=float)[None, :]
    xyz.flags.writeable = False
    return xyz


def _round_trip_penalty(p: ParameterSet) -> float:
    xyz = _rt_probe_xyz()
    err = np.max(np.abs(inverse(forward(xyz, p), p) - xyz), axis=-1)
    return float(np.mean(np.maximum(err - ROUND_TRIP_TARGET, 0.0)))


def _subset_stress(de: np.ndarray, dv: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return 0.0
    return stress(de[mask], dv[mask])


def loss(p: ParameterSet, train: PairDataset, he: PairDataset | None,
         cfg: LossConfig, *, munsell_chains: str | None = None):
    """Total training loss and its per-term breakdown.

    The neutral-correction table is rebuilt from ``p`` first; it is part
    of the model, not a fitted quantity. Breakdown values are the
    weighted contributions, so they sum to the total exactly.
    """
    p_lut = p.with_neutral_lut(build_neutral_lut(p))
    n = len(train)
    need_rt = cfg.include_rt and cfg.lambda_rt > 0.0
    need_ach = cfg.include_ach and cfg.lambda_ach > 0.0
    # one batched forward covers the training pairs and both probe sets
    blocks = [train.xyz1, train.xyz2]
    if need_rt:
        blocks.append(_rt_probe_xyz())
    if need_ach:
        blocks.append(_gray_probe_xyz())
    out = forward(np.concatenate(blocks), p_lut)
    de = delta_e(out[:n], out[n:2 * n], p_lut.distance)
    cursor = 2 * n
    breakdown = {"train_stress": stress(de, train.dv)}

    if cfg.include_he and he is not None and cfg.lambda_he > 0.0:
        de_he = delta_e(forward(he.xyz1, p_lut), forward(he.xyz2, p_lut),
                        p_lut.distance)
        breakdown["he_stress"] = cfg.lambda_he * stress(de_he, he.dv)
    else:
        breakdown["he_stress"] = 0.0

    if cfg.include_blue and cfg.lambda_blue > 0.0:
        blue = (_subset_stress(de, train.dv, train.subset_mask("RIT-DuPont"))
                + _subset_stress(de, train.dv, train.subset_mask("Leeds"))
                + cfg.full_blue_weight
                * _subset_stress(de, train.dv, full_blue_mask(train)))
        breakdown["blue"] = cfg.lambda_blue * blue
    else:
        breakdown["blue"] = 0.0

    if need_rt:
        probes = _rt_probe_xyz()
        hl = out[cursor:cursor + len(probes)]
        cursor += len(probes)
        err = np.max(np.abs(inverse(hl, p_lut) - probes), axis=-1)
        breakdown["round_trip"] = cfg.lambda_rt * float(
            np.mean(np.maximum(err - ROUND_TRIP_TARGET, 0.0)))
    else:
        breakdown["round_trip"] = 0.0

    if need_ach:
        hl = out[cursor:cursor + _ACHROMATIC_PROBES]
        breakdown["achromatic"] = cfg.lambda_ach * float(
            np.max(np.hypot(hl[:, 1], hl[:, 2])))
    else:
        breakdown["achromatic"] = 0.0

    if cfg.include_munsell and munsell_chains is not None and cfg.munsell_weight > 0.0:
        cv = munsell_cv(p_lut, munsell_chains)
        breakdown["munsell"] = cfg.munsell_weight * max(cv - cfg.munsell_cv_floor, 0.0)
    else:
        breakdown["munsell"] = 0.0

    return math.fsum(breakdown.values()), breakdown


@dataclass(frozen=True)
class FitResult:
    """Best parameters found plus the full optimization record."""

    params: ParameterSet
    loss: float
    breakdown: dict
    traces: tuple[tuple[float, ...], ...]
    checkpoints: tuple[tuple[tuple[int, float, dict], ...], ...]
    seed: int
    iterations: tuple[int, ...]
    evaluations: tuple[int, ...]
    notes: tuple[str, ...] = ()


class _Objective:
    """Loss-vector adapter with an eval cache for trace reconstruction."""

    def __init__(self, base: ParameterSet, train, he, cfg, munsell_chains):
        self.base = base
        self.train = train
        self.he = he
        self.cfg = cfg
        self.munsell_chains = munsell_chains
        self.nfev = 0
        self.best_f = math.inf
        self.best_x: np.ndarray | None = None
        self._cache: dict[bytes, float] = {}

    def __call__(self, v: np.ndarray) -> float:
        self.nfev += 1
        try:
            p = self.base.from_vector(v)
            total, _ = loss(p, self.train, self.he, self.cfg,
                            munsell_chains=self.munsell_chains)
        except HelmlabError:
            total = _FAILED_EVAL_LOSS
        if not math.isfinite(total):
            total = _FAILED_EVAL_LOSS
        if total < self.best_f:
            self.best_f = total
            self.best_x = np.array(v, dtype=float)
        if len(self._cache) > 256:
            self._cache.clear()
        self._cache[np.asarray(v, dtype=float).tobytes()] = total
        return total

    def cached(self, v: np.ndarray) -> float:
        key = np.asarray(v, dtype=float).tobytes()
        if key in self._cache:
            return self._cache[key]
        return self(v)

    def gradient(self, v: np.ndarray) -> np.ndarray:
        g = np.empty_like(v)
        for i in range(v.size):
            h = _FD_STEP * max(1.0, abs(v[i]))
            hi = v.copy()
            lo = v.copy()
            hi[i] += h
            lo[i] -= h
            g[i] = (self(hi) - self(lo)) / (2.0 * h)
        return g

    def breakdown_at(self, v: np.ndarray) -> tuple[float, dict]:
        p = self.base.from_vector(v)
        return loss(p, self.train, self.he, self.cfg,
                    munsell_chains=self.munsell_chains)


def fit(train: PairDataset, he: PairDataset | None, cfg: LossConfig,
        restarts: int = 1, iters: int = 200, seed: int = 42, *,
        init_params: ParameterSet | None = None,
        munsell_chains: str | None = None) -> FitResult:
    """Refit all 72 parameters by box-constrained quasi-Newton descent.

    Restart 0 starts from ``init_params`` (the shipped defaults when
    omitted); later restarts perturb every slot by uniform noise of up
    to 10% of its box width. The best restart wins. A restart that
    raises is logged in ``notes`` and skipped; if every restart fails
    the whole fit raises FitError. Deterministic for a fixed seed.
    """
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    if iters < 0:
        raise ValidationError("iters must be nonnegative")
    base = init_params if init_params is not None else default_params(with_lut=False)
    x_init = base.to_vector()
    bounds = cfg.bounds()
    lo, hi = bounds[:, 0], bounds[:, 1]
    outside = (x_init < lo) | (x_init > hi)
    if outside.any():
        name = vector_names()[int(np.flatnonzero(outside)[0])]
        raise ValidationError(f"initial value for {name} is outside its bounds")
    rng = np.random.default_rng(seed)

    traces: list[tuple[float, ...]] = []
    checkpoints: list[tuple[tuple[int, float, dict], ...]] = []
    iterations: list[int] = []
    evaluations: list[int] = []
    notes: list[str] = []
    finals: list[tuple[float, np.ndarray, int]] = []  # loss, x, restart index

    for k in range(restarts):
        if k == 0:
            x0 = x_init.copy()
        else:
            jitter = rng.uniform(-1.0, 1.0, size=x_init.shape) * 0.1 * (hi - lo)
            x0 = np.clip(x_init + jitter, lo, hi)
        obj = _Objective(base, train, he, cfg, munsell_chains)
        try:
            f0 = obj(x0)
            trace = [f0]
            marks: list[tuple[int, float, dict]] = []

            if iters == 0:
                x_best, f_best, nit = x0, f0, 0
            else:
                def on_step(xk, _trace=trace, _marks=marks, _obj=obj):
                    fk = _obj.cached(xk)
                    _trace.append(fk)
                    it = len(_trace) - 1
                    if it % 100 == 0:
                        total, parts = _obj.breakdown_at(xk)
                        _marks.append((it, total, parts))

                # One minimize call often ends before the budget: the
                # failure plateau can stall its line search, and a single
                # stunted step can fire the relative-f test. Both are
                # segment-local; while budget remains and segments keep
                # improving, resume from the best point seen with fresh
                # quasi-Newton memory. Projected-gradient convergence or a
                # segment with no real progress ends the restart.
                x_cur = x0
                nit = 0
                remaining = iters
                while True:
                    f_seen = obj.best_f
                    res = minimize(
                        obj, x_cur, jac=obj.gradient, method="L-BFGS-B",
                        bounds=[tuple(b) for b in bounds], callback=on_step,
                        options={"maxiter": remaining, "maxfun": 10_000_000,
                                 "ftol": 1e-10, "maxls": 40})
                    nit += int(res.nit)
                    remaining -= max(int(res.nit), 1)
                    msg = str(res.message).upper()
                    progressed = obj.best_f < f_seen - 1e-9
                    if remaining <= 0 or "PROJECTED" in msg or not progressed:
                        break
                    why = "stall" if "ABNORM" in msg else "early f-convergence"
                    notes.append(f"restart {k}: resumed from best point after "
                                 f"{nit} iterations ({why})")
                    x_cur = (obj.best_x if obj.best_x is not None
                             else np.asarray(res.x, dtype=float)).copy()
                x_best, f_best = res.x, float(res.fun)
                if obj.best_f < f_best and obj.best_x is not None:
                    x_best, f_best = obj.best_x, obj.best_f
            if not math.isfinite(f_best) or f_best >= _FAILED_EVAL_LOSS:
                raise FitError(f"restart {k} ended on a failed evaluation")
            total, parts = obj.breakdown_at(x_best)
            marks.append((nit, total, parts))
        except HelmlabError as e:
            notes.append(f"restart {k} skipped: {e}")
            continue
        traces.append(tuple(trace))
        checkpoints.append(tuple(marks))
        iterations.append(nit)
        evaluations.append(obj.nfev)
        finals.append((f_best, x_best, k))

    if not finals:
        raise FitError("all restarts failed; " + "; ".join(notes))
    f_best, x_best, _ = min(finals, key=lambda t: t[0])
    p_best = base.from_vector(x_best)
    p_best = p_best.with_neutral_lut(build_neutral_lut(p_best)).validate()
    _, parts = loss(p_best, train, he, cfg, munsell_chains=munsell_chains)
    return FitResult(params=p_best, loss=f_best, breakdown=parts,
                     traces=tuple(traces), checkpoints=tuple(checkpoints),
                     seed=seed, iterations=tuple(iterations),
                     evaluations=tuple(evaluations), notes=tuple(notes))


class FoldResult:
    __slots__ = ("fold", "n_train", "n_val", "train_stress", "val_stress", "gap")

    def __init__(self, fold, n_train, n_val, train_stress, val_stress, gap):
        self.fold = fold
        self.n_train = n_train
        self.n_val = n_val
        self.train_stress = train_stress
        self.val_stress = val_stress
        self.gap = gap

    def __repr__(self):
        return (f"FoldResult(fold={self.fold}, train={self.train_stress:.2f}, "
                f"val={self.val_stress:.2f}, gap={self.gap:+.2f})")


@dataclass(frozen=True)
class CrossValidation:
    mean_gap: float
    std_gap: float
    folds: tuple[FoldResult, ...]


def cross_validate(ds: PairDataset, cfg: LossConfig, folds: int, seed: int = 42,
                   *, he: PairDataset | None = None,
                   init_params: ParameterSet | None = None, restarts: int = 1,
                   iters: int = 200,
                   munsell_chains: str | None = None) -> CrossValidation:
    """K-fold refit: train on k-1 folds, report the validation STRESS gap.

    The shuffled partition covers every pair exactly once. The reported
    spread is the population standard deviation over folds.
    """
    if folds < 2:
        raise ValidationError("cross-validation needs at least 2 folds")
    if len(ds) < folds:
        raise ValidationError("dataset smaller than the fold count")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ds))
    parts = np.array_split(perm, folds)
    rows = []
    for k, val_idx in enumerate(parts):
        train_idx = np.concatenate([parts[j] for j in range(folds) if j != k])
        train_ds = ds.take(train_idx)
        val_ds = ds.take(val_idx)
        result = fit(train_ds, he, cfg, restarts=restarts, iters=iters,
                     seed=seed + k, init_params=init_params,
                     munsell_chains=munsell_chains)
        p_k = result.params
        de_train = delta_e(forward(train_ds.xyz1, p_k),
                           forward(train_ds.xyz2, p_k), p_k.distance)
        de_val = delta_e(forward(val_ds.xyz1, p_k),
                         forward(val_ds.xyz2, p_k), p_k.distance)
        s_train = stress(de_train, train_ds.dv)
        s_val = stress(de_val, val_ds.dv)
        rows.append(FoldResult(k, len(train_ds), len(val_ds), s_train, s_val,
                               s_val - s_train))
    gaps = np.array([r.gap for r in rows])
    return CrossValidation(mean_gap=float(np.mean(gaps)),
                           std_gap=float(np.std(gaps)), folds=tuple(rows))
