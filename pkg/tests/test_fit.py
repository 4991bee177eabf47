import math

import numpy as np
import pytest

from helmlab.baselines import srgb_to_xyz
from helmlab.errors import ParseError, ValidationError
from helmlab.evaluation import PairDataset, helmlab_metric, stress
from helmlab.fit import (CrossValidation, FitResult, LossConfig,
                         cross_validate, fit, loss, loss_config_from_doc)
from helmlab.params import vector_names


def _dataset(params, rng, n=60, tags=("other",), noise=0.0):
    rgb1 = rng.random((n, 3))
    rgb2 = np.clip(rgb1 + rng.normal(0.0, 0.1, (n, 3)), 0.0, 1.0)
    xyz1 = np.asarray(srgb_to_xyz(rgb1))
    xyz2 = np.asarray(srgb_to_xyz(rgb2))
    dv = np.asarray(helmlab_metric(params)(xyz1, xyz2))
    keep = dv > 1e-6
    dv = dv[keep]
    if noise:
        dv = dv * (1.0 + noise * rng.uniform(-1.0, 1.0, dv.shape))
    n_kept = int(keep.sum())
    subsets = tuple(tags[i % len(tags)] for i in range(n_kept))
    return PairDataset(xyz1[keep], xyz2[keep], dv, subsets)


# round-trip probes triple the cost of every loss call; tests that are
# not about that term run without it
_FAST = LossConfig(include_rt=False)


# --- config ------------------------------------------------------------------


def test_loss_config_defaults_valid():
    cfg = LossConfig()
    b = cfg.bounds()
    assert b.shape == (72, 2)
    assert np.all(b[:, 0] < b[:, 1])


def test_loss_config_rejects_negative_weights():
    with pytest.raises(ValidationError):
        LossConfig(lambda_blue=-0.1)
    with pytest.raises(ValidationError):
        LossConfig(lambda_rt=math.nan)


def test_bound_overrides():
    cfg = LossConfig(bound_overrides={"gamma": (0.3, 0.6),
                                      "distance.q": (0.9, 1.2)})
    b = cfg.bounds()
    names = vector_names()
    for i, name in enumerate(names):
        if name.startswith("gamma["):
            assert tuple(b[i]) == (0.3, 0.6)
        if name == "distance.q":
            assert tuple(b[i]) == (0.9, 1.2)
    with pytest.raises(ValidationError):
        LossConfig(bound_overrides={"no.such.slot": (0.0, 1.0)})
    with pytest.raises(ValidationError):
        LossConfig(bound_overrides={"gamma": (0.6, 0.3)})


def test_loss_config_from_doc():
    cfg = loss_config_from_doc({"lambda_blue": 0.2, "include_munsell": False})
    assert cfg.lambda_blue == 0.2 and not cfg.include_munsell
    with pytest.raises(ParseError, match="unknown"):
        loss_config_from_doc({"lambda_blu": 0.2})
    with pytest.raises(ParseError):
        loss_config_from_doc(["not", "a", "dict"])
    with pytest.raises(ParseError):
        loss_config_from_doc({"bound_overrides": "gamma"})
    cfg2 = loss_config_from_doc(
        {"bound_overrides": {"gamma": [0.3, 0.6]}})
    assert cfg2.bound_overrides["gamma"] == (0.3, 0.6)


# --- loss --------------------------------------------------------------------


def test_loss_breakdown_sums_exactly(params, rng):
    ds = _dataset(params, rng, 40, tags=("Witt", "Leeds", "RIT-DuPont"))
    total, parts = loss(params, ds, None, LossConfig())
    assert total == math.fsum(parts.values())
    assert set(parts) == {"train_stress", "he_stress", "blue", "round_trip",
                          "achromatic", "munsell"}


def test_loss_toggles_zero_their_terms(params, rng):
    ds = _dataset(params, rng, 30, tags=("Leeds",), noise=0.05)
    he = _dataset(params, rng, 10, noise=0.05)
    cfg_all = LossConfig()
    _, parts = loss(params, ds, he, cfg_all)
    assert parts["he_stress"] > 0.0 and parts["blue"] > 0.0

    _, parts_off = loss(params, ds, he, LossConfig(
        include_he=False, include_blue=False, include_rt=False,
        include_ach=False, include_munsell=False))
    assert parts_off["he_stress"] == 0.0
    assert parts_off["blue"] == 0.0
    assert parts_off["round_trip"] == 0.0
    assert parts_off["achromatic"] == 0.0
    assert parts_off["munsell"] == 0.0
    # zero weight behaves like a toggle
    _, parts_w0 = loss(params, ds, he, LossConfig(lambda_blue=0.0))
    assert parts_w0["blue"] == 0.0


def test_loss_he_term_requires_dataset(params, rng):
    ds = _dataset(params, rng, 20)
    _, parts = loss(params, ds, None, LossConfig())
    assert parts["he_stress"] == 0.0


def test_loss_train_term_is_stress(params, rng):
    ds = _dataset(params, rng, 30)
    _, parts = loss(params, ds, None, LossConfig())
    want = stress(helmlab_metric(
        params.replace(neutral_lut=None).with_neutral_lut(
            params.neutral_lut))(ds.xyz1, ds.xyz2), ds.dv)
    assert parts["train_stress"] == pytest.approx(want, abs=1e-12)


# --- fit ---------------------------------------------------------------------


def test_fit_zero_iterations_returns_start(params, rng):
    ds = _dataset(params, rng, 30)
    res = fit(ds, None, LossConfig(), restarts=1, iters=0, seed=1,
              init_params=params)
    assert isinstance(res, FitResult)
    assert res.iterations == (0,)
    assert res.traces[0][0] == res.loss
    # parameters come back unchanged up to the LUT rebuild
    assert np.array_equal(res.params.to_vector(), params.to_vector())


def test_fit_validates_arguments(params, rng):
    ds = _dataset(params, rng, 20)
    with pytest.raises(ValidationError):
        fit(ds, None, LossConfig(), restarts=0)
    with pytest.raises(ValidationError):
        fit(ds, None, LossConfig(), iters=-1)
    with pytest.raises(ValidationError, match="outside its bounds"):
        fit(ds, None, LossConfig(bound_overrides={"distance.q": (2.0, 3.0)}),
            iters=1, init_params=params)  # default q=1.1 sits below the box


def test_fit_short_run_improves_perturbed_start(params, rng):
    ds = _dataset(params, rng, 50)
    vec = params.to_vector()
    pert = vec * (1.0 + 0.03 * rng.uniform(-1.0, 1.0, vec.shape))
    from helmlab.transform import build_neutral_lut
    p0 = params.from_vector(pert)
    p0 = p0.with_neutral_lut(build_neutral_lut(p0))
    s0 = stress(helmlab_metric(p0)(ds.xyz1, ds.xyz2), ds.dv)
    res = fit(ds, None, _FAST, restarts=1, iters=5, seed=3,
              init_params=p0)
    s1 = stress(helmlab_metric(res.params)(ds.xyz1, ds.xyz2), ds.dv)
    assert s1 < s0
    trace = res.traces[0]
    assert len(trace) >= 2
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    assert res.params.neutral_lut is not None
    assert res.evaluations[0] > 0


def test_fit_deterministic(params, rng):
    ds = _dataset(params, rng, 30, noise=0.05)
    a = fit(ds, None, _FAST, restarts=1, iters=2, seed=9,
            init_params=params)
    b = fit(ds, None, _FAST, restarts=1, iters=2, seed=9,
            init_params=params)
    assert a.loss == b.loss
    assert np.array_equal(a.params.to_vector(), b.params.to_vector())
    assert a.traces == b.traces


def test_fit_restarts_jitter_within_bounds(params, rng):
    ds = _dataset(params, rng, 25, noise=0.05)
    res = fit(ds, None, _FAST, restarts=2, iters=1, seed=11,
              init_params=params)
    assert len(res.traces) == 2
    assert len(res.iterations) == 2
    # best restart wins
    finals = [min(t) for t in res.traces]
    assert res.loss <= min(finals) + 1e-12


def test_fit_result_checkpoints(params, rng):
    ds = _dataset(params, rng, 25, noise=0.05)
    res = fit(ds, None, _FAST, restarts=1, iters=1, seed=5,
              init_params=params)
    marks = res.checkpoints[0]
    assert marks  # final summary mark is always appended
    it, total, parts = marks[-1]
    assert it == res.iterations[0]
    assert set(parts) == {"train_stress", "he_stress", "blue", "round_trip",
                          "achromatic", "munsell"}


# --- cross-validation --------------------------------------------------------


def test_cross_validate_partition_and_shapes(params, rng):
    ds = _dataset(params, rng, 40, noise=0.05)
    cv = cross_validate(ds, _FAST, folds=3, seed=2, iters=1,
                        init_params=params)
    assert isinstance(cv, CrossValidation)
    assert len(cv.folds) == 3
    assert sum(r.n_val for r in cv.folds) == len(ds)
    for r in cv.folds:
        assert r.n_train + r.n_val == len(ds)
        assert r.gap == pytest.approx(r.val_stress - r.train_stress, abs=1e-12)
    gaps = [r.gap for r in cv.folds]
    assert cv.mean_gap == pytest.approx(float(np.mean(gaps)), abs=1e-12)
    assert cv.std_gap == pytest.approx(float(np.std(gaps)), abs=1e-12)


def test_cross_validate_validation(params, rng):
    ds = _dataset(params, rng, 10)
    with pytest.raises(ValidationError):
        cross_validate(ds, LossConfig(), folds=1)
    with pytest.raises(ValidationError):
        cross_validate(ds, LossConfig(), folds=len(ds) + 5)
