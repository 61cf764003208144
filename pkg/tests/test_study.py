"""Tests for the replication-study harness: artifacts, resume, determinism."""
import json
import time

import numpy as np
import pytest

from tfsir.errors import ConfigError, ResumeError
from tfsir.priors import PriorSpec
from tfsir.sampler import McmcConfig
from tfsir.simulate import RateSchedule
from tfsir.study import StudyDesign, builtin_designs, run_study


def _tiny_design(**kw):
    base = dict(
        name="tiny",
        schedule=RateSchedule(breakpoints=(11,), beta_values=(0.25, 0.12), gamma_values=(0.1, 0.06)),
        population=2e5,
        replicates=2,
        priors=(PriorSpec(kind="student-t"),),
        mcmc=McmcConfig(iterations=300, thin=3, burn_in=20, seed=7),
        horizon=20,
    )
    base.update(kw)
    return StudyDesign(**base)


def _strip_timestamps(manifest: dict) -> dict:
    out = json.loads(json.dumps(manifest))
    for entry in out["replicates"].values():
        entry.pop("completed_at")
    return out


# --------------------------------------------------------------------- design

def test_builtin_designs_table():
    designs = builtin_designs()
    assert [d.name for d in designs] == ["design1", "design2", "design3", "design4"]
    for d in designs:
        assert d.schedule.breakpoints == (21, 41, 61)
        assert d.horizon == 80 and d.replicates == 10
        assert d.generator == "poisson"
        assert [s.kind for s in d.priors] == ["student-t", "horseshoe", "spike-slab"]
        assert d.seed_fraction == 3e-4
    d1, d2, d3, d4 = designs
    assert d1.schedule.beta_values == (0.15, 0.20, 0.10, 0.05)
    assert d1.schedule.gamma_values == (0.05, 0.09, 0.10, 0.08)
    assert d1.population == 1e6 and d2.population == 1e6
    assert d3.schedule.beta_values == (0.07, 0.09, 0.08, 0.05)
    assert d3.schedule.gamma_values == (0.02, 0.04, 0.06, 0.07)
    assert d3.population == 1e7 and d4.population == 1e7
    assert d2.schedule.beta_values == (0.10, 0.15, 0.10, 0.05)
    assert d4.schedule.beta_values == (0.05, 0.08, 0.05, 0.07)


def test_design_validation():
    with pytest.raises(ConfigError):
        _tiny_design(replicates=0)
    with pytest.raises(ConfigError):
        _tiny_design(generator="exact")
    with pytest.raises(ConfigError):
        _tiny_design(priors=())
    with pytest.raises(ConfigError):
        _tiny_design(priors=(PriorSpec(kind="student-t"), PriorSpec(kind="student-t", a=2.0)))
    with pytest.raises(ConfigError):
        _tiny_design(horizon=1)
    with pytest.raises(ConfigError):
        _tiny_design(seed_fraction=0.0)
    with pytest.raises(ConfigError):
        _tiny_design(seed_fraction=1.5)


# ------------------------------------------------------------------ artifacts

def test_run_study_artifacts_and_shapes(tmp_path):
    design = _tiny_design()
    result = run_study(design, tmp_path / "out")
    out = tmp_path / "out"
    assert (out / "manifest.json").exists()
    assert (out / "estimates_rep001.csv").exists()
    assert (out / "estimates_rep002.csv").exists()
    assert (out / "metrics_student-t.csv").exists()
    assert not list(out.glob("*.partial"))
    est = result.estimates["student-t"]
    assert est["beta"].shape == (2, 20) and est["gamma"].shape == (2, 20)
    assert np.all(est["beta"] >= 0)
    tm, rm = result.metrics["student-t"]
    assert tm.param == "beta" and rm.param == "gamma"
    assert tm.mab.shape == (20,)
    assert np.isfinite(tm.sd).all()  # defined for L = 2
    header = (out / "estimates_rep001.csv").read_text().splitlines()[0]
    assert header == "t,param,prior,value"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed_fraction"] == 3e-4
    assert manifest["replicates"]["1"]["data_seed"] == 8
    assert manifest["priors"][0]["kind"] == "student-t"


def test_single_replicate_metrics_are_na(tmp_path):
    design = _tiny_design(replicates=1)
    result = run_study(design, tmp_path / "solo")
    tm, _ = result.metrics["student-t"]
    assert np.isnan(tm.sd).all()
    assert np.isfinite(tm.mab).all()
    text = (tmp_path / "solo" / "metrics_student-t.csv").read_text()
    assert ",NA,NA" in text.splitlines()[1]


def test_point_estimate_and_jobs_validation(tmp_path):
    design = _tiny_design()
    with pytest.raises(ConfigError):
        run_study(design, tmp_path / "x", point="mode")
    with pytest.raises(ConfigError):
        run_study(design, tmp_path / "x", jobs=0)


# ---------------------------------------------------------------- determinism

def test_reruns_are_byte_identical(tmp_path):
    design = _tiny_design()
    run_study(design, tmp_path / "a")
    run_study(design, tmp_path / "b")
    for name in ("estimates_rep001.csv", "estimates_rep002.csv", "metrics_student-t.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = _strip_timestamps(json.loads((tmp_path / "a" / "manifest.json").read_text()))
    mb = _strip_timestamps(json.loads((tmp_path / "b" / "manifest.json").read_text()))
    assert ma == mb


def test_parallel_matches_serial(tmp_path):
    design = _tiny_design()
    run_study(design, tmp_path / "serial", jobs=1)
    run_study(design, tmp_path / "par", jobs=2)
    for name in ("estimates_rep001.csv", "estimates_rep002.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_median_point_estimate_differs(tmp_path):
    design = _tiny_design(replicates=1)
    run_study(design, tmp_path / "mean", point="mean")
    run_study(design, tmp_path / "med", point="median")
    a = (tmp_path / "mean" / "estimates_rep001.csv").read_text()
    b = (tmp_path / "med" / "estimates_rep001.csv").read_text()
    assert a != b


def test_seed_fraction_changes_data(tmp_path):
    run_study(_tiny_design(replicates=1), tmp_path / "lo")
    run_study(_tiny_design(replicates=1, seed_fraction=2e-3), tmp_path / "hi")
    a = (tmp_path / "lo" / "estimates_rep001.csv").read_text()
    b = (tmp_path / "hi" / "estimates_rep001.csv").read_text()
    assert a != b


# --------------------------------------------------------------------- resume

def test_resume_skips_completed_replicates(tmp_path):
    design = _tiny_design()
    out = tmp_path / "study"
    run_study(design, out)
    before = {p.name: p.stat().st_mtime_ns for p in out.glob("estimates_*.csv")}
    time.sleep(0.01)
    run_study(design, out)
    after = {p.name: p.stat().st_mtime_ns for p in out.glob("estimates_*.csv")}
    assert before == after


def test_resume_regenerates_missing_file(tmp_path):
    design = _tiny_design()
    out = tmp_path / "study"
    run_study(design, out)
    target = out / "estimates_rep002.csv"
    original = target.read_bytes()
    keep = (out / "estimates_rep001.csv").stat().st_mtime_ns
    target.unlink()
    time.sleep(0.01)
    run_study(design, out)
    assert target.read_bytes() == original
    assert (out / "estimates_rep001.csv").stat().st_mtime_ns == keep


def test_corrupt_manifest_refuses_resume(tmp_path):
    design = _tiny_design()
    out = tmp_path / "study"
    run_study(design, out)
    (out / "manifest.json").write_text("{ not json")
    with pytest.raises(ResumeError, match="delete it to start the study fresh"):
        run_study(design, out)


def test_manifest_layout_checked(tmp_path):
    design = _tiny_design()
    out = tmp_path / "study"
    run_study(design, out)
    (out / "manifest.json").write_text(json.dumps({"design": "tiny"}))
    with pytest.raises(ResumeError, match="unexpected layout"):
        run_study(design, out)


def test_manifest_settings_mismatch(tmp_path):
    out = tmp_path / "study"
    run_study(_tiny_design(), out)
    changed = _tiny_design(mcmc=McmcConfig(iterations=300, thin=3, burn_in=20, seed=8))
    with pytest.raises(ResumeError, match="different settings"):
        run_study(changed, out)
