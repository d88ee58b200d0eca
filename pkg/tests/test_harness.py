import json
import math

import pytest

from genusflow.exceptions import ConfigurationError, SetupError
from genusflow.grid import FamilySpec, Sphere, Torus
from genusflow.harness import (A, B, UNDECIDED, RunCache, RunConfig, avoidance_check, bisect,
                               classify_flow, dichotomy_check, dichotomy_labels_monotone,
                               entropy_monotonicity_check, event_consistency_check,
                               genus_timeline_check, h1_monotonicity_check, run_member, sweep,
                               termination_semicontinuity_probe)

FAMILY = FamilySpec(Torus(1.0, 0.6), -0.3, 0.25, samples=5)
COARSE = RunConfig(h=1 / 32, t_max=0.4)


@pytest.fixture(scope="module")
def cache():
    return RunCache()


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(h=0.5)
    with pytest.raises(ConfigurationError):
        RunConfig(frame_dt=0.1, archive_dt=0.05)
    with pytest.raises(ConfigurationError):
        RunConfig(workers=0)
    assert RunConfig(h=1 / 32).refined().h == pytest.approx(1 / 64)
    assert RunConfig(workers=1).key() == RunConfig(workers=4).key()


def test_endpoint_labels_and_caching(cache):
    a = classify_flow(FAMILY, 0.0, COARSE, cache)
    b = classify_flow(FAMILY, 1.0, COARSE, cache)
    assert (a.label, b.label) == (A, B)
    assert a.t == a.t_in and a.t_out is None
    assert b.t == b.t_out and b.t_in is None
    hits = cache.hits
    classify_flow(FAMILY, 0.0, COARSE, cache)
    assert cache.hits == hits + 1
    d = a.to_dict()
    assert d["label"] == A and d["a0"].startswith("Terminated")


def test_parameter_outside_unit_interval():
    with pytest.raises(ConfigurationError):
        run_member(FAMILY, 1.5, COARSE)


def test_sweep_dichotomy(cache):
    recs = sweep(FAMILY, COARSE, cache)
    assert [r.s for r in recs] == [0.0, 0.25, 0.5, 0.75, 1.0]
    rep = dichotomy_check(recs)
    assert rep.passed, rep
    for r in recs:
        assert genus_timeline_check(r).passed
        assert event_consistency_check(r)


def test_horizon_is_undecided():
    c = classify_flow(FAMILY, 0.5, RunConfig(h=1 / 32, t_max=0.05))
    assert c.label == UNDECIDED and c.cause == "horizon" and not c.clean


def test_bisect_brackets_and_is_deterministic(cache):
    rep = bisect(FAMILY, 1 / 16, COARSE, cache)
    assert rep.success and rep.width <= 1 / 16
    lo, hi = rep.bracket
    labels = {row["s"]: row["label"] for row in rep.samples}
    assert labels[lo] == A and labels[hi] == B
    assert rep.diagnostics["labels_monotone"]
    again = bisect(FAMILY, 1 / 16, COARSE, RunCache())
    assert again.to_json() == rep.to_json()
    assert json.loads(rep.to_json())["interior_runs"] == rep.interior_runs


def test_bisect_needs_an_a_b_bracket():
    flipped = FamilySpec(Torus(1.0, 0.6), -0.3, 0.25)
    with pytest.raises(SetupError):
        bisect(flipped, 1 / 4, RunConfig(h=1 / 32, t_max=0.02))
    with pytest.raises(ConfigurationError):
        bisect(FAMILY, 0.0, COARSE)


def test_labels_monotone_helper():
    class C:
        def __init__(self, label):
            self.label = label
    assert dichotomy_labels_monotone([C(A), C(UNDECIDED), C(B), C(B)])
    assert not dichotomy_labels_monotone([C(B), C(A)])


def test_semicontinuity_probe(cache):
    rep = termination_semicontinuity_probe(FAMILY, 0.0, radii=(1 / 8,), config=COARSE, cache=cache)
    assert rep.generator == "a0"
    assert [row[1] for row in rep.table] == [0.125]
    assert rep.passed


def test_h1_and_entropy_checks(cache):
    rec = run_member(FAMILY, 0.0, COARSE, cache)
    assert h1_monotonicity_check(rec, n=16).passed
    trace = entropy_monotonicity_check(rec, grid=8, max_iter=50, restarts=2)
    assert trace.passed and len(trace.values) >= 1


def test_avoidance_of_concentric_spheres():
    cfg = RunConfig(h=1 / 32, t_max=0.2, frame_dt=0.02)
    rep = avoidance_check(Sphere(0.5), Sphere(1.0), cfg)
    assert rep.passed
    for t, g in zip(rep.times, rep.gaps):
        exact = math.sqrt(1 - 4 * t) - math.sqrt(max(0.25 - 4 * t, 0.0))
        assert abs(g - exact) <= 3 * cfg.h
    with pytest.raises(SetupError):
        avoidance_check(Sphere(1.0), Sphere(1.05), cfg)
