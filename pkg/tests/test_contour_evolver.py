import math

import numpy as np
import pytest

from genusflow.contour import extract_contour, label_regions
from genusflow.evolver import (ALL_VANISH, AXIS_TOUCH, COMPONENT_VANISH, HORIZON, EvolverConfig,
                               FlowState, check_self_similarity, contour_radius_profile,
                               curvature_rhs, run_until_event, step)
from genusflow.exceptions import ConfigurationError, NumericalBlowup
from genusflow.grid import ScalarField, Sphere, Torus, build_grid, init_signed_distance


def _field(spec, h=1 / 32, box=(3.0, -1.5, 1.5)):
    return init_signed_distance(spec, build_grid(*box, h))


def test_torus_contour_is_one_loop():
    c = extract_contour(_field(Torus(2.0, 0.5)))
    assert (len(c.loops), len(c.arcs), len(c.boundary_curves)) == (1, 0, 0)
    loop = c.loops[0]
    assert loop.length() == pytest.approx(2 * math.pi * 0.5, rel=2e-3)
    # inside on the left: counterclockwise
    assert loop.signed_area() == pytest.approx(math.pi * 0.25, rel=5e-3)


def test_sphere_contour_is_one_axis_arc():
    c = extract_contour(_field(Sphere(1.0)))
    assert (len(c.loops), len(c.arcs)) == (0, 1)
    arc = c.arcs[0]
    assert arc.points[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert arc.points[-1, 0] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(np.hypot(*arc.points.T), 1.0, atol=2e-3)


def test_empty_field_has_empty_contour():
    g = build_grid(1.0, -1.0, 1.0, 1 / 8)
    assert extract_contour(ScalarField(g, np.ones(g.shape))).empty


def test_label_regions_counts_two_tubes():
    g = build_grid(3.0, -2.0, 2.0, 1 / 16)
    R, Z = g.mesh()
    v = np.minimum(np.hypot(R - 2, Z - 1) - 0.4, np.hypot(R - 2, Z + 1) - 0.4)
    labels, n = label_regions(v, inside=True)
    assert n == 2
    c = extract_contour(ScalarField(g, v))
    assert len(c.loops) == 2


def test_curvature_rhs_of_sphere_is_mean_curvature():
    f = _field(Sphere(1.0), h=1 / 64, box=(2.0, -2.0, 2.0))
    rhs = curvature_rhs(f, 1e-9)
    # for u = |x| - 1 the operator gives +2/|x|, so u grows and the sphere shrinks
    i, j = f.grid.node(0.8, 0.6)
    assert rhs.values[i, j] == pytest.approx(2.0, rel=1e-2)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        EvolverConfig(cfl=0.5)
    with pytest.raises(ConfigurationError):
        EvolverConfig(t_max=0)
    assert EvolverConfig().dt_for(0.1) == pytest.approx(0.2 * 0.01)


def test_step_detects_blowup():
    f = _field(Sphere(1.0))
    bad = f.with_values(np.where(f.values > 1, np.nan, f.values))
    with pytest.raises(NumericalBlowup):
        step(FlowState(0.0, bad), EvolverConfig())


def test_sphere_shrinks_and_vanishes():
    f = _field(Sphere(1.0), h=1 / 32, box=(1.5, -1.5, 1.5))
    frames, events = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=0.4, frame_dt=0.02))
    assert events[-1].kind == ALL_VANISH
    assert abs(events[-1].time - 0.25) < 0.02
    prof = contour_radius_profile(frames)
    early = prof[(prof[:, 0] > 0) & (prof[:, 0] < 0.15)]
    slope = np.polyfit(early[:, 0], early[:, 1] ** 2, 1)[0]
    assert slope == pytest.approx(-4.0, abs=0.3)
    # the shrinking sphere is self-similar about its extinction time
    pre = [fr for fr in frames if 0.05 <= fr.time <= 0.15]
    assert check_self_similarity(pre, 0.25) < 4 * f.grid.h


def test_thin_torus_pinches_inward():
    f = _field(Torus(2.0, 0.3), h=1 / 32, box=(2.75, -0.75, 0.75))
    _, events = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=0.2, frame_dt=0.01))
    kinds = [e.kind for e in events]
    assert COMPONENT_VANISH in kinds or ALL_VANISH in kinds
    assert AXIS_TOUCH not in kinds


def test_fat_torus_closes_its_hole():
    f = _field(Torus(1.0, 0.8), h=1 / 32, box=(2.25, -1.25, 1.25))
    _, events = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=0.3, frame_dt=0.01))
    assert events[0].kind == AXIS_TOUCH
    assert events[0].location[0] == pytest.approx(0.0)


def test_horizon_event_and_stop_callback():
    f = _field(Torus(2.0, 0.6))
    frames, events = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=0.02, frame_dt=0.01))
    assert events[-1].kind == HORIZON
    assert frames[-1].time == pytest.approx(0.02, abs=1e-3)
    frames, _ = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=1.0, frame_dt=0.005),
                                stop=lambda fr, ev: len(fr) >= 3)
    assert len(frames) == 3


def test_self_similarity_argument_checks():
    f = _field(Sphere(1.0))
    frames, _ = run_until_event(FlowState(0.0, f), EvolverConfig(t_max=0.02, frame_dt=0.01))
    with pytest.raises(ConfigurationError):
        check_self_similarity(frames, 0.0)
    with pytest.raises(ConfigurationError):
        check_self_similarity(frames[:2], 0.25)
    assert check_self_similarity(frames[:1], 0.25) == 0.0
