"""Property-based checks of invariants that hold for every input."""

import json
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from genusflow.bessel import i0_quadrature, i0e
from genusflow.config import ExperimentConfig
from genusflow.contour import extract_contour
from genusflow.entropy import density, entropy, surface_samples
from genusflow.evolver import AXIS_TOUCH, COMPONENT_VANISH, FlowEvent
from genusflow.grid import ScalarField, Torus, build_grid, init_signed_distance, torus_profile
from genusflow.homology import (CubicalComplex, betti1, betti_numbers_dual, boundary_of_chain,
                                spacetime_presence, voxelize_revolution)
from genusflow.tracker import (ALIVE, ALIVE_TRIVIAL, INDETERMINATE, TERMINATED, decompose,
                               update_ledger)

masks = arrays(np.bool_, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)))


@given(masks)
def test_boundary_of_boundary_is_zero(mask):
    cx = CubicalComplex.from_mask(mask)
    for d in (2, 3):
        for k in range(cx.count(d)):
            assert boundary_of_chain(cx, d - 1, boundary_of_chain(cx, d, [k])).size == 0


@given(masks)
def test_betti1_matches_euler_characteristic_oracle(mask):
    b0, b1, b2 = betti_numbers_dual(mask)
    assert betti1(mask) == b1


@given(masks, st.permutations([0, 1, 2]), st.lists(st.booleans(), min_size=3, max_size=3))
def test_betti1_is_invariant_under_cube_symmetries(mask, perm, flips):
    m = np.transpose(mask, perm)
    for ax, f in enumerate(flips):
        if f:
            m = np.flip(m, ax)
    assert betti1(m) == betti1(mask)


@given(st.lists(arrays(np.bool_, (3, 3, 3)), min_size=1, max_size=3))
def test_spacetime_complex_is_a_complex(ms):
    cx = CubicalComplex(spacetime_presence(ms))
    for d in range(1, cx.ndim + 1):
        M = cx.boundary_matrix(d)
        if d >= 2:
            assert not ((cx.boundary_matrix(d - 1) @ M).toarray() % 2).any()
    # each slice sits inside the spacetime complex as a subcomplex
    assert cx.euler_characteristic() == sum(
        CubicalComplex.from_mask(m).euler_characteristic() for m in ms) - sum(
        CubicalComplex.from_mask(a & b).euler_characteristic() for a, b in zip(ms, ms[1:]))


@given(st.floats(0.0, 300.0))
def test_i0e_matches_quadrature(x):
    assert math.isclose(float(i0e(x)), float(i0_quadrature(x)[0]), rel_tol=1e-10)


TORUS = surface_samples(torus_profile(Torus(1.5, 0.5), ds=1e-3))


@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0), st.floats(0.0, 3.0), st.floats(-2.0, 2.0),
       st.floats(0.05, 4.0))
def test_density_scaling_and_translation_law(lam, dz, a, z0, t0):
    scaled = type(TORUS)(TORUS.r * lam, TORUS.z * lam + dz, TORUS.w * lam)
    lhs = density(scaled, (a * lam, z0 * lam + dz, t0 * lam * lam))
    rhs = density(TORUS, (a, z0, t0))
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-300)


@settings(max_examples=6)
@given(st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
def test_entropy_scale_and_translation_invariance(lam, dz):
    base = torus_profile(Torus(2.0, 0.6), ds=2e-3)
    e0 = entropy(base, grid=10, max_iter=100, restarts=2).value
    e1 = entropy(base.scaled(lam).translated(dz), grid=10, max_iter=100, restarts=2).value
    assert abs(e0 - e1) < 1e-3


@given(st.floats(1.0, 2.0), st.floats(0.2, 0.6), st.integers(4, 20))
def test_voxel_regions_are_disjoint_and_separated(R, rho, n):
    g = build_grid(3.0, -1.5, 1.5, 1 / 16)
    reg = voxelize_revolution(init_signed_distance(Torus(R, rho), g), n)
    assert not (reg.w_in & reg.w_out).any()


# ledger state machine ------------------------------------------------------------

_G = build_grid(3.0, -1.5, 1.5, 1 / 16)
_R, _Z = _G.mesh()
_SHAPES = {
    "torus": np.hypot(_R - 2, _Z) - 0.5,
    "thin_torus": np.hypot(_R - 2, _Z) - 0.2,
    "fat": np.hypot(_R - 1.2, _Z) - 1.0,
    "ball": np.hypot(_R, _Z) - 1.0,
    "two": np.minimum(np.hypot(_R - 2, _Z - 0.8), np.hypot(_R - 2, _Z + 0.8)) - 0.3,
    "empty": np.ones(_G.shape),
}
_DECO = {}


def _frame(name):
    if name not in _DECO:
        f = ScalarField(_G, _SHAPES[name])
        _DECO[name] = decompose(extract_contour(f), f)
    return _DECO[name]


steps = st.lists(st.tuples(st.sampled_from(sorted(_SHAPES)),
                           st.sampled_from(["none", "inward", "axis", "far"])),
                 min_size=1, max_size=8)


@given(steps)
def test_ledger_state_machine(seq):
    led = update_ledger(None, (0.0, *_frame("torus")))
    seen = [(led.a0.state, led.b0.state)]
    for k, (shape, ev) in enumerate(seq, start=1):
        t = 0.01 * k
        events = {"none": [],
                  "inward": [FlowEvent(COMPONENT_VANISH, t - 0.005, (2.0, 0.0),
                                       detail={"touches_axis": False})],
                  "axis": [FlowEvent(AXIS_TOUCH, t - 0.005, (0.0, 0.0))],
                  "far": [FlowEvent(COMPONENT_VANISH, t - 0.005, (0.3, 1.3),
                                    detail={"touches_axis": False})]}[ev]
        before = (led.a0, led.b0)
        led = update_ledger(led, (t, *_frame(shape)), events)
        a, b = led.a0, led.b0
        # a settled ledger never changes again
        if ALIVE not in (before[0].state, before[1].state):
            assert (a, b) == before
        # at most one generator ends at a neck; the other is then trivial
        if a.clean or b.clean:
            assert a.clean != b.clean
            assert (b if a.clean else a).state == ALIVE_TRIVIAL
        if a.kind == INDETERMINATE:
            assert b.kind == INDETERMINATE
        for s in (a.state, b.state):
            assert s in (ALIVE, ALIVE_TRIVIAL, TERMINATED)
        seen.append((a.state, b.state))
    assert len(led.history) == len(seq) + 1
    assert [r.time for r in led.history] == sorted(r.time for r in led.history)


@given(st.fixed_dictionaries({
    "h": st.sampled_from([1 / 16, 1 / 32, 1 / 64]),
    "t_max": st.floats(0.1, 2.0),
    "frame_dt": st.sampled_from([0.005, 0.01, 0.02]),
    "post_frames": st.one_of(st.none(), st.integers(0, 5)),
    "seed": st.integers(0, 2 ** 31),
}), st.sampled_from([None, 8, 24, 32]))
def test_config_round_trip(run, n):
    cfg = ExperimentConfig({"run": run, "validate": {"n": 16}}).with_overrides(n=n)
    back = ExperimentConfig(json.loads(cfg.dumps()))
    assert back == cfg and back.run == cfg.run
    assert back.dumps() == cfg.dumps()
