"""Scripted cross-checks of the homology ledger against brute-force 3D homology.

Each scenario evolves a small flow, voxelizes a handful of frames and asks
the spacetime complex whether the ledger's generators descend: a generator
the ledger calls ``Alive`` must descend to a nontrivial cycle of the last
slice, ``AliveTrivial`` must bound in spacetime, and ``Terminated`` must do
neither.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolver import EvolverConfig, FlowState, run_until_event
from .grid import Sphere, Torus, build_grid, init_signed_distance
from .homology import (SpacetimeComplement, betti1, betti_numbers_dual, bounds_in_slice,
                       cycle_in_mask, descent_uniqueness_check, fixture_zoo, meridian_cycle,
                       rotational_cycle, verify_descent, voxelize_revolution)
from .tracker import ALIVE, ALIVE_TRIVIAL, TERMINATED, track_run

NO_CLASS = "NoClass"


@dataclass(frozen=True)
class FixtureResult:
    name: str
    expected: int
    betti1: int
    dual: tuple

    @property
    def passed(self):
        return self.betti1 == self.expected == self.dual[1]


def fixture_suite(n=24):
    return [FixtureResult(name, want, betti1(mask), betti_numbers_dual(mask))
            for name, (mask, want) in fixture_zoo(n).items()]


@dataclass(frozen=True)
class Scenario:
    name: str
    surface: object
    bounds: tuple            # (r_max, z_min, z_max)
    t_max: float
    static: bool = False


def scripted_scenarios():
    return (
        Scenario("static", Torus(2.0, 0.6), (3.0, -1.5, 1.5), 0.05, static=True),
        Scenario("inward_pinch", Torus(2.0, 0.6), (3.0, -1.5, 1.5), 0.25),
        Scenario("outward_pinch", Torus(1.2, 0.8), (2.5, -1.5, 1.5), 0.3),
        Scenario("sphere_extinction", Sphere(1.0), (2.0, -1.5, 1.5), 0.3),
    )


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    ledger: dict
    oracle: dict
    times: tuple
    ranks: tuple
    consistent: bool

    @property
    def agree(self):
        return self.ledger == self.oracle and self.consistent


def _ledger_state(status):
    return TERMINATED if status.terminated else status.state


def _oracle_state(cycle, st):
    """Descent verdict of one generator representative on one side."""
    last = st.slices - 1
    if cycle is None:
        return NO_CLASS, True
    if verify_descent(cycle, [], st).found:
        return ALIVE_TRIVIAL, True
    cands = [np.zeros((0, 3), np.int64)]
    if cycle_in_mask(st.masks[last], cycle):
        cands.append(cycle)
    rep = descent_uniqueness_check(cycle, cands, st)
    hit = [i for i in rep.successes if i > 0]
    if hit and not bounds_in_slice(st, last, cands[hit[0]]):
        return ALIVE, rep.consistent
    return TERMINATED, rep.consistent


def run_scenario(sc: Scenario, n=16, slices=6, h=1 / 32, frame_dt=0.01):
    r_max, z_min, z_max = sc.bounds
    grid = build_grid(r_max, z_min, z_max, h)
    f0 = init_signed_distance(sc.surface, grid)
    if sc.static:
        from .evolver import FlowFrame
        frames = [FlowFrame(k * frame_dt, k, f0) for k in range(slices)]
        events = []
    else:
        frames, events = run_until_event(FlowState(0.0, f0),
                                         EvolverConfig(t_max=sc.t_max, frame_dt=frame_dt))
    ledger, _ = track_run(frames, events)
    pick = np.unique(np.linspace(0, len(frames) - 1, slices).round().astype(int))
    regions = [voxelize_revolution(frames[i].field, n, frames[i].time) for i in pick]
    ranks = tuple((betti1(r.w_in), betti1(r.w_out)) for r in regions)

    reg0 = regions[0]
    a_cyc = b_cyc = None
    if isinstance(sc.surface, Torus):
        R, rho = sc.surface.R, sc.surface.rho
        a_cyc = rotational_cycle(reg0, R, sc.surface.z0)
        r_lo = 0.0 if R - rho < 0.5 else 0.5 * (R - rho)
        r_hi = 0.5 * (R + rho + r_max)
        dz = 0.5 * (rho + min(z_max, -z_min))
        b_cyc = meridian_cycle(reg0, r_lo, r_hi, sc.surface.z0 - dz, sc.surface.z0 + dz)
        if not (cycle_in_mask(reg0.w_in, a_cyc) and cycle_in_mask(reg0.w_out, b_cyc)):
            raise ValueError(f"scenario {sc.name}: generator cycles miss the slice-0 masks")

    st_in = SpacetimeComplement.from_regions(regions, "in")
    st_out = SpacetimeComplement.from_regions(regions, "out")
    a_state, a_ok = _oracle_state(a_cyc, st_in)
    b_state, b_ok = _oracle_state(b_cyc, st_out)
    oracle = {"a0": a_state, "b0": b_state}
    led = {"a0": _ledger_state(ledger.a0), "b0": _ledger_state(ledger.b0)}
    if a_cyc is None:
        # no torus: the ledger never had nontrivial generators
        led = {k: NO_CLASS if v == ALIVE_TRIVIAL else v for k, v in led.items()}
        if any(r != (0, 0) for r in ranks):
            oracle = {"a0": "RankNonzero", "b0": "RankNonzero"}
    return ScenarioResult(sc.name, led, oracle, tuple(float(r.time) for r in regions), ranks,
                          a_ok and b_ok)


def descent_suite(n=16, slices=6):
    return [run_scenario(sc, n, slices) for sc in scripted_scenarios()]
