"""Family runs, A/B classification, bisection for the critical parameter and
the cross-module validation checks.

A run is classified by the homology ledger of its flow: label ``A`` when the
inside generator ``a0`` ends at an inward neck, ``B`` when the outside
generator ``b0`` ends at an outward neck, ``Indeterminate`` otherwise.
"""

from __future__ import annotations

import json
import logging
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .contour import extract_contour
from .entropy import entropy, profiles_of_contour
from .evolver import AXIS_TOUCH, COMPONENT_VANISH, EvolverConfig, FlowState, run_until_event
from .exceptions import ConfigurationError, SetupError
from .grid import build_grid, family_surface, init_signed_distance, surface_extent
from .homology import check_h1_monotonicity, voxelize_revolution
from .tracker import INDETERMINATE, INWARD, OUTWARD, analyze_frame, update_ledger

logger = logging.getLogger(__name__)

A, B, UNDECIDED = "A", "B", "Indeterminate"


@dataclass(frozen=True)
class RunConfig:
    """Resolution, horizon and bookkeeping of harness runs.

    ``post_frames`` frames are kept after the ledger settles before a run
    stops (``None`` runs to extinction or ``t_max``). ``archive_dt`` is the
    cadence of the frames kept in memory for the 3D and entropy checks.
    """

    h: float = 1 / 64
    t_max: float = 1.2
    frame_dt: float = 0.01
    cfl: float = 0.2
    reinit_every: int = 100
    event_every: int = 10
    margin: float = 0.375
    post_frames: Optional[int] = 3
    archive_dt: float = 0.05
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.h <= 0.25:
            raise ConfigurationError(f"grid spacing {self.h} outside (0, 0.25]")
        if self.frame_dt <= 0 or self.archive_dt < self.frame_dt:
            raise ConfigurationError("need 0 < frame_dt <= archive_dt")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.post_frames is not None and self.post_frames < 0:
            raise ConfigurationError("post_frames must be >= 0")

    def evolver(self):
        return EvolverConfig(cfl=self.cfl, t_max=self.t_max, reinit_every=self.reinit_every,
                             frame_dt=self.frame_dt, event_every=self.event_every)

    def refined(self):
        """Half the grid spacing (and so a quarter of the time step)."""
        return replace(self, h=self.h / 2)

    def key(self):
        d = asdict(self)
        d.pop("workers")
        return tuple(sorted(d.items()))


# --- single runs -----------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    s: Optional[float]
    label: str
    a0: object
    b0: object
    cause: str = ""
    h: float = 0.0
    retried: bool = False

    @property
    def t_in(self):
        return self.a0.time if self.a0.terminated and self.a0.kind == INWARD else None

    @property
    def t_out(self):
        return self.b0.time if self.b0.terminated and self.b0.kind == OUTWARD else None

    @property
    def t(self):
        return self.t_in if self.label == A else self.t_out if self.label == B else None

    @property
    def clean(self):
        return self.label in (A, B)

    def to_dict(self):
        return {"s": self.s, "label": self.label, "t": self.t, "t_in": self.t_in,
                "t_out": self.t_out, "cause": self.cause, "h": self.h,
                "retried": self.retried, "a0": self.a0.label(), "b0": self.b0.label()}


def classify_ledger(ledger, s=None, h=0.0):
    a0, b0 = ledger.a0, ledger.b0
    if a0.clean and a0.kind == INWARD and not b0.terminated:
        return Classification(s, A, a0, b0, "inward neck", h)
    if b0.clean and b0.kind == OUTWARD and not a0.terminated:
        return Classification(s, B, a0, b0, "outward neck", h)
    if a0.terminated and a0.kind == INDETERMINATE:
        cause = a0.detail.get("reason", "indeterminate")
    else:
        cause = "horizon"
    return Classification(s, UNDECIDED, a0, b0, cause, h)


@dataclass(frozen=True, eq=False)
class RunRecord:
    """What a harness run keeps: ledger, genus timeline, events and archived frames."""

    s: Optional[float]
    surface: object
    classification: Classification
    ledger: object
    events: tuple
    timeline: tuple
    archive: tuple
    runtime: float = 0.0

    @property
    def cadence(self):
        t = [row[0] for row in self.timeline]
        return float(np.median(np.diff(t))) if len(t) > 1 else 0.0


def run_flow(surface, grid, config: RunConfig, s=None):
    """Evolve ``surface`` on ``grid`` while keeping the ledger up to date."""
    field0 = init_signed_distance(surface, grid)
    every = max(int(round(config.archive_dt / config.frame_dt)), 1)
    st = {"ledger": None, "done": 0, "settled": None}
    timeline, archive = [], []

    def consume(frames, events):
        while st["done"] < len(frames):
            k = st["done"]
            fr = frames[k]
            item = analyze_frame(fr)
            st["ledger"] = update_ledger(st["ledger"], item, events)
            timeline.append((float(fr.time), int(item[2].genus), bool(item[2].empty)))
            if k % every == 0:
                archive.append(fr)
            if st["settled"] is None and st["ledger"].termination() is not None:
                st["settled"] = k
            st["done"] += 1

    def stop(frames, events):
        consume(frames, events)
        if config.post_frames is None or st["settled"] is None:
            return False
        return len(frames) - 1 - st["settled"] >= config.post_frames

    t0 = _time.perf_counter()
    frames, events = run_until_event(FlowState(0.0, field0), config.evolver(), stop=stop)
    consume(frames, events)
    if archive[-1] is not frames[-1]:
        archive.append(frames[-1])
    ledger = st["ledger"]
    cls = classify_ledger(ledger, s, grid.h)
    return RunRecord(s, surface, cls, ledger, tuple(events), tuple(timeline), tuple(archive),
                     _time.perf_counter() - t0)


def family_grid(family, h, margin):
    """One grid holding every member of the family with ``margin`` to spare."""
    ext = [surface_extent(family_surface(family, float(s))) for s in (0.0, 0.5, 1.0)]
    rhi = max(e[0] for e in ext)
    zlo = min(e[1] for e in ext)
    zhi = max(e[2] for e in ext)
    return build_grid(math.ceil((rhi + margin) / h) * h, math.floor((zlo - margin) / h) * h,
                      math.ceil((zhi + margin) / h) * h, h)


class RunCache:
    """In-memory store of run records keyed by (s, resolution settings)."""

    def __init__(self):
        self._runs = {}
        self.hits = 0

    def get(self, s, config):
        rec = self._runs.get((float(s), config.key()))
        if rec is not None:
            self.hits += 1
        return rec

    def put(self, s, config, record):
        self._runs[(float(s), config.key())] = record

    def records(self):
        return [self._runs[k] for k in sorted(self._runs, key=lambda k: (k[0], k[1]))]


def run_member(family, s, config, cache=None):
    if not 0.0 <= s <= 1.0:
        raise ConfigurationError(f"family parameter {s} outside [0, 1]")
    if cache is not None:
        rec = cache.get(s, config)
        if rec is not None:
            return rec
    rec = run_flow(family_surface(family, s), family_grid(family, config.h, config.margin),
                   config, s=float(s))
    logger.info("s=%.6f -> %s (t=%s) in %.1fs", s, rec.classification.label,
                rec.classification.t, rec.runtime)
    if cache is not None:
        cache.put(s, config, rec)
    return rec


def classify_flow(family, s, config=RunConfig(), cache=None):
    """Label of the family member at ``s``; see :class:`Classification`."""
    return run_member(family, s, config, cache).classification


def _member(args):
    family, s, config = args
    return run_member(family, s, config)


def sweep(family, config=RunConfig(), cache=None, params=None):
    """Run every sample of the family; records come back ordered by s."""
    params = [float(s) for s in (family.parameters() if params is None else params)]
    todo = [s for s in params if cache is None or cache.get(s, config) is None]
    if config.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            done = list(pool.map(_member, [(family, s, config) for s in todo]))
        for s, rec in zip(todo, done):
            if cache is not None:
                cache.put(s, config, rec)
    else:
        done = [run_member(family, s, config, cache) for s in todo]
    got = dict(zip(todo, done))
    return [got[s] if s in got else cache.get(s, config) for s in params]


@dataclass(frozen=True)
class DichotomyReport:
    labels: tuple
    exactly_one: bool
    monotone: bool
    endpoints: bool

    @property
    def passed(self):
        return self.exactly_one and self.monotone and self.endpoints


def dichotomy_check(records):
    """Clean runs end exactly one generator; no A above a B; A at s=0, B at s=1."""
    recs = sorted(records, key=lambda r: r.s)
    labels = tuple((r.s, r.classification.label) for r in recs)
    one = all(sum(g.terminated for g in (r.ledger.a0, r.ledger.b0)) == 1
              for r in recs if r.classification.clean)
    clean = [lab for _, lab in labels if lab in (A, B)]
    mono = all(not (x == B and y == A) for i, x in enumerate(clean) for y in clean[i + 1:])
    ends = labels[0] == (0.0, A) and labels[-1] == (1.0, B)
    return DichotomyReport(labels, one, mono, ends)


# --- bisection -------------------------------------------------------------------------

@dataclass(frozen=True)
class BisectionReport:
    samples: tuple
    bracket: tuple
    tol: float
    interior_runs: int
    endpoint_gap: Optional[float]
    gap_trend: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]

    @property
    def bracket_gap(self):
        return self.gap_trend[-1][1] if self.gap_trend else None

    @property
    def success(self):
        return self.width <= self.tol + 1e-15

    def to_dict(self):
        return {"bracket": list(self.bracket), "width": self.width, "tol": self.tol,
                "success": self.success, "interior_runs": self.interior_runs,
                "endpoint_gap": self.endpoint_gap, "bracket_gap": self.bracket_gap,
                "gap_trend": [list(g) for g in self.gap_trend],
                "samples": list(self.samples), "diagnostics": self.diagnostics}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _gap(ca, cb):
    if ca.t_in is None or cb.t_out is None:
        return None
    return abs(ca.t_in - cb.t_out)


def bisect(family, tol_s=1 / 64, config=RunConfig(), cache=None, max_runs=40):
    """Shrink an (A, B) bracket around the critical parameter to width ``tol_s``.

    Indeterminate midpoints are rerun once on a grid of half the spacing; if
    they stay indeterminate they are kept in the report and the bracket is
    continued from the quarter points on either side of them.
    """
    if not 0 < tol_s < 1:
        raise ConfigurationError("tol_s must lie in (0, 1)")
    samples = {}

    def classify(s):
        c = classify_flow(family, s, config, cache)
        if c.label == UNDECIDED:
            fine = classify_flow(family, s, config.refined(), cache)
            c = replace(fine, retried=True) if fine.clean else replace(c, retried=True)
        samples[s] = c
        return c

    lo_c, hi_c = classify(0.0), classify(1.0)
    if lo_c.label != A or hi_c.label != B:
        raise SetupError(f"endpoints must classify A and B, got {lo_c.label} at s=0 "
                         f"({lo_c.cause}) and {hi_c.label} at s=1 ({hi_c.cause})")
    lo, hi = 0.0, 1.0
    trend = [(1.0, _gap(lo_c, hi_c))]
    interior = 0
    pending = []
    while hi - lo > tol_s + 1e-15 and interior < max_runs:
        mid = 0.5 * (lo + hi)
        c = classify(mid)
        interior += 1
        if c.label == A:
            lo = mid
        elif c.label == B:
            hi = mid
        else:
            pending.append(mid)
            q1 = 0.5 * (lo + mid)
            c1 = classify(q1)
            interior += 1
            if c1.label == B:
                hi = q1
            else:
                if c1.label == A:
                    lo = q1
                q2 = 0.5 * (mid + hi)
                c2 = classify(q2)
                interior += 1
                if c2.label == A:
                    lo = q2
                elif c2.label == B:
                    hi = q2
        trend.append((hi - lo, _gap(samples[lo], samples[hi])))
    rows = tuple(dict(samples[s].to_dict(), s=s) for s in sorted(samples))
    diag = {"h": config.h, "frame_dt": config.frame_dt, "seed": config.seed,
            "indeterminate": sorted(pending),
            "labels_monotone": dichotomy_labels_monotone([samples[s] for s in sorted(samples)])}
    return BisectionReport(rows, (lo, hi), tol_s, interior, trend[0][1], tuple(trend), diag)


def dichotomy_labels_monotone(classes):
    seen_b = False
    for c in classes:
        if c.label == B:
            seen_b = True
        elif c.label == A and seen_b:
            return False
    return True


# --- validation checks ---------------------------------------------------------------

@dataclass(frozen=True)
class ProbeReport:
    s_star: float
    generator: str
    t_star: float
    table: tuple
    tolerance: float

    @property
    def passed(self):
        return all(t >= self.t_star - self.tolerance for _, _, t in self.table)


def termination_semicontinuity_probe(family, s_star, radii=(1 / 32, 1 / 64),
                                     config=RunConfig(), cache=None):
    """Termination time of the s*-terminating generator at s* +/- ds.

    A perturbed run in which that generator survives contributes +inf. The
    probe passes when no value drops below t(s*) by more than one cadence.
    """
    base = classify_flow(family, s_star, config, cache)
    if not base.clean:
        raise ConfigurationError(f"s*={s_star} is not classified cleanly")
    gen = "a0" if base.label == A else "b0"
    rows = []
    for ds in radii:
        for s in (s_star - ds, s_star + ds):
            if not 0.0 <= s <= 1.0:
                continue
            c = classify_flow(family, s, config, cache)
            t = c.t_in if gen == "a0" else c.t_out
            rows.append((float(ds), float(s), math.inf if t is None else float(t)))
    return ProbeReport(float(s_star), gen, float(base.t), tuple(rows), config.frame_dt)


@dataclass(frozen=True)
class AvoidanceReport:
    times: tuple
    gaps: tuple
    slack: float

    @property
    def passed(self):
        run_max = -math.inf
        for g in self.gaps:
            if g < run_max - self.slack:
                return False
            run_max = max(run_max, g)
        return True


def _contour_points(field, ds):
    c = extract_contour(field)
    pieces = [p.densified(ds) for p in c.loops + c.arcs + c.boundary_curves]
    if not pieces:
        return None
    pts = np.vstack(pieces)
    # the revolved distance also sees the mirror image across the axis
    return np.vstack([pts, pts * [-1, 1]])


def avoidance_check(spec_a, spec_b, config=RunConfig(), slack=None):
    """Per-frame distance between two flows evolved on one grid."""
    h = config.h
    ext = [surface_extent(s) for s in (spec_a, spec_b)]
    m = config.margin
    grid = build_grid(math.ceil((max(e[0] for e in ext) + m) / h) * h,
                      math.floor((min(e[1] for e in ext) - m) / h) * h,
                      math.ceil((max(e[2] for e in ext) + m) / h) * h, h)
    fa, fb = init_signed_distance(spec_a, grid), init_signed_distance(spec_b, grid)
    pa, pb = _contour_points(fa, h / 4), _contour_points(fb, h / 4)
    gap0 = cKDTree(pb).query(pa)[0].min()
    if gap0 < 4 * h or ((fa.values < 0) & (fb.values < 0)).any() and \
            not (((fa.values < 0) <= (fb.values < 0)).all() or ((fb.values < 0) <= (fa.values < 0)).all()):
        raise SetupError(f"initial surfaces overlap or are closer than 4h (gap {gap0:.4g})")
    cfg = config.evolver()
    fr_a, _ = run_until_event(FlowState(0.0, fa), cfg)
    fr_b, _ = run_until_event(FlowState(0.0, fb), cfg)
    times, gaps = [], []
    for x, y in zip(fr_a, fr_b):
        px, py = _contour_points(x.field, h / 4), _contour_points(y.field, h / 4)
        if px is None or py is None:
            break
        times.append(float(x.time))
        gaps.append(float(cKDTree(py).query(px)[0].min()))
    return AvoidanceReport(tuple(times), tuple(gaps), 2 * h if slack is None else slack)


@dataclass(frozen=True)
class TimelineReport:
    drop_frame: Optional[int]
    termination_frame: Optional[int]
    passed: bool
    detail: str = ""


def genus_timeline_check(record, tolerance_frames=1):
    """Genus 1 before the first termination, 0 (or empty) after, to one cadence."""
    times = [t for t, _, _ in record.timeline]
    genus = [g for _, g, _ in record.timeline]
    terms = record.ledger.termination_times()
    if genus[0] == 0:
        ok = not terms and all(g == 0 for g in genus)
        return TimelineReport(None, None, ok, "genus-zero start")
    if not terms:
        return TimelineReport(None, None, False, "no termination recorded")
    t_min = min(terms.values())
    term = next((k for k, t in enumerate(times) if t >= t_min - 1e-12), len(times) - 1)
    drop = next((k for k, g in enumerate(genus) if g == 0), None)
    if drop is None:
        return TimelineReport(None, term, False, "genus never drops")
    clean = all(g == 1 for g in genus[:drop]) and all(g == 0 for g in genus[drop:])
    ok = clean and abs(drop - term) <= tolerance_frames
    return TimelineReport(drop, term, ok, "" if clean else "genus not a single 1->0 step")


def h1_monotonicity_check(record, n=32):
    """Voxelized H1 ranks of W over the archived frames of a run."""
    regions = [voxelize_revolution(fr.field, n, fr.time) for fr in record.archive]
    return check_h1_monotonicity(regions)


@dataclass(frozen=True)
class EntropyTrace:
    times: tuple
    values: tuple
    slack: float

    @property
    def passed(self):
        run_min = math.inf
        for v in self.values:
            if v > run_min + self.slack:
                return False
            run_min = min(run_min, v)
        return True


def entropy_monotonicity_check(record, slack=2e-2, **kw):
    """Entropy of archived frames should not increase beyond ``slack``."""
    times, vals = [], []
    for fr in record.archive:
        c = extract_contour(fr.field)
        if c.empty or c.boundary_curves:
            continue
        curves = profiles_of_contour(c)
        if not curves:
            continue
        times.append(float(fr.time))
        vals.append(entropy(curves, **kw).value)
    return EntropyTrace(tuple(times), tuple(vals), slack)


def event_consistency_check(record, frames_tolerance=1):
    """Clean terminations coincide with a flow event of the matching kind."""
    want = {INWARD: COMPONENT_VANISH, OUTWARD: AXIS_TOUCH}
    tol = frames_tolerance * max(record.cadence, 1e-12)
    for st in (record.ledger.a0, record.ledger.b0):
        if not st.clean:
            continue
        if not any(e.kind == want[st.kind] and abs(e.time - st.time) <= tol
                   for e in record.events):
            return False
    return True
