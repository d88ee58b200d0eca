"""Per-frame region decomposition and the homology ledger of a torus flow.

The ledger follows two generators through a flow that starts from a torus:

* ``a0`` spans H1 of the inside region: the circle of revolution of a point
  inside the tube. It dies when the tube cross-section disappears away from
  the axis (an inward neck).
* ``b0`` spans H1 of the outside region: a small loop around the tube. It
  dies when the hole through the torus closes on the axis (an outward neck).

Once one of them has terminated the other has become homologically trivial,
so it is marked ``AliveTrivial`` and never terminates.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy import ndimage

from .contour import Contour, extract_contour, label_regions
from .evolver import AXIS_TOUCH, COMPONENT_VANISH
from .exceptions import ConfigurationError, InternalConsistencyError, NoPinchError

ALIVE = "Alive"
ALIVE_TRIVIAL = "AliveTrivial"
TERMINATED = "Terminated"

INWARD = "InwardNeck"
OUTWARD = "OutwardNeck"
INDETERMINATE = "Indeterminate"

SPHERE_LIKE = "Sphere-like"
TORUS_LIKE = "Torus-like"


# --- decomposition ------------------------------------------------------------

@dataclass(frozen=True)
class InComponent:
    label: int
    touches_axis: bool
    area: float
    innermost: tuple
    depth: float
    neck_width: float
    r_min: float


@dataclass(frozen=True, eq=False)
class RegionDecomposition:
    in_components: tuple
    out_count: int
    hole_open: bool
    hole_radius: float
    grid: object = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def h(self):
        return self.grid.h

    def off_axis(self):
        return [c for c in self.in_components if not c.touches_axis]

    def component(self, label):
        for c in self.in_components:
            if c.label == label:
                return c
        return None


@dataclass(frozen=True)
class TopologySummary:
    kinds: tuple
    genus: int

    @property
    def empty(self):
        return not self.kinds


def _axis_radius_profile(values, mask, h):
    """Interpolated radius of an axis-touching region on each z column."""
    rows = np.argmin(mask, axis=0)            # first node outside, counted from the axis
    cols = np.nonzero(mask[0])[0]
    out = np.full(values.shape[1], np.nan)
    for j in cols:
        i = rows[j] - 1 if rows[j] > 0 else values.shape[0] - 1
        if i + 1 >= values.shape[0]:
            out[j] = i * h
            continue
        a, b = values[i, j], values[i + 1, j]
        out[j] = h * (i + a / (a - b)) if a < 0 <= b else h * i
    return out


def _neck_of_axis_component(values, mask, h):
    rho = _axis_radius_profile(values, mask, h)
    ok = np.isfinite(rho)
    if not ok.any():
        return 0.0
    top = np.nanmax(rho)
    near = np.nonzero(ok & (rho >= top - h))[0]
    a, b = near[0], near[-1]
    seg = rho[a:b + 1]
    return float(np.nanmin(seg))


def decompose(contour: Contour, field):
    """Cross-sections of the inside region and the surface topology.

    ``contour`` must be the zero contour of ``field``; the two are checked
    against each other and :class:`InternalConsistencyError` is raised when
    they disagree.
    """
    g = field.grid
    v = field.values
    h = g.h
    labels, n = label_regions(v)
    _, n_out = label_regions(v, inside=False)
    comps = []
    owner = _check_consistency(contour, labels, n, v)
    loop_area = np.zeros(n + 1)
    for piece, k in zip(contour.loops, owner):
        loop_area[k] += piece.signed_area()
    if n:
        idx = np.arange(1, n + 1)
        counts = np.bincount(labels.ravel(), minlength=n + 1)[1:]
        argmins = ndimage.minimum_position(v, labels, idx)
        mins = ndimage.minimum(v, labels, idx)
        on_axis = np.zeros(n + 1, bool)
        on_axis[np.unique(labels[0])] = True
        rows = np.arange(g.shape[0])[:, None]
        rmin = ndimage.minimum(np.broadcast_to(rows, v.shape), labels, idx)
        for k in idx:
            i, j = argmins[k - 1]
            axis = bool(on_axis[k])
            depth = float(-mins[k - 1])
            if axis:
                neck = _neck_of_axis_component(v, labels == k, h)
            else:
                # area-equivalent radius of the tube cross-section
                neck = math.sqrt(max(loop_area[k], 0.0) / math.pi)
            comps.append(InComponent(int(k), axis, float(counts[k - 1] * h * h),
                                     (float(g.r[i]), float(g.z[j])), depth, float(neck),
                                     float(rmin[k - 1] * h)))
    off = [c for c in comps if not c.touches_axis]
    hole_open = bool(off)
    hole_radius = min(c.r_min for c in off) if off else 0.0
    kinds = tuple([TORUS_LIKE] * len(contour.loops) + [SPHERE_LIKE] * len(contour.arcs))
    deco = RegionDecomposition(tuple(comps), int(n_out), hole_open, float(hole_radius), g, labels)
    return deco, TopologySummary(kinds, len(contour.loops))


def _check_consistency(contour, labels, n, values):
    """Owning inside label of every loop; raises if contour and signs disagree."""
    seen = set()
    owner = []
    for piece in contour.loops + contour.arcs + contour.boundary_curves:
        i, j = piece.in_node
        if not values[i, j] < 0 or labels[i, j] == 0:
            raise InternalConsistencyError(f"contour piece starting near node {(i, j)} "
                                           "does not border an inside region")
        seen.add(int(labels[i, j]))
        owner.append(int(labels[i, j]))
    missing = set(range(1, n + 1)) - seen
    if missing:
        raise InternalConsistencyError(f"inside components {sorted(missing)} have no contour")
    return owner[:len(contour.loops)]


def analyze_frame(frame):
    """(time, RegionDecomposition, TopologySummary) for a :class:`FlowFrame`."""
    deco, summary = decompose(extract_contour(frame.field), frame.field)
    return frame.time, deco, summary


# --- ledger -------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorStatus:
    state: str = ALIVE
    time: Optional[float] = None
    kind: Optional[str] = None
    locus: Optional[tuple] = None
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def terminated(self):
        return self.state == TERMINATED

    @property
    def clean(self):
        return self.terminated and self.kind in (INWARD, OUTWARD)

    def label(self):
        if self.terminated:
            return f"{TERMINATED}({self.kind})"
        return self.state

    def as_dict(self):
        return {"state": self.state, "time": self.time, "kind": self.kind,
                "locus": list(self.locus) if self.locus is not None else None,
                "detail": self.detail}


@dataclass(frozen=True)
class LedgerRow:
    time: float
    a0: str
    b0: str
    genus: int
    neck_width: float
    hole_radius: float


@dataclass(frozen=True, eq=False)
class HomologyLedger:
    a0: GeneratorStatus = None
    b0: GeneratorStatus = None
    basepoint: Optional[tuple] = None
    time: Optional[float] = None
    history: tuple = ()
    # labels and label of the tracked tube component in the previous frame
    _track: tuple = field(default=None, repr=False)

    @property
    def started(self):
        return self.time is not None

    @property
    def resolved(self):
        return self.a0 is not None and ALIVE not in (self.a0.state, self.b0.state)

    def termination(self):
        """The terminated generator as ``('a0'|'b0', status)`` or ``None``."""
        for name in ("a0", "b0"):
            st = getattr(self, name)
            if st is not None and st.terminated:
                return name, st
        return None

    def termination_times(self):
        return {name: getattr(self, name).time for name in ("a0", "b0")
                if getattr(self, name) is not None and getattr(self, name).terminated}

    def series(self, column):
        return np.array([getattr(r, column) for r in self.history], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "a0_status", "b0_status", "genus", "neck_width", "hole_radius"])
            for r in self.history:
                w.writerow([f"{r.time:.10g}", r.a0, r.b0, r.genus, f"{r.neck_width:.10g}",
                            f"{r.hole_radius:.10g}"])
        return path

    def summary(self):
        out = {"a0": self.a0.as_dict() if self.a0 else None,
               "b0": self.b0.as_dict() if self.b0 else None,
               "frames": len(self.history)}
        fits = {}
        term = self.termination()
        if term is not None and term[1].clean:
            name, st = term
            col = "neck_width" if name == "a0" else "hole_radius"
            t = self.series("time")
            w = self.series(col)
            keep = (t <= st.time) & (w > 0)
            try:
                fit = estimate_pinch_time(t[keep], w[keep])
                fits[col] = fit._asdict()
            except NoPinchError as exc:
                fits[col] = {"error": str(exc)}
        out["fits"] = fits
        return out

    def to_json(self, path=None):
        text = json.dumps(self.summary(), indent=2, sort_keys=True, default=_jsonable)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _row(ledger, t, deco, summary):
    neck = 0.0
    if ledger._track is not None:
        c = deco.component(ledger._track[1])
        neck = c.neck_width if c is not None else 0.0
    elif deco.in_components:
        neck = min(c.neck_width for c in deco.in_components)
    return LedgerRow(float(t), ledger.a0.label(), ledger.b0.label(), summary.genus,
                     float(neck), float(deco.hole_radius))


def _start(t, deco, summary):
    off = deco.off_axis()
    if off:
        tube = max(off, key=lambda c: (c.area, -c.label))
        led = HomologyLedger(GeneratorStatus(ALIVE), GeneratorStatus(ALIVE if deco.hole_open
                                                                      else ALIVE_TRIVIAL),
                             tube.innermost, float(t), (), (deco.labels, tube.label))
    else:
        led = HomologyLedger(GeneratorStatus(ALIVE_TRIVIAL), GeneratorStatus(ALIVE_TRIVIAL),
                             None, float(t), (), None)
    return replace(led, history=(_row(led, t, deco, summary),))


def _terminate(led, which, t, kind, locus, **detail):
    st = GeneratorStatus(TERMINATED, float(t), kind, tuple(float(x) for x in locus), detail)
    other = GeneratorStatus(ALIVE_TRIVIAL)
    if which == "a0":
        return replace(led, a0=st, b0=other, _track=None)
    return replace(led, a0=other, b0=st, _track=None)


def _indeterminate(led, t, locus, **detail):
    st = GeneratorStatus(TERMINATED, float(t), INDETERMINATE, tuple(float(x) for x in locus),
                         detail)
    return replace(led, a0=st, b0=st, _track=None)


def update_ledger(ledger, frame, events=()):
    """Advance the ledger by one analysed frame.

    ``frame`` is ``(time, RegionDecomposition, TopologySummary)`` and
    ``events`` the flow events detected since the previous frame (events with
    other times are ignored).
    """
    t, deco, summary = frame
    if ledger is None or not ledger.started:
        return _start(t, deco, summary)
    if t < ledger.time:
        raise ConfigurationError(f"frame at t={t} precedes the ledger time {ledger.time}")
    window = [e for e in events if ledger.time < e.time <= t]
    led = ledger
    if not ledger.resolved and ledger._track is not None:
        led = _advance(ledger, t, deco, window)
    led = replace(led, time=float(t))
    return replace(led, history=led.history + (_row(led, t, deco, summary),))


def _in_mask(deco, mask, loc):
    g = deco.grid
    i = int(round(loc[0] / g.h))
    j = int(round((loc[1] - g.z_min) / g.h))
    lo_i, lo_j = max(i - 1, 0), max(j - 1, 0)
    return bool(mask[lo_i:i + 2, lo_j:j + 2].any())


def _advance(led, t, deco, window):
    prev_labels, prev_label = led._track
    prev_mask = prev_labels == prev_label
    hit = np.unique(deco.labels[prev_mask])
    hit = [int(k) for k in hit if k > 0]
    touches = [e for e in window if e.kind == AXIS_TOUCH]
    inward = [e for e in window if e.kind == COMPONENT_VANISH
              and not e.detail.get("touches_axis", False)
              and _in_mask(deco, prev_mask, e.location)]
    if touches and inward:
        return _indeterminate(led, min(e.time for e in touches + inward), led.basepoint,
                              reason="inward and outward pinches within one frame")
    if inward:
        ev = inward[0]
        return _terminate(led, "a0", ev.time, INWARD, ev.location,
                          area_before=float(ev.detail.get("area_before", 0.0)))
    if len(hit) == 1 and not deco.component(hit[0]).touches_axis:
        comp = deco.component(hit[0])
        return replace(led, basepoint=comp.innermost, _track=(deco.labels, comp.label))
    if not hit and not touches:
        # a match may be lost to motion of more than a cell; fall back to proximity
        near = [c for c in deco.off_axis() if math.dist(c.innermost, led.basepoint) < 4 * deco.h]
        if len(near) == 1:
            return replace(led, basepoint=near[0].innermost, _track=(deco.labels, near[0].label))
    if len(hit) > 1:
        return _indeterminate(led, t, led.basepoint, reason="tube component split",
                              pieces=len(hit))
    if not hit:
        return _indeterminate(led, t, led.basepoint, reason="tube vanished without an event")
    # single match that now touches the axis: the hole has closed
    if touches:
        ev = touches[0]
        return _terminate(led, "b0", ev.time, OUTWARD, ev.location)
    return _indeterminate(led, t, led.basepoint, reason="axis contact without an event")


def track_run(frames, events):
    """Ledger and per-frame (decomposition, summary) for a finished run."""
    ledger = None
    analysed = []
    for fr in frames:
        item = analyze_frame(fr)
        analysed.append(item)
        ledger = update_ledger(ledger, item, events)
    return ledger, analysed


# --- pinch-rate fit -----------------------------------------------------------

class PinchEstimate(NamedTuple):
    t_star: float
    rate: float
    cylindrical: bool
    residual: float


CYLINDER_RATE = 2.0


def estimate_pinch_time(times, widths, model=CYLINDER_RATE, tolerance=0.4):
    """Least-squares line through (t, w^2); returns the root and |slope|.

    ``cylindrical`` says whether the rate lies within ``tolerance`` of
    ``model`` (2 for a neck shrinking like a round cylinder in R^3).
    """
    t = np.asarray(times, dtype=float)
    w = np.asarray(widths, dtype=float)
    if t.shape != w.shape or t.size < 4:
        raise NoPinchError("need at least four samples")
    if not np.all(np.isfinite(w)) or not np.any(np.diff(w) < 0):
        raise NoPinchError("width series is not decreasing")
    A = np.column_stack([t, np.ones_like(t)])
    (slope, icept), *_ = np.linalg.lstsq(A, w * w, rcond=None)
    if slope >= 0:
        raise NoPinchError("width series is not decreasing")
    resid = float(np.sqrt(np.mean((A @ [slope, icept] - w * w) ** 2)))
    rate = float(-slope)
    return PinchEstimate(float(-icept / slope), rate, abs(rate - model) <= tolerance, resid)
