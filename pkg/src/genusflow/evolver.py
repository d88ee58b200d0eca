"""Explicit time stepping of the axisymmetric level set flow.

The level set function evolves by

    u_t = Laplacian(u) - D^2u(Du, Du) / (|Du|^2 + eps^2)

written in (r, z) with the rotational term u_r / r. Every zero level then
moves by mean curvature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np
from scipy import ndimage

from .contour import extract_contour, label_regions
from .exceptions import ConfigurationError, NumericalBlowup, SurfaceExtinct
from .grid import ScalarField, reinitialize

logger = logging.getLogger(__name__)

AXIS_TOUCH = "AxisTouch"
COMPONENT_VANISH = "ComponentVanish"
ALL_VANISH = "AllVanish"
HORIZON = "Horizon"


@dataclass(frozen=True)
class EvolverConfig:
    """Solver parameters.

    ``epsilon=None`` means epsilon = h. ``frame_dt`` is the snapshot cadence in
    flow time and ``event_every`` the number of steps between event checks.
    """

    epsilon: Optional[float] = None
    cfl: float = 0.2
    t_max: float = 1.0
    reinit_every: int = 100
    band: int = 0
    frame_dt: float = 0.01
    event_every: int = 10
    vanish_cells: float = 4.0

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        if not 0 < self.cfl <= 0.25:
            raise ConfigurationError("cfl must lie in (0, 0.25]")
        if self.t_max <= 0:
            raise ConfigurationError("t_max must be positive")
        if self.reinit_every < 0 or self.band < 0 or self.event_every < 1:
            raise ConfigurationError("reinit_every, band >= 0 and event_every >= 1 required")
        if self.frame_dt <= 0:
            raise ConfigurationError("frame_dt must be positive")

    def eps_for(self, h):
        return h if self.epsilon is None else self.epsilon

    def dt_for(self, h):
        return self.cfl * h * h


@dataclass(frozen=True, eq=False)
class FlowState:
    time: float
    field: ScalarField
    step_index: int = 0


@dataclass(frozen=True)
class FlowEvent:
    kind: str
    time: float
    location: tuple
    step_index: int = 0
    detail: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True, eq=False)
class FlowFrame:
    time: float
    step_index: int
    field: ScalarField
    post_singular: bool = False

    @property
    def contour(self):
        return extract_contour(self.field)


def curvature_rhs(field, epsilon):
    """Right-hand side of the regularized level set equation."""
    g = field.grid
    h = g.h
    p = np.pad(field.values, 1, mode="reflect")
    c = p[1:-1, 1:-1]
    ur = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h)
    uz = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h)
    urr = (p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]) / (h * h)
    uzz = (p[1:-1, 2:] - 2 * c + p[1:-1, :-2]) / (h * h)
    urz = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * h * h)
    denom = ur * ur + uz * uz + epsilon * epsilon
    out = urr + uzz - (ur * ur * urr + 2 * ur * uz * urz + uz * uz * uzz) / denom
    rot = np.empty_like(c)
    rot[1:] = ur[1:] / g.r[1:, None]
    rot[0] = urr[0]
    return field.with_values(out + rot)


@numba.njit(cache=True)
def _euler_kernel(v, h, dt, eps2, band):
    """One fused explicit update; even reflection at every boundary."""
    nr, nz = v.shape
    out = np.empty_like(v)
    inv2h = 0.5 / h
    invh2 = 1.0 / (h * h)
    for i in range(nr):
        im = i - 1 if i > 0 else 1
        ip = i + 1 if i < nr - 1 else nr - 2
        for j in range(nz):
            c = v[i, j]
            if band > 0.0 and abs(c) > band:
                out[i, j] = c
                continue
            jm = j - 1 if j > 0 else 1
            jp = j + 1 if j < nz - 1 else nz - 2
            e, w, n, s = v[ip, j], v[im, j], v[i, jp], v[i, jm]
            ur = (e - w) * inv2h
            uz = (n - s) * inv2h
            urr = (e - 2.0 * c + w) * invh2
            uzz = (n - 2.0 * c + s) * invh2
            urz = (v[ip, jp] - v[ip, jm] - v[im, jp] + v[im, jm]) * 0.25 * invh2
            ur2 = ur * ur
            uz2 = uz * uz
            rhs = urr + uzz - (ur2 * urr + 2.0 * ur * uz * urz + uz2 * uzz) / (ur2 + uz2 + eps2)
            if i == 0:
                rhs += urr
            else:
                rhs += ur / (i * h)
            out[i, j] = c + dt * rhs
    return out


def step(state, config):
    """One explicit Euler step with dt = cfl*h^2 (plus scheduled reinitialization)."""
    g = state.field.grid
    h = g.h
    v = state.field.values
    if not np.all(np.isfinite(v)):
        raise NumericalBlowup(state.step_index)
    eps = config.eps_for(h)
    dt = config.dt_for(h)
    new = _euler_kernel(v, h, dt, eps * eps, config.band * h)
    if not np.all(np.isfinite(new)):
        raise NumericalBlowup(state.step_index + 1)
    k = state.step_index + 1
    fld = ScalarField(g, new)
    if config.reinit_every and k % config.reinit_every == 0 and fld.has_interface():
        fld = reinitialize(fld, reach=3.0)
    return FlowState(state.time + dt, fld, k)


class _ComponentWatch:
    """Tracks inside components between event checks."""

    def __init__(self, field, vanish_area):
        self.vanish_area = vanish_area
        self.prev_axis = _axis_contact(field.values)
        self.labels, self.n = label_regions(field.values)
        self.info = self._describe(field, self.labels, self.n)
        self.reported = set()

    @staticmethod
    def _describe(field, labels, n):
        g = field.grid
        if n == 0:
            return {}
        idx = np.arange(1, n + 1)
        counts = np.bincount(labels.ravel(), minlength=n + 1)[1:]
        mins = np.asarray(_label_argmin(field.values, labels, n))
        axis = np.zeros(n + 1, bool)
        axis[np.unique(labels[0])] = True
        out = {}
        for k in idx:
            i, j = mins[k - 1]
            out[k] = dict(area=counts[k - 1] * g.h * g.h,
                          location=(float(g.r[i]), float(g.z[j])),
                          touches_axis=bool(axis[k]))
        return out

    def update(self, state):
        f = state.field
        g = f.grid
        events = []
        axis = _axis_contact(f.values)
        runs, nrun = ndimage.label(axis)
        for k in range(1, nrun + 1):
            run = runs == k
            # growth of an existing contact is not a new touch
            if (run & self.prev_axis).any():
                continue
            j = np.nonzero(run)[0]
            events.append(FlowEvent(AXIS_TOUCH, state.time, (0.0, float(g.z[j].mean())),
                                    state.step_index, {"nodes": int(j.size)}))
        labels, n = label_regions(f.values)
        info = self._describe(f, labels, n)
        # match previous components to current ones by node overlap
        for k, old in self.info.items():
            if k in self.reported:
                continue
            overlap = np.unique(labels[self.labels == k])
            overlap = overlap[overlap > 0]
            small = all(info[m]["area"] < self.vanish_area for m in overlap)
            if old["area"] >= self.vanish_area and (overlap.size == 0 or small):
                loc = info[overlap[0]]["location"] if overlap.size else old["location"]
                events.append(FlowEvent(COMPONENT_VANISH, state.time, loc, state.step_index,
                                        {"touches_axis": old["touches_axis"],
                                         "area_before": old["area"]}))
        # a small component that inherits from a reported one stays reported
        carried = set()
        for m, cur in info.items():
            prev = np.unique(self.labels[labels == m])
            prev = prev[prev > 0]
            if cur["area"] < self.vanish_area and any(
                    (p in self.reported) or self.info[p]["area"] >= self.vanish_area for p in prev):
                carried.add(m)
        self.reported = carried
        self.labels, self.n, self.info = labels, n, info
        self.prev_axis = axis
        return events


def _axis_contact(values):
    """Columns z_j where an inside node sits within one cell of the axis."""
    return (values[:2] < 0).any(axis=0)


def _label_argmin(values, labels, n):
    return ndimage.minimum_position(values, labels, np.arange(1, n + 1))


def run_until_event(state, config, observers=(), stop: Callable = None):
    """Evolve until every inside region is gone or ``t_max`` is reached.

    ``observers`` are called with each emitted frame. ``stop(frames, events)``
    may end the run early by returning True. Returns ``(frames, events)``.
    """
    g = state.field.grid
    frames, events = [], []
    singular = False

    def emit(s):
        fr = FlowFrame(s.time, s.step_index, s.field, singular)
        frames.append(fr)
        for obs in observers:
            obs(fr)

    if not (state.field.values < 0).any():
        ev = FlowEvent(ALL_VANISH, state.time, (0.0, 0.0), state.step_index)
        emit(state)
        return frames, [ev]
    watch = _ComponentWatch(state.field, config.vanish_cells * g.h * g.h)
    emit(state)
    next_frame = state.time + config.frame_dt
    dt = config.dt_for(g.h)
    cur = state
    while True:
        try:
            cur = step(cur, config)
        except SurfaceExtinct:
            break
        if cur.step_index % config.event_every == 0 or cur.time >= next_frame - 0.5 * dt:
            new = watch.update(cur)
            if new:
                events.extend(new)
                singular = True
                for ev in new:
                    logger.debug("event %s at t=%.5f loc=%s", ev.kind, ev.time, ev.location)
            if not (cur.field.values < 0).any():
                events.append(FlowEvent(ALL_VANISH, cur.time, (0.0, 0.0), cur.step_index))
                emit(cur)
                break
        if cur.time >= next_frame - 0.5 * dt:
            emit(cur)
            next_frame += config.frame_dt
            if stop is not None and stop(frames, events):
                break
        if cur.time >= config.t_max - 0.5 * dt:
            events.append(FlowEvent(HORIZON, cur.time, (0.0, 0.0), cur.step_index))
            if frames[-1].step_index != cur.step_index:
                emit(cur)
            break
    return frames, events


def contour_radius_profile(frames, z0=0.0):
    """Radius of the zero set along the line z = z0 in each frame."""
    out = []
    for fr in frames:
        g = fr.field.grid
        j = int(round((z0 - g.z_min) / g.h))
        col = fr.field.values[:, j]
        neg = np.nonzero(col < 0)[0]
        if neg.size == 0:
            out.append((fr.time, 0.0))
            continue
        i = neg.max()
        if i >= g.nr:
            out.append((fr.time, float(g.r_max)))
            continue
        a, b = col[i], col[i + 1]
        out.append((fr.time, float(g.r[i] + g.h * a / (a - b))))
    return np.array(out)


def _hausdorff(a, b):
    from scipy.spatial import cKDTree
    if len(a) == 0 or len(b) == 0:
        return math.inf
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def check_self_similarity(frames, T):
    """Largest Hausdorff distance between M(t) and sqrt((T - t)/(T - t0)) * M(t0).

    All frames must precede ``T``. A lone frame gives 0; otherwise at least
    three frames are needed.
    """
    if not frames:
        raise ConfigurationError("no frames")
    if T <= frames[-1].time:
        raise ConfigurationError("candidate extinction time is not after the last frame")
    if len(frames) == 1:
        return 0.0
    if len(frames) < 3:
        raise ConfigurationError("need at least three frames before T")
    h = frames[0].field.grid.h
    base = frames[0].contour
    base_pts = np.vstack([p.densified(h / 4) for p in base.loops + base.arcs])
    t0 = frames[0].time
    worst = 0.0
    for fr in frames[1:]:
        scale = math.sqrt((T - fr.time) / (T - t0))
        c = fr.contour
        if c.empty:
            continue
        pts = np.vstack([p.densified(h / 4) for p in c.loops + c.arcs])
        worst = max(worst, _hausdorff(pts, base_pts * scale))
    return worst
