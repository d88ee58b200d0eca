"""Gaussian densities and entropy of axisymmetric surfaces.

For a center x0 at distance ``a`` from the axis and height ``z0`` the
azimuthal integral of the Gaussian kernel has a closed form, so

    F(a, z0, t0) = (2 t0)^-1 * sum_i w_i r_i exp(-((r_i - a)^2 + (z_i - z0)^2) / (4 t0))
                   * i0e(a r_i / (2 t0))

over quadrature nodes of the generating curves. The entropy is the supremum
over (a, z0, t0), found by a coarse grid followed by coordinate ascent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bessel import i0e_scalar
from .exceptions import ConfigurationError
from .profile import ProfileCurve

# kernel contributions below exp(-CUTOFF) are dropped
CUTOFF = 60.0


@dataclass(frozen=True)
class DensityQuery:
    a: float
    z0: float
    t0: float

    def __post_init__(self):
        if not self.t0 > 0:
            raise ConfigurationError(f"scale t0 must be positive, got {self.t0}")
        if self.a < 0:
            raise ConfigurationError(f"radial offset a must be >= 0, got {self.a}")

    def as_tuple(self):
        return (float(self.a), float(self.z0), float(self.t0))


@dataclass(frozen=True, eq=False)
class SurfaceSamples:
    """Quadrature nodes (r, z) and arc-length weights of one or more curves."""

    r: np.ndarray
    z: np.ndarray
    w: np.ndarray

    def bounding_box(self):
        return float(self.r.min()), float(self.r.max()), float(self.z.min()), float(self.z.max())

    def scale(self):
        r0, r1, z0, z1 = self.bounding_box()
        return max(r1, z1 - z0, 1e-12)


def _weights(profile):
    """Trapezoid weights along the polyline (loops include the closing segment)."""
    _, _, seg = profile.segments()
    n = len(profile.r)
    w = np.zeros(n)
    if profile.is_loop:
        w += 0.5 * seg
        w += 0.5 * np.roll(seg, 1)
    else:
        seg = seg[: n - 1]
        w[:-1] += 0.5 * seg
        w[1:] += 0.5 * seg
    return w


def surface_samples(curves, ds=None, require_closed=True):
    """Quadrature nodes for a profile or a list of profiles.

    ``ds`` resamples each curve to at most that spacing (default: 1/1000 of
    the overall size, which keeps the trapezoid error near 1e-6 for the
    scales the optimizer visits).
    """
    if isinstance(curves, SurfaceSamples):
        return curves
    if isinstance(curves, ProfileCurve):
        curves = [curves]
    curves = list(curves)
    if not curves:
        raise ConfigurationError("no curves")
    if require_closed and not all(c.closed for c in curves):
        raise ConfigurationError("entropy needs closed profiles")
    if ds is None:
        size = max(max(c.r.max(), c.z.max() - c.z.min()) for c in curves)
        ds = size / 1000.0
    rs, zs, ws = [], [], []
    for c in curves:
        c = c.resampled(ds) if ds > 0 else c
        rs.append(np.abs(c.r))
        zs.append(c.z)
        ws.append(_weights(c))
    return SurfaceSamples(np.concatenate(rs), np.concatenate(zs), np.concatenate(ws))


def profiles_of_contour(contour):
    """Closed generating curves of a frame's zero contour."""
    if contour.boundary_curves:
        raise ConfigurationError("surface reaches the computational boundary")
    out = [ProfileCurve.from_points(p.points[:, 0], p.points[:, 1], closed=True)
           for p in contour.loops if len(p) >= 3]
    out += [ProfileCurve.from_points(p.points[:, 0], p.points[:, 1], closed=True,
                                     axis_ends=True)
            for p in contour.arcs if len(p) >= 2]
    return out


@njit(cache=True)
def _density(r, z, w, a, z0, t0):
    inv = 1.0 / (4.0 * t0)
    total = 0.0
    for i in range(r.size):
        dr = r[i] - a
        dz = z[i] - z0
        e = (dr * dr + dz * dz) * inv
        if e > CUTOFF:
            continue
        k = w[i] * r[i] * math.exp(-e)
        if a > 0.0:
            k *= i0e_scalar(a * r[i] * 2.0 * inv)
        total += k
    return total / (2.0 * t0)


@njit(cache=True)
def _density_batch(r, z, w, q):
    out = np.empty(q.shape[0])
    for k in range(q.shape[0]):
        out[k] = _density(r, z, w, q[k, 0], q[k, 1], q[k, 2])
    return out


def density(surface, query):
    """Gaussian density of the revolved surface at ``query``."""
    if not isinstance(query, DensityQuery):
        query = DensityQuery(*query)
    s = surface_samples(surface)
    return float(_density(s.r, s.z, s.w, float(query.a), float(query.z0), float(query.t0)))


def density_on_axis(surface, z0, t0):
    """The a = 0 density without any Bessel factor (a cross-check)."""
    if not t0 > 0:
        raise ConfigurationError("t0 must be positive")
    s = surface_samples(surface)
    k = s.w * s.r * np.exp(-(s.r ** 2 + (s.z - z0) ** 2) / (4 * t0))
    return float(k.sum() / (2 * t0))


@dataclass(frozen=True, eq=False)
class EntropyResult:
    value: float
    argmax: DensityQuery
    trace: dict = field(default_factory=dict)
    evaluations: int = 0

    def to_dict(self):
        return {"value": self.value, "argmax": dict(zip(("a", "z0", "t0"), self.argmax.as_tuple())),
                "evaluations": self.evaluations, "trace": self.trace}


def _ascent(f, x0, steps, lo, hi, max_iter):
    """Compass search: try +/- step per coordinate, halve steps when stuck."""
    x = np.array(x0, float)
    fx = f(x)
    steps = np.array(steps, float)
    history = []
    evals = 1
    for it in range(max_iter):
        moved = False
        for d in range(3):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[d] = min(max(y[d] + sgn * steps[d], lo[d]), hi[d])
                if y[d] == x[d]:
                    continue
                fy = f(y)
                evals += 1
                if fy > fx:
                    x, fx, moved = y, fy, True
                    break
        if not moved:
            steps *= 0.5
        history.append([it, float(x[0]), float(x[1]), float(math.exp(x[2])), float(fx)])
        if steps.max() < 1e-9:
            break
    return x, fx, history, evals


def entropy(surface, grid=16, t_range=(1e-3, 1e2), max_iter=200, restarts=4, ds=None):
    """Supremum of Gaussian densities over (a, z0, t0).

    Phase one evaluates a ``grid^3`` lattice over (a, z0, log t0) spanning
    the bounding box; phase two runs coordinate ascent from the ``restarts``
    best lattice points. t0 is searched on a log scale and scaled with the
    surface size so that the result is scale invariant.
    """
    s = surface_samples(surface, ds=ds)
    r0, r1, zlo, zhi = s.bounding_box()
    size = s.scale()
    # t_range is given for unit-size surfaces
    lt = (math.log(t_range[0] * size ** 2 / 4), math.log(t_range[1] * size ** 2 / 4))
    A = np.linspace(0.0, r1, grid)
    Z = np.linspace(zlo, zhi, grid)
    T = np.linspace(lt[0], lt[1], grid)
    Q = np.stack(np.meshgrid(A, Z, np.exp(T), indexing="ij"), axis=-1).reshape(-1, 3)
    vals = _density_batch(s.r, s.z, s.w, np.ascontiguousarray(Q))
    evals = len(Q)
    # small-scale probe at the outermost point: the density there tends to 1
    k = int(np.argmax(s.r))
    probe = np.array([[s.r[k], s.z[k], math.exp(lt[0])]])
    probe_val = float(_density_batch(s.r, s.z, s.w, probe)[0])

    order = np.argsort(-vals, kind="stable")
    starts = []
    for idx in order:
        i, j, l = np.unravel_index(idx, (grid, grid, grid))
        if all(max(abs(i - a), abs(j - b), abs(l - c)) > 1 for a, b, c, _ in starts):
            starts.append((i, j, l, float(vals[idx])))
        if len(starts) == restarts:
            break

    def f(x):
        return _density(s.r, s.z, s.w, x[0], x[1], math.exp(x[2]))

    lo = (0.0, zlo - size, lt[0] - 2.0)
    hi = (r1 + size, zhi + size, lt[1] + 2.0)
    step0 = (max(A[1] - A[0], 1e-3), max(Z[1] - Z[0], 1e-3), T[1] - T[0])
    best_x = np.array([probe[0, 0], probe[0, 1], lt[0]])
    best = probe_val
    runs = []
    for i, j, l, v in starts:
        x, fx, hist, n = _ascent(f, (A[i], Z[j], T[l]), step0, lo, hi, max_iter)
        evals += n
        runs.append({"start": [float(A[i]), float(Z[j]), float(math.exp(T[l])), v],
                     "end": [float(x[0]), float(x[1]), float(math.exp(x[2])), float(fx)],
                     "iterations": hist})
        if fx > best:
            best, best_x = fx, x
    grid_best = float(vals[order[0]])
    best = max(best, grid_best)
    trace = {"grid": grid, "grid_best": grid_best, "small_scale_probe": probe_val,
             "log_t_range": [lt[0], lt[1]], "ascent": runs}
    arg = DensityQuery(float(best_x[0]), float(best_x[1]), float(math.exp(best_x[2])))
    return EntropyResult(float(best), arg, trace, evals)


def entropy_of_field(field, **kw):
    """Entropy of the zero set of a level-set field."""
    from .contour import extract_contour
    return entropy(profiles_of_contour(extract_contour(field)), **kw)
