"""Axisymmetric grids, level set fields and initial surfaces.

A rotationally symmetric surface in R^3 is stored through its level set
function u(r, z) on a uniform node grid covering the half-plane r >= 0.
Inside the surface u < 0, outside u > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
import shapely
from scipy.interpolate import RectBivariateSpline
from scipy.spatial import cKDTree

from ._bicubic import Bicubic
from .exceptions import ConfigurationError, DomainError, SurfaceExtinct
from .profile import ProfileCurve


@dataclass(frozen=True)
class AxiGrid:
    r_max: float
    z_min: float
    z_max: float
    h: float
    nr: int
    nz: int

    @property
    def r(self):
        return np.arange(self.nr + 1) * self.h

    @property
    def z(self):
        return self.z_min + np.arange(self.nz + 1) * self.h

    @property
    def shape(self):
        return (self.nr + 1, self.nz + 1)

    def mesh(self):
        """Node coordinate arrays ``(R, Z)`` indexed ``[i_r, j_z]``."""
        return np.meshgrid(self.r, self.z, indexing="ij")

    def node(self, r, z):
        """Index of the node nearest to ``(r, z)``."""
        i = int(np.clip(round(r / self.h), 0, self.nr))
        j = int(np.clip(round((z - self.z_min) / self.h), 0, self.nz))
        return i, j


def build_grid(r_max, z_min, z_max, h):
    """Uniform node grid on ``[0, r_max] x [z_min, z_max]``."""
    if not (h > 0 and r_max > 0 and z_max > z_min):
        raise ConfigurationError(
            f"need h > 0, r_max > 0, z_max > z_min; got {h=}, {r_max=}, {z_min=}, {z_max=}")
    nr = int(round(r_max / h))
    nz = int(round((z_max - z_min) / h))
    tol = 1e-9 * max(1.0, abs(r_max), abs(z_max - z_min))
    if abs(nr * h - r_max) > tol or abs(nz * h - (z_max - z_min)) > tol:
        raise ConfigurationError("h must divide the grid extents")
    if nr < 1 or nz < 1:
        raise ConfigurationError("grid needs at least one cell per direction")
    return AxiGrid(float(r_max), float(z_min), float(z_max), float(h), nr, nz)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: AxiGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(f"values shape {vals.shape} != grid {self.grid.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values):
        return ScalarField(self.grid, values)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def has_interface(self):
        v = self.values
        return bool((v < 0).any() and (v >= 0).any())

    def gradient_norm(self):
        """Central-difference |grad u| with even reflection at every boundary."""
        h = self.grid.h
        p = np.pad(self.values, 1, mode="reflect")
        ur = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h)
        uz = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h)
        return np.hypot(ur, uz)

    def sample(self, r, z):
        """Bilinear interpolation at half-plane points (r is taken as |r|)."""
        g = self.grid
        r = np.abs(np.asarray(r, dtype=float))
        z = np.asarray(z, dtype=float)
        x = np.clip(r / g.h, 0, g.nr)
        y = np.clip((z - g.z_min) / g.h, 0, g.nz)
        i = np.minimum(np.floor(x).astype(int), g.nr - 1)
        j = np.minimum(np.floor(y).astype(int), g.nz - 1)
        fx, fy = x - i, y - j
        v = self.values
        return ((1 - fx) * (1 - fy) * v[i, j] + fx * (1 - fy) * v[i + 1, j]
                + (1 - fx) * fy * v[i, j + 1] + fx * fy * v[i + 1, j + 1])

    def to_csv(self, path):
        R, Z = self.grid.mesh()
        data = np.column_stack([R.ravel(), Z.ravel(), self.values.ravel()])
        np.savetxt(path, data, delimiter=",", header="r,z,u", comments="")

    def to_binary(self, path):
        R, Z = self.grid.mesh()
        np.column_stack([R.ravel(), Z.ravel(), self.values.ravel()]).astype("<f8").tofile(path)


# --- surface specifications -------------------------------------------------

@dataclass(frozen=True)
class Sphere:
    radius: float
    z0: float = 0.0


@dataclass(frozen=True)
class Cylinder:
    """Solid cylinder of the given radius with flat caps, total length ``length``."""
    radius: float
    length: float
    z0: float = 0.0


@dataclass(frozen=True)
class Torus:
    R: float
    rho: float
    z0: float = 0.0


@dataclass(frozen=True)
class OffsetOfProfile:
    """Normal offset of a closed profile: ``base + (delta + eps*mode_k(sigma)) * nu``."""
    base: ProfileCurve
    delta: float = 0.0
    mode: int = 1
    eps: float = 0.0


SurfaceSpec = Union[Sphere, Cylinder, Torus, OffsetOfProfile]


def validate_surface(spec):
    if isinstance(spec, Sphere):
        ok = spec.radius > 0
    elif isinstance(spec, Cylinder):
        ok = spec.radius > 0 and spec.length > 0
    elif isinstance(spec, Torus):
        ok = 0 < spec.rho < spec.R
    elif isinstance(spec, OffsetOfProfile):
        ok = spec.base.closed
        offset_profile(spec)
    else:
        raise ConfigurationError(f"unknown surface spec {spec!r}")
    if not ok:
        raise ConfigurationError(f"invalid surface parameters {spec!r}")
    return spec


def profile_mode(profile, k):
    """Geometric stand-in for a second variation mode: cos of k turns along the curve."""
    s = profile.sigma / profile.length()
    if profile.is_loop:
        return np.cos(2 * np.pi * k * s)
    return np.cos(np.pi * k * s)


def offset_profile(spec: OffsetOfProfile):
    """Polyline of the offset curve; raises if it is not embedded in the half-plane."""
    base = spec.base
    nrm = base.outward_normals()
    amount = spec.delta + spec.eps * profile_mode(base, spec.mode)
    pts = base.vertices() + amount[:, None] * nrm
    if base.axis_ends:
        pts[0, 0] = pts[-1, 0] = 0.0
        if np.any(pts[1:-1, 0] <= 0):
            raise ConfigurationError("offset arc leaves the open half-plane")
        ring = shapely.LinearRing(np.vstack([pts, pts[:1]]))
    else:
        if np.any(pts[:, 0] <= 0):
            raise ConfigurationError("offset loop reaches the rotation axis")
        ring = shapely.LinearRing(pts)
    if not ring.is_simple:
        raise ConfigurationError("offset curve self-intersects")
    return ProfileCurve.from_points(pts[:, 0], pts[:, 1], base.closed, base.axis_ends,
                                    dict(base.meta, offset=spec.delta, eps=spec.eps))


def surface_extent(spec):
    """Bounding box (r_hi, z_lo, z_hi) of the cross-section."""
    if isinstance(spec, Sphere):
        return spec.radius, spec.z0 - spec.radius, spec.z0 + spec.radius
    if isinstance(spec, Cylinder):
        return spec.radius, spec.z0 - spec.length / 2, spec.z0 + spec.length / 2
    if isinstance(spec, Torus):
        return spec.R + spec.rho, spec.z0 - spec.rho, spec.z0 + spec.rho
    prof = offset_profile(spec)
    _, rhi, zlo, zhi = prof.bounding_box()
    return rhi, zlo, zhi


def grid_for(spec, h, margin=0.5):
    """Smallest grid (in whole cells) holding ``spec`` with ``margin`` to spare."""
    rhi, zlo, zhi = surface_extent(spec)
    r_max = math.ceil((rhi + margin) / h) * h
    z_min = math.floor((zlo - margin) / h) * h
    z_max = math.ceil((zhi + margin) / h) * h
    return build_grid(r_max, z_min, z_max, h)


def _profile_sdf(profile, R, Z):
    pts = profile.vertices()
    if profile.axis_ends:
        line = shapely.LineString(pts)
        poly = shapely.Polygon(np.vstack([pts, pts[:1]]))
    else:
        line = shapely.LinearRing(pts)
        poly = shapely.Polygon(pts)
    shapely.prepare(line)
    shapely.prepare(poly)
    x, y = R.ravel(), Z.ravel()
    dist = shapely.distance(line, shapely.points(x, y))
    inside = shapely.contains_xy(poly, x, y)
    return np.where(inside, -dist, dist).reshape(R.shape)


def signed_distance_values(spec, R, Z, ds=1e-2):
    """Signed distance of ``spec`` at half-plane points.

    Profile offsets are resampled at spacing ``ds`` before measuring.
    """
    if isinstance(spec, Sphere):
        return np.hypot(R, Z - spec.z0) - spec.radius
    if isinstance(spec, Torus):
        return np.hypot(R - spec.R, Z - spec.z0) - spec.rho
    if isinstance(spec, Cylinder):
        # distance to the rectangle [-a, a] x [-b, b] in the meridian plane
        qx = np.abs(R) - spec.radius
        qy = np.abs(Z - spec.z0) - spec.length / 2
        outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
        return outside + np.minimum(np.maximum(qx, qy), 0)
    if isinstance(spec, OffsetOfProfile):
        prof = offset_profile(spec).resampled(ds)
        return _profile_sdf(prof, R, Z)
    raise ConfigurationError(f"unknown surface spec {spec!r}")


def init_signed_distance(spec, grid, margin_cells=5):
    """Signed distance field of ``spec`` on ``grid`` (u < 0 inside)."""
    validate_surface(spec)
    rhi, zlo, zhi = surface_extent(spec)
    m = margin_cells * grid.h
    if rhi > grid.r_max - m + 1e-12 or zlo < grid.z_min + m - 1e-12 or zhi > grid.z_max - m + 1e-12:
        raise DomainError(f"surface extent r<={rhi:.4g}, z in [{zlo:.4g}, {zhi:.4g}] "
                          f"does not fit the grid with margin {margin_cells}h")
    R, Z = grid.mesh()
    return ScalarField(grid, signed_distance_values(spec, R, Z, ds=grid.h / 4))


# --- reinitialization ---------------------------------------------------------

def interface_points(values, grid):
    """Linear-interpolation crossings of the zero level on grid edges."""
    v = values
    r, z = grid.r, grid.z
    pts = []
    neg = v < 0
    # edges along r
    a, b = v[:-1, :], v[1:, :]
    i, j = np.nonzero(neg[:-1, :] != neg[1:, :])
    t = a[i, j] / (a[i, j] - b[i, j])
    pts.append(np.column_stack([r[i] + t * grid.h, z[j]]))
    a, b = v[:, :-1], v[:, 1:]
    i, j = np.nonzero(neg[:, :-1] != neg[:, 1:])
    t = a[i, j] / (a[i, j] - b[i, j])
    pts.append(np.column_stack([r[i], z[j] + t * grid.h]))
    return np.vstack(pts)


def _mirrored_spline(field):
    g = field.grid
    full = np.concatenate([field.values[:0:-1], field.values], axis=0)
    rr = np.concatenate([-g.r[:0:-1], g.r])
    return RectBivariateSpline(rr, g.z, full, kx=3, ky=3, s=0)


def reinitialize(field, band=6, reach=None):
    """Replace ``field`` by the signed distance to its own zero level.

    Inside a band of ``band`` cells the distance is the exact distance to the
    zero set of the bicubic interpolant, found by closest-point iteration;
    elsewhere it is the distance to the nearest interface sample. Signs are
    kept node by node, so the inside region never changes.

    With ``reach`` set, only nodes with ``|u| < reach*(band+1)*h`` are
    recomputed and the rest keep their values (cheaper inside a time loop).
    """
    g = field.grid
    v = field.values
    if not field.has_interface():
        raise SurfaceExtinct("no zero level set to reinitialize")
    spline = Bicubic(_mirrored_spline(field))
    seeds = spline.project(interface_points(v, g), max_step=g.h)
    # mirrored seeds let nodes near the axis see the reflected curve
    mirror = seeds[seeds[:, 0] < band * g.h] * [-1.0, 1.0]
    cloud = np.vstack([seeds, mirror])
    tree = cKDTree(cloud)
    flat = v.ravel()
    if reach is None:
        sel = np.arange(flat.size)
    else:
        sel = np.flatnonzero(np.abs(flat) < reach * (band + 1) * g.h)
    i, j = np.divmod(sel, g.shape[1])
    nodes = np.column_stack([g.r[i], g.z[j]])
    dist, idx = tree.query(nodes)
    in_band = dist < (band + 1) * g.h
    if in_band.any():
        x = nodes[in_band]
        y, resid = spline.closest_points(x, cloud[idx[in_band]], g.h)
        d_exact = np.linalg.norm(x - y, axis=1)
        good = (resid < 1e-6 * max(1.0, g.h * 1e3)) & (d_exact <= dist[in_band] + 1e-12)
        dist[in_band] = np.where(good, d_exact, dist[in_band])
    out = flat.copy()
    out[sel] = np.sign(flat[sel]) * dist
    return ScalarField(g, out.reshape(g.shape))


# --- parametrized families ----------------------------------------------------

@dataclass(frozen=True)
class FamilySpec:
    """One-parameter family of offsets around a base profile or analytic torus.

    ``delta0 < 0 < delta1`` are the endpoint normal offsets. With
    ``two_mode=False`` the offset is interpolated linearly in s and the second
    mode keeps the fixed amplitude ``mode_eps``. With ``two_mode=True`` the
    offset follows ``mean - half*cos(s*pi)`` and the mode amplitude is
    ``mode_eps*sin(s*pi)``.
    """

    base: Union[ProfileCurve, Torus]
    delta0: float
    delta1: float
    mode: int = 1
    mode_eps: float = 0.0
    two_mode: bool = False
    samples: int = 9

    def __post_init__(self):
        if not self.delta0 < 0 < self.delta1:
            raise ConfigurationError("family needs delta0 < 0 < delta1")
        if self.samples < 2:
            raise ConfigurationError("family needs at least two samples")

    def offset(self, s):
        if self.two_mode:
            mid = 0.5 * (self.delta0 + self.delta1)
            half = 0.5 * (self.delta1 - self.delta0)
            return mid - half * math.cos(s * math.pi), self.mode_eps * math.sin(s * math.pi)
        return self.delta0 * (1 - s) + self.delta1 * s, self.mode_eps

    def parameters(self):
        return np.linspace(0.0, 1.0, self.samples)


def torus_profile(torus, ds=1e-2):
    n = max(int(math.ceil(2 * math.pi * torus.rho / ds)), 16)
    phi = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return ProfileCurve.from_points(torus.R + torus.rho * np.cos(phi),
                                    torus.z0 + torus.rho * np.sin(phi), closed=True)


def family_surface(family, s):
    """Initial surface M^s(0) of the family."""
    if not 0.0 <= s <= 1.0:
        raise ConfigurationError(f"family parameter {s} outside [0, 1]")
    delta, eps = family.offset(s)
    base = family.base
    if isinstance(base, Torus):
        if eps == 0.0:
            spec = replace(base, rho=base.rho + delta)
            if not 0 < spec.rho < spec.R:
                raise ConfigurationError("torus offset breaks embeddedness")
            return spec
        base = torus_profile(base)
    spec = OffsetOfProfile(base, delta, family.mode, eps)
    validate_surface(spec)
    return spec
