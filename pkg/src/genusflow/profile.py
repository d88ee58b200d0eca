"""Generating curves of surfaces of revolution in the (r, z) half-plane."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class ProfileCurve:
    """Arc-length sampled generating curve.

    ``closed`` means the revolved surface is closed: either a loop in the open
    half-plane (a torus) or an arc whose two ends sit on the axis (a sphere).
    An open profile (e.g. a truncated cylinder line) has ``closed=False``.
    """

    sigma: np.ndarray
    r: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    closed: bool = False
    axis_ends: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("sigma", "r", "z", "theta"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.r)
        if not (len(self.sigma) == len(self.z) == len(self.theta) == n):
            raise ConfigurationError("profile arrays must share one length")
        if n < 2:
            raise ConfigurationError("profile needs at least two samples")

    @classmethod
    def from_points(cls, r, z, closed=False, axis_ends=False, meta=None):
        """Build a profile from polyline vertices.

        For a loop the last vertex must not repeat the first one.
        """
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        if closed and not axis_ends:
            dr = np.diff(np.append(r, r[0]))
            dz = np.diff(np.append(z, z[0]))
        else:
            dr = np.diff(r)
            dz = np.diff(z)
        seg = np.hypot(dr, dz)
        theta_seg = np.arctan2(dz, dr)
        if closed and not axis_ends:
            sigma = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
            theta = theta_seg
        else:
            sigma = np.concatenate([[0.0], np.cumsum(seg)])
            theta = np.append(theta_seg, theta_seg[-1])
        return cls(sigma, r, z, theta, closed=closed, axis_ends=axis_ends,
                   meta=dict(meta or {}))

    @property
    def is_loop(self):
        return self.closed and not self.axis_ends

    def vertices(self, close=False):
        """(N, 2) array of (r, z); with ``close`` a loop repeats its first vertex."""
        pts = np.column_stack([self.r, self.z])
        if close and self.is_loop:
            pts = np.vstack([pts, pts[:1]])
        return pts

    def segments(self):
        """Start points, end points and lengths of the polyline segments."""
        pts = self.vertices(close=True)
        a, b = pts[:-1], pts[1:]
        return a, b, np.hypot(*(b - a).T)

    def length(self):
        return float(self.segments()[2].sum())

    def signed_area(self):
        """Shoelace area of the enclosed cross-section (axis arcs closed along r=0)."""
        pts = self.vertices()
        if self.is_loop or self.axis_ends:
            pts = np.vstack([pts, pts[:1]])
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def outward_normals(self):
        """Unit normals at the vertices pointing away from the enclosed region."""
        pts = self.vertices()
        if self.is_loop:
            tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        else:
            tang = np.gradient(pts, axis=0)
        tang /= np.linalg.norm(tang, axis=1, keepdims=True)
        nrm = np.column_stack([tang[:, 1], -tang[:, 0]])
        # counterclockwise traversal has the region on the left
        if self.signed_area() < 0:
            nrm = -nrm
        return nrm

    def bounding_box(self):
        return (float(self.r.min()), float(self.r.max()),
                float(self.z.min()), float(self.z.max()))

    def scaled(self, factor):
        return ProfileCurve(self.sigma * factor, self.r * factor, self.z * factor,
                            self.theta, self.closed, self.axis_ends, dict(self.meta))

    def translated(self, dz):
        return ProfileCurve(self.sigma, self.r, self.z + dz, self.theta,
                            self.closed, self.axis_ends, dict(self.meta))

    def resampled(self, ds):
        """Uniform arc-length resampling with spacing at most ``ds``."""
        pts = self.vertices(close=True)
        seg = np.hypot(*np.diff(pts, axis=0).T)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        n = max(int(np.ceil(total / ds)), 3)
        if self.is_loop:
            t = np.linspace(0.0, total, n, endpoint=False)
        else:
            t = np.linspace(0.0, total, n + 1)
        r = np.interp(t, s, pts[:, 0])
        z = np.interp(t, s, pts[:, 1])
        return ProfileCurve.from_points(r, z, self.closed, self.axis_ends, self.meta)

    def mirrored_z(self):
        """Reflection across the plane z=0 (orientation reversed)."""
        return ProfileCurve.from_points(self.r[::-1], -self.z[::-1], self.closed,
                                        self.axis_ends, self.meta)
