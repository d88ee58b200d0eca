"""Compiled evaluation of a bicubic tensor B-spline and closest-point search.

The spline itself comes from :class:`scipy.interpolate.RectBivariateSpline`;
only its knots and coefficients are used here, so the per-point Newton loops
run without Python overhead.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _span(t, x):
    n = t.size - 4
    lo, hi = 3, n - 1
    if x >= t[hi]:
        return hi
    if x <= t[lo]:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < t[mid]:
            hi = mid
        else:
            lo = mid
    return lo


@njit(cache=True)
def _basis(t, l, x, p, out, left, right):
    out[0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - t[l + 1 - j]
        right[j] = t[l + j] - x
        saved = 0.0
        for r in range(j):
            tmp = out[r] / (right[r + 1] + left[j - r])
            out[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        out[j] = saved


@njit(cache=True)
def _basis_d(t, x, n3, d3):
    """Cubic basis values and first derivatives on the span of ``x``."""
    l = _span(t, x)
    left = np.empty(4)
    right = np.empty(4)
    n2 = np.empty(3)
    _basis(t, l, x, 3, n3, left, right)
    _basis(t, l, x, 2, n2, left, right)
    for k in range(4):
        i = l - 3 + k
        a = n2[k - 1] / (t[i + 3] - t[i]) if k >= 1 else 0.0
        b = n2[k] / (t[i + 4] - t[i + 1]) if k <= 2 else 0.0
        d3[k] = 3.0 * (a - b)
    return l


@njit(cache=True)
def _eval(tx, ty, c, ny, x, y, bx, dbx, by, dby):
    lx = _basis_d(tx, x, bx, dbx)
    ly = _basis_d(ty, y, by, dby)
    u = 0.0
    ux = 0.0
    uy = 0.0
    for a in range(4):
        row = (lx - 3 + a) * ny
        for b in range(4):
            cc = c[row + ly - 3 + b]
            u += bx[a] * by[b] * cc
            ux += dbx[a] * by[b] * cc
            uy += bx[a] * dby[b] * cc
    return u, ux, uy


@njit(cache=True)
def evaluate(tx, ty, c, ny, xs, ys):
    n = xs.size
    out = np.empty((n, 3))
    bx = np.empty(4)
    dbx = np.empty(4)
    by = np.empty(4)
    dby = np.empty(4)
    for k in range(n):
        u, ux, uy = _eval(tx, ty, c, ny, xs[k], ys[k], bx, dbx, by, dby)
        out[k, 0] = u
        out[k, 1] = ux
        out[k, 2] = uy
    return out


@njit(cache=True)
def project(tx, ty, c, ny, pts, iters, max_step):
    """Newton projection of points onto the zero level, steps capped at ``max_step``."""
    p = pts.copy()
    bx = np.empty(4)
    dbx = np.empty(4)
    by = np.empty(4)
    dby = np.empty(4)
    for k in range(p.shape[0]):
        x, y = p[k, 0], p[k, 1]
        for _ in range(iters):
            u, gx, gy = _eval(tx, ty, c, ny, x, y, bx, dbx, by, dby)
            g2 = max(gx * gx + gy * gy, 1e-12)
            sx, sy = -u * gx / g2, -u * gy / g2
            nn = np.hypot(sx, sy)
            if nn > max_step:
                sx *= max_step / nn
                sy *= max_step / nn
            x += sx
            y += sy
            if nn < 1e-15:
                break
        p[k, 0] = x
        p[k, 1] = y
    return p


@njit(cache=True)
def closest_points(tx, ty, c, ny, nodes, seeds, h, iters, tol):
    """Chopp's closest-point iteration; returns points and final |u| there."""
    n = nodes.shape[0]
    out = seeds.copy()
    res = np.empty(n)
    bx = np.empty(4)
    dbx = np.empty(4)
    by = np.empty(4)
    dby = np.empty(4)
    for k in range(n):
        x0, y0 = nodes[k, 0], nodes[k, 1]
        x, y = out[k, 0], out[k, 1]
        for _ in range(iters):
            u, gx, gy = _eval(tx, ty, c, ny, x, y, bx, dbx, by, dby)
            g2 = max(gx * gx + gy * gy, 1e-12)
            hx = x - u * gx / g2
            hy = y - u * gy / g2
            dx, dy = x0 - hx, y0 - hy
            dot = (dx * gx + dy * gy) / g2
            sx = hx + dx - dot * gx - x
            sy = hy + dy - dot * gy - y
            nn = np.hypot(sx, sy)
            if nn > h:
                sx *= h / nn
                sy *= h / nn
            x += sx
            y += sy
            if nn <= tol:
                break
        out[k, 0] = x
        out[k, 1] = y
        u, gx, gy = _eval(tx, ty, c, ny, x, y, bx, dbx, by, dby)
        res[k] = abs(u)
    return out, res


class Bicubic:
    """Knots and coefficients of a fitted RectBivariateSpline (kx=ky=3)."""

    def __init__(self, spline):
        self.tx = np.ascontiguousarray(spline.tck[0], dtype=float)
        self.ty = np.ascontiguousarray(spline.tck[1], dtype=float)
        self.c = np.ascontiguousarray(spline.tck[2], dtype=float)
        self.ny = self.ty.size - 4

    def __call__(self, x, y):
        return evaluate(self.tx, self.ty, self.c, self.ny,
                        np.ascontiguousarray(x, dtype=float),
                        np.ascontiguousarray(y, dtype=float))

    def project(self, pts, iters=8, max_step=np.inf):
        return project(self.tx, self.ty, self.c, self.ny,
                       np.ascontiguousarray(pts, dtype=float), iters, max_step)

    def closest_points(self, nodes, seeds, h, iters=30, tol=1e-12):
        return closest_points(self.tx, self.ty, self.c, self.ny,
                              np.ascontiguousarray(nodes, dtype=float),
                              np.ascontiguousarray(seeds, dtype=float), h, iters, tol)
