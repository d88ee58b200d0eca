"""Rotationally symmetric self-shrinkers by shooting on the profile ODE.

A generating curve parametrized by arc length, (r', z') = (cos t, sin t),
spans a shrinker iff

    t' = (r sin t - z cos t) / 2 - sin t / r.

The form does not depend on which way the curve is traversed. The round
sphere of radius 2 through (2, 0) gives t' = 1/2 and the cylinder r = sqrt(2)
gives t' = 0, which fixes the sign convention.

Curves that meet the axis at a right angle are continued through it: near
r = 0 the ratio sin(t)/r tends to t', so there t' = (r sin t - z cos t)/4.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import AxisCrossing, BracketError, ConfigurationError
from .profile import ProfileCurve

DS = 1e-3
# below this |r| a perpendicular approach uses the regular axis limit
AXIS_ZONE = 1e-2
# |sin t / r| beyond this near the axis means the curve hits it obliquely
AXIS_SLOPE = 50.0

RETURN = "return"
AXIS = "axis"
BUDGET = "budget"


def profile_rhs(state):
    """(r', z', t') for a state (r, z, t); raises :class:`AxisCrossing` at r <= 0."""
    r, z, th = state
    if r <= 0:
        raise AxisCrossing(state)
    s, c = math.sin(th), math.cos(th)
    return c, s, 0.5 * (r * s - z * c) - s / r


def _rhs(r, z, th):
    s, c = math.sin(th), math.cos(th)
    if abs(r) < AXIS_ZONE:
        if abs(s) > AXIS_SLOPE * abs(r) or abs(c) < 0.5:
            raise AxisCrossing((r, z, th))
        return c, s, 0.25 * (r * s - z * c)
    return c, s, 0.5 * (r * s - z * c) - s / r


def _rk4(r, z, th, ds):
    a = _rhs(r, z, th)
    b = _rhs(r + 0.5 * ds * a[0], z + 0.5 * ds * a[1], th + 0.5 * ds * a[2])
    c = _rhs(r + 0.5 * ds * b[0], z + 0.5 * ds * b[1], th + 0.5 * ds * b[2])
    d = _rhs(r + ds * c[0], z + ds * c[1], th + ds * c[2])
    k = ds / 6.0
    return (r + k * (a[0] + 2 * b[0] + 2 * c[0] + d[0]),
            z + k * (a[1] + 2 * b[1] + 2 * c[1] + d[1]),
            th + k * (a[2] + 2 * b[2] + 2 * c[2] + d[2]))


def integrate(state, length, ds=DS):
    """Plain RK4 over ``length`` of arc (negative length runs backwards)."""
    n = max(int(math.ceil(abs(length) / ds)), 1)
    h = length / n
    r, z, th = state
    for _ in range(n):
        r, z, th = _rk4(r, z, th, h)
    return r, z, th


def _locate(prev, ds, target, coord, iters=30):
    """Secant search for the fraction of a step at which ``coord`` hits ``target``."""
    f0, f1 = 0.0, 1.0
    g0 = prev[coord] - target
    g1 = _rk4(*prev, ds)[coord] - target
    for _ in range(iters):
        if g1 == g0:
            break
        f2 = f1 - g1 * (f1 - f0) / (g1 - g0)
        f2 = min(max(f2, 0.0), 1.0)
        g2 = _rk4(*prev, f2 * ds)[coord] - target
        f0, g0, f1, g1 = f1, g1, f2, g2
        if abs(g1) < 1e-15:
            break
    return f1, _rk4(*prev, f1 * ds)


def shoot(r_start, direction=math.pi / 2, max_arclength=30.0, ds=DS, z_start=0.0):
    """Integrate the profile ODE from (r_start, z_start) with initial angle ``direction``.

    Stops at the first return to ``z = z_start``, at an oblique axis hit (which
    raises :class:`AxisCrossing`) or when the arc-length budget is used up.
    The cause is stored in ``meta['cause']``.
    """
    if not r_start > 0:
        raise ConfigurationError("r_start must be positive")
    state = (float(r_start), float(z_start), float(direction))
    _rhs(*state)
    rs, zs, ts, sig = [state[0]], [state[1]], [state[2]], [0.0]
    s = 0.0
    cause = BUDGET
    while s < max_arclength - 1e-12:
        h = min(ds, max_arclength - s)
        nxt = _rk4(*state, h)
        if s > 10 * ds and (state[1] - z_start) > 0 >= (nxt[1] - z_start):
            f, nxt = _locate(state, h, z_start, 1)
            s += f * h
            state = nxt
            cause = RETURN
            rs.append(nxt[0]); zs.append(z_start); ts.append(nxt[2]); sig.append(s)
            break
        s += h
        state = nxt
        rs.append(nxt[0]); zs.append(nxt[1]); ts.append(nxt[2]); sig.append(s)
    meta = {"cause": cause, "r_start": float(r_start), "direction": float(direction),
            "end": tuple(float(x) for x in state)}
    return ProfileCurve(np.array(sig), np.array(rs), np.array(zs), np.array(ts),
                        closed=False, meta=meta)


def mismatch(r_start, **kw):
    """cos of the return angle; zero when the profile closes up symmetrically."""
    prof = shoot(r_start, **kw)
    if prof.meta["cause"] != RETURN:
        return float("nan")
    return math.cos(prof.meta["end"][2])


# --- Gaussian area ----------------------------------------------------------

def _gauss_weight(r, z):
    return np.abs(r) * np.exp(-(r * r + z * z) / 4.0)


def gaussian_area(profile, tail=None):
    """F = (4 pi)^-1 * integral of exp(-|x|^2/4) over the surface of revolution.

    Closed profiles (loops or arcs with both ends on the axis) need no tail.
    Open profiles need ``tail`` (or ``profile.meta['tail']``):

    ``"cylinder"``
        both ends continue as vertical lines at their end radii;
    ``"plane"``
        the far end continues as the horizontal line z = const to infinity.
    """
    tail = tail if tail is not None else profile.meta.get("tail")
    closed = profile.closed
    if not closed and tail is None:
        raise ConfigurationError("open profile needs a tail model")
    sig, r, z = profile.sigma, profile.r, profile.z
    w = _gauss_weight(r, z)
    total = float(np.sum(0.5 * (w[1:] + w[:-1]) * np.diff(sig)))
    if profile.is_loop:
        gap = math.hypot(r[0] - r[-1], z[0] - z[-1])
        total += 0.5 * (w[0] + w[-1]) * gap
    value = 0.5 * total
    if not closed:
        value += _tail(profile, tail)
    return value


def _tail(profile, tail):
    r, z = profile.r, profile.z
    if tail == "cylinder":
        out = 0.0
        for ri, zi, sgn in ((r[0], z[0], -1.0), (r[-1], z[-1], 1.0)):
            # outward direction along z at this end
            d = sgn if z[-1] >= z[0] else -sgn
            zz = zi * d
            out += 0.5 * abs(ri) * math.exp(-ri * ri / 4) * math.sqrt(math.pi) * math.erfc(zz / 2)
        return out
    if tail == "plane":
        R, z0 = abs(r[-1]), z[-1]
        return math.exp(-z0 * z0 / 4) * math.exp(-R * R / 4)
    raise ConfigurationError(f"unknown tail model {tail!r}")


# --- catalogue ----------------------------------------------------------------

@dataclass(frozen=True)
class ShrinkerEntry:
    name: str
    profile: ProfileCurve
    gaussian_area: float
    closure_residual: float
    r_start: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)

    def row(self):
        return {"name": self.name, "r_start": self.r_start,
                "closure_residual": self.closure_residual, "F": self.gaussian_area}


def _close_symmetric(half):
    """Closed loop from the upper half (z >= 0) by reflection across z = 0."""
    r, z, th, sig = half.r, half.z, half.theta, half.sigma
    total = sig[-1]
    # lower half traversed onward: from the return point back to the start
    r2 = r[-2:0:-1]
    z2 = -z[-2:0:-1]
    th2 = -th[-2:0:-1] + 2 * math.pi
    sig2 = 2 * total - sig[-2:0:-1]
    meta = dict(half.meta)
    meta["length"] = 2 * total
    return ProfileCurve(np.concatenate([sig, sig2]), np.concatenate([r, r2]),
                        np.concatenate([z, z2]), np.concatenate([th, th2]),
                        closed=True, meta=meta)


def find_torus_shrinker(bracket=(0.1, 1.4), tol=1e-7, scan=27, all_roots=False, ds=DS):
    """Closed torus-type shrinker by bisection on the return-angle mismatch.

    The bracket is scanned at ``scan`` points, every sign change is refined
    and the roots whose closure residual is below ``tol`` are kept. Returns
    the entry with the smallest residual, or all of them with ``all_roots``.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ConfigurationError("bracket must satisfy 0 < r_lo < r_hi")
    xs = np.linspace(lo, hi, scan)
    vals = []
    for x in xs:
        try:
            vals.append(mismatch(x, ds=ds))
        except AxisCrossing:
            vals.append(float("nan"))
    vals = np.array(vals)
    table = list(zip(xs.tolist(), vals.tolist()))
    entries = []
    for k in range(scan - 1):
        a, b = xs[k], xs[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
            continue
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = mismatch(m, ds=ds)
            if not np.isfinite(fm):
                break
            if fm * fa <= 0:
                b, fb = m, fm
            else:
                a, fa = m, fm
            if b - a < 1e-14:
                break
        r0 = a if abs(fa) < abs(fb) else b
        half = shoot(r0, ds=ds)
        if half.meta["cause"] != RETURN:
            continue
        resid = abs(math.cos(half.meta["end"][2]))
        if resid >= tol:
            continue
        loop = _close_symmetric(half)
        entries.append(ShrinkerEntry("torus", loop, gaussian_area(loop), resid, float(r0),
                                     {"return_r": float(half.meta["end"][0])}))
    if not entries:
        raise BracketError("no sign change of the closure mismatch in the bracket", table)
    entries.sort(key=lambda e: e.closure_residual)
    if all_roots:
        return entries
    best = entries[0]
    best.meta["roots"] = [e.r_start for e in entries]
    best.meta["scan"] = table
    return best


def sphere_entry(radius=2.0, ds=DS):
    """Round sphere by shooting through the axis; residual from the return data."""
    prof = shoot(radius, max_arclength=4 * math.pi * radius, ds=ds)
    if prof.meta["cause"] != RETURN:
        raise BracketError("sphere shooting did not return", [])
    end = prof.meta["end"]
    resid = max(abs(math.cos(end[2])), abs(abs(end[0]) - radius))
    # quarter arc up to the pole, with the pole found by linear interpolation
    k = int(np.argmax(prof.r < 0))
    f = prof.r[k - 1] / (prof.r[k - 1] - prof.r[k])
    pole = [(1 - f) * x[k - 1] + f * x[k] for x in (prof.sigma, prof.z, prof.theta)]
    sig = np.append(prof.sigma[:k], pole[0])
    r = np.append(prof.r[:k], 0.0)
    z = np.append(prof.z[:k], pole[1])
    th = np.append(prof.theta[:k], pole[2])
    # reflect across z = 0 to get the arc from the south to the north pole
    full = ProfileCurve(
        np.concatenate([sig[-1] - sig[:0:-1], sig[-1] + sig]),
        np.concatenate([r[:0:-1], r]), np.concatenate([-z[:0:-1], z]),
        np.concatenate([math.pi - th[:0:-1], th]),
        closed=True, axis_ends=True, meta={"cause": RETURN})
    return ShrinkerEntry("sphere", full, gaussian_area(full), resid, float(radius))


def cylinder_entry(length=5.0, ds=DS):
    r0 = math.sqrt(2.0)
    prof = shoot(r0, max_arclength=length, ds=ds, z_start=-0.5 * length)
    resid = float(np.max(np.abs(prof.r - r0)))
    prof = ProfileCurve(prof.sigma, prof.r, prof.z, prof.theta, closed=False,
                        meta={**prof.meta, "tail": "cylinder"})
    return ShrinkerEntry("cylinder", prof, gaussian_area(prof), resid, r0)


def catalogue(bracket=(0.1, 1.4), ds=DS):
    """Sphere, cylinder and torus entries."""
    return [sphere_entry(ds=ds), cylinder_entry(ds=ds), find_torus_shrinker(bracket, ds=ds)]


def write_catalogue_csv(entries, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["name", "r_start", "closure_residual", "F"])
        w.writeheader()
        for e in entries:
            w.writerow(e.row())


def write_profile_csv(profile, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "r", "z", "theta"])
        for row in zip(profile.sigma, profile.r, profile.z, profile.theta):
            w.writerow([repr(float(x)) for x in row])
    return path


def read_profile_csv(path, closed=True, axis_ends=False):
    """Load a profile written by :func:`write_profile_csv` (or any r,z CSV)."""
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigurationError(f"empty profile file {path}")
    r = np.array([float(x["r"]) for x in rows])
    z = np.array([float(x["z"]) for x in rows])
    if "sigma" in rows[0] and "theta" in rows[0]:
        sig = np.array([float(x["sigma"]) for x in rows])
        th = np.array([float(x["theta"]) for x in rows])
        return ProfileCurve(sig, r, z, th, closed=closed, axis_ends=axis_ends)
    return ProfileCurve.from_points(r, z, closed=closed, axis_ends=axis_ends)
