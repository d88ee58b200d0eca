"""Zero-contour extraction and region labelling on the half-plane grid.

Marching squares runs on the field reflected across r=0, so every piece of
the zero set closes up: curves that cross the axis are cut back into arcs
with both ends on the axis, the rest are loops in the open half-plane.

Saddle cells are resolved by the sign of the cell-center average: when it is
negative the two inside corners are connected through the cell. The region
labelling in :func:`label_regions` uses the same rule, so contours and
components always agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

# local edge codes
_B, _R, _T, _L = 0, 1, 2, 3

# oriented segments per case, inside region on the left of travel
_TABLE = {
    1: [(_B, _L)], 14: [(_L, _B)],
    2: [(_R, _B)], 13: [(_B, _R)],
    4: [(_T, _R)], 11: [(_R, _T)],
    8: [(_L, _T)], 7: [(_T, _L)],
    3: [(_R, _L)], 12: [(_L, _R)],
    6: [(_T, _B)], 9: [(_B, _T)],
}
_SADDLE = {
    (5, True): [(_B, _R), (_T, _L)],
    (5, False): [(_B, _L), (_T, _R)],
    (10, True): [(_L, _B), (_R, _T)],
    (10, False): [(_R, _B), (_L, _T)],
}


@dataclass(frozen=True, eq=False)
class Polyline:
    points: np.ndarray
    closed: bool
    in_node: tuple = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def length(self):
        p = np.vstack([self.points, self.points[:1]]) if self.closed else self.points
        return float(np.hypot(*np.diff(p, axis=0).T).sum())

    def signed_area(self):
        p = np.vstack([self.points, self.points[:1]])
        return 0.5 * float(np.sum(p[:-1, 0] * p[1:, 1] - p[1:, 0] * p[:-1, 1]))

    def centroid(self):
        return self.points.mean(axis=0)

    def densified(self, ds):
        """Vertices plus interpolated points so that gaps are at most ``ds``."""
        p = np.vstack([self.points, self.points[:1]]) if self.closed else self.points
        out = [p[:1]]
        for a, b in zip(p[:-1], p[1:]):
            n = max(int(np.ceil(np.hypot(*(b - a)) / ds)), 1)
            t = np.arange(1, n + 1)[:, None] / n
            out.append(a + t * (b - a))
        return np.vstack(out)


@dataclass(frozen=True, eq=False)
class Contour:
    loops: list = field(default_factory=list)
    arcs: list = field(default_factory=list)
    boundary_curves: list = field(default_factory=list)

    @property
    def empty(self):
        return not (self.loops or self.arcs or self.boundary_curves)

    def all_points(self):
        pieces = [p.points for p in self.loops + self.arcs + self.boundary_curves]
        return np.vstack(pieces) if pieces else np.zeros((0, 2))


def _mirror(values):
    return np.concatenate([values[:0:-1], values], axis=0)


def extract_contour(field):
    """Oriented zero contour of ``field`` (inside region on the left)."""
    g = field.grid
    F = _mirror(field.values)
    M, N = F.shape
    rr = np.concatenate([-g.r[:0:-1], g.r])
    zz = g.z
    h = g.h
    neg = F < 0
    nH = (M - 1) * N

    def hid(i, j):
        return i * N + j

    def vid(i, j):
        return nH + i * (N - 1) + j

    c0, c1 = neg[:-1, :-1], neg[1:, :-1]
    c2, c3 = neg[1:, 1:], neg[:-1, 1:]
    case = c0 * 1 + c1 * 2 + c2 * 4 + c3 * 8
    ci, cj = np.nonzero((case > 0) & (case < 15))
    if len(ci) == 0:
        return Contour()
    cases = case[ci, cj]
    center = 0.25 * (F[:-1, :-1] + F[1:, :-1] + F[1:, 1:] + F[:-1, 1:])[ci, cj] < 0

    nxt = {}
    for i, j, c, cen in zip(ci.tolist(), cj.tolist(), cases.tolist(), center.tolist()):
        ids = (hid(i, j), vid(i + 1, j), hid(i, j + 1), vid(i, j))
        segs = _SADDLE[(c, cen)] if c in (5, 10) else _TABLE[c]
        for a, b in segs:
            nxt[ids[a]] = ids[b]

    def point(eid):
        if eid < nH:
            i, j = divmod(eid, N)
            a, b = F[i, j], F[i + 1, j]
            t = a / (a - b)
            return rr[i] + t * h, zz[j], (i if a < 0 else i + 1, j)
        i, j = divmod(eid - nH, N - 1)
        a, b = F[i, j], F[i, j + 1]
        t = a / (a - b)
        return rr[i], zz[j] + t * h, (i, j if a < 0 else j + 1)

    starts = set(nxt) - set(nxt.values())
    chains = []
    seen = set()
    for s in sorted(starts):
        chain = [s]
        seen.add(s)
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
            seen.add(chain[-1])
        chains.append((chain, False))
    for s in sorted(nxt):
        if s in seen:
            continue
        chain = [s]
        seen.add(s)
        e = nxt[s]
        while e != s:
            chain.append(e)
            seen.add(e)
            e = nxt[e]
        chains.append((chain, True))

    nr = g.nr
    loops, arcs, boundary = [], [], []
    for chain, closed in chains:
        data = [point(e) for e in chain]
        pts = np.array([(d[0], d[1]) for d in data])
        nodes = [(abs(d[2][0] - nr), d[2][1]) for d in data]
        if not closed:
            keep = pts[:, 0] >= 0
            if keep.any():
                idx = np.nonzero(keep)[0]
                boundary.append(Polyline(pts[idx], False, nodes[idx[0]]))
            continue
        if pts[:, 0].min() > 0:
            loops.append(Polyline(pts, True, nodes[0]))
            continue
        if pts[:, 0].max() < 0:
            continue
        arcs.extend(_cut_at_axis(pts, nodes))
    return Contour(loops, arcs, boundary)


def _cut_at_axis(pts, nodes):
    on_axis = np.nonzero(pts[:, 0] <= 0)[0]
    n = len(pts)
    start = on_axis[0]
    order = np.r_[start:n, 0:start + 1]
    p = pts[order]
    nd = [nodes[k] for k in order]
    arcs = []
    cur = None
    for k in range(len(p)):
        if p[k, 0] <= 0:
            if cur is not None and len(cur) > 1:
                cur.append(k)
                piece = p[cur].copy()
                piece[0, 0] = max(piece[0, 0], 0.0)
                piece[-1, 0] = max(piece[-1, 0], 0.0)
                if piece[1:-1, 0].size and piece[1:-1, 0].min() > 0:
                    arcs.append(Polyline(piece, False, nd[cur[1]]))
            cur = [k]
        elif cur is not None:
            cur.append(k)
    return arcs


_CROSS = ndimage.generate_binary_structure(2, 1)


def label_regions(values, inside=True):
    """Connected components of ``u < 0`` (or ``u >= 0``) under the saddle rule.

    Returns ``(labels, count)`` like :func:`scipy.ndimage.label`.
    """
    mask = values < 0 if inside else values >= 0
    labels, n = ndimage.label(mask, structure=_CROSS)
    if n < 2:
        return labels, n
    v = values
    center = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[1:, 1:] + v[:-1, 1:])
    joined = center < 0 if inside else center >= 0
    d1 = mask[:-1, :-1] & mask[1:, 1:] & ~mask[1:, :-1] & ~mask[:-1, 1:] & joined
    d2 = mask[1:, :-1] & mask[:-1, 1:] & ~mask[:-1, :-1] & ~mask[1:, 1:] & joined
    a = np.concatenate([labels[:-1, :-1][d1], labels[1:, :-1][d2]])
    b = np.concatenate([labels[1:, 1:][d1], labels[:-1, 1:][d2]])
    if a.size == 0:
        return labels, n
    graph = coo_matrix((np.ones(a.size), (a - 1, b - 1)), shape=(n, n))
    n2, comp = connected_components(graph, directed=False)
    relabel = np.concatenate([[0], comp + 1])
    # keep labels ordered by first appearance for determinism
    new = relabel[labels]
    flat = new.ravel()
    uniq, first = np.unique(flat, return_index=True)
    keep = uniq > 0
    uniq, first = uniq[keep], first[keep]
    remap = np.zeros(n2 + 1, dtype=labels.dtype)
    remap[uniq[np.argsort(first)]] = np.arange(1, len(uniq) + 1)
    return remap[new], n2
