"""Brute-force H1 of voxelized complements and homology descent in spacetime.

Cubical complexes are stored on the doubled ("Khalimsky") lattice: a cell of
an ``n``-box grid sits at integer coordinates in ``[0, 2n]`` per axis, and
its dimension is the number of odd coordinates. A voxel mask is turned into
a complex by taking the closure of its top cells.

Ranks are computed over Z/2. Rows belonging to a spanning forest of the
1-skeleton are dropped before elimination: every 1-cycle is determined by
its coefficients on the non-tree edges, so a cycle supported on the tree is
zero and the rank of the boundary map does not change.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from numba.typed import List
from scipy import ndimage
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from .exceptions import ConfigurationError

MAX_N = 64
MAX_SLICES = 8


# --- voxelization ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VoxelRegion:
    """Inside and outside voxel masks of one frame on an ``n^3`` box.

    ``bounds`` is ``((x0, x1), (y0, y1), (z0, z1))``.
    """

    n: int
    w_in: np.ndarray
    w_out: np.ndarray
    bounds: tuple
    time: float = 0.0

    @property
    def spacing(self):
        return tuple((b - a) / self.n for a, b in self.bounds)

    @property
    def w(self):
        return self.w_in | self.w_out

    def center(self, i, j, k):
        return tuple(a + (q + 0.5) * s for (a, _), q, s in zip(self.bounds, (i, j, k),
                                                                self.spacing))


def voxelize_revolution(field, n, time=0.0):
    """Revolve ``field`` about the z axis onto an ``n^3`` box of voxels.

    A voxel is in W_in when u < -h/2 at its center's (r, z) and in W_out when
    u > h/2, with h the spacing of the field grid. Points beyond ``r_max``
    count as outside.
    """
    if not 1 <= n <= MAX_N:
        raise ConfigurationError(f"resolution n={n} outside [1, {MAX_N}]")
    g = field.grid
    bx = (-g.r_max, g.r_max)
    bz = (g.z_min, g.z_max)
    x = bx[0] + (np.arange(n) + 0.5) * (bx[1] - bx[0]) / n
    z = bz[0] + (np.arange(n) + 0.5) * (bz[1] - bz[0]) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = np.hypot(X, Y)
    far = R > g.r_max
    R2 = np.broadcast_to(np.minimum(R, g.r_max)[:, :, None], (n, n, n))
    Z2 = np.broadcast_to(z[None, None, :], (n, n, n))
    u = field.sample(R2.ravel(), Z2.ravel()).reshape(n, n, n)
    u[np.broadcast_to(far[:, :, None], (n, n, n))] = np.inf
    half = 0.5 * g.h
    return VoxelRegion(n, u < -half, u > half, (bx, bx, bz), float(time))


# --- cubical complexes ------------------------------------------------------------

def closure(top):
    """Presence array on the doubled lattice for the closure of ``top`` cells."""
    P = np.zeros(tuple(2 * s + 1 for s in top.shape), bool)
    P[tuple(slice(1, None, 2) for _ in range(top.ndim))] = top
    for ax in range(top.ndim):
        Q = np.moveaxis(P, ax, 0)
        Q[0:-1:2] |= Q[1::2]
        Q[2::2] |= Q[1::2]
    return P


def spacetime_presence(masks):
    """4D presence array for slices joined by prisms over consecutive intersections."""
    K = len(masks)
    shape = masks[0].shape
    P = np.zeros((2 * K - 1,) + tuple(2 * s + 1 for s in shape), bool)
    for k in range(K):
        P[2 * k] = closure(masks[k])
    for k in range(K - 1):
        prism = closure(masks[k] & masks[k + 1])
        P[2 * k + 1] = prism
        P[2 * k] |= prism
        P[2 * k + 2] |= prism
    return P


class CubicalComplex:
    """Cells of a presence array, indexed per dimension in lexicographic order."""

    def __init__(self, presence):
        self.presence = np.asarray(presence, bool)
        self.shape = self.presence.shape
        self.ndim = self.presence.ndim
        coords = np.argwhere(self.presence)
        dims = (coords % 2).sum(axis=1)
        self.cells = [coords[dims == d] for d in range(self.ndim + 1)]
        self._pos = []
        for d in range(self.ndim + 1):
            pos = np.full(self.presence.size, -1, np.int64)
            flat = np.ravel_multi_index(self.cells[d].T, self.shape) if len(self.cells[d]) else []
            pos[flat] = np.arange(len(self.cells[d]))
            self._pos.append(pos)
        self._bd = {}

    @classmethod
    def from_mask(cls, mask):
        return cls(closure(np.asarray(mask, bool)))

    def count(self, d):
        return len(self.cells[d]) if d <= self.ndim else 0

    def euler_characteristic(self):
        return int(sum((-1) ** d * self.count(d) for d in range(self.ndim + 1)))

    def index(self, d, coords):
        """Indices of d-cells at doubled-lattice ``coords``; -1 where absent."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.ndim)
        ok = np.all((coords >= 0) & (coords < np.array(self.shape)), axis=1)
        out = np.full(len(coords), -1, np.int64)
        if ok.any():
            flat = np.ravel_multi_index(coords[ok].T, self.shape)
            out[ok] = self._pos[d][flat]
        return out

    def boundary(self, d):
        """(rows, cols) of the mod-2 boundary from d-cells to (d-1)-cells."""
        if d in self._bd:
            return self._bd[d]
        hi = self.cells[d]
        rows, cols = [], []
        for ax in range(self.ndim):
            odd = np.nonzero(hi[:, ax] % 2 == 1)[0]
            for s in (-1, 1):
                nb = hi[odd].copy()
                nb[:, ax] += s
                rows.append(self._pos[d - 1][np.ravel_multi_index(nb.T, self.shape)])
                cols.append(odd)
        r = np.concatenate(rows) if rows else np.zeros(0, np.int64)
        c = np.concatenate(cols) if cols else np.zeros(0, np.int64)
        if (r < 0).any():
            raise AssertionError("closure is missing a face")
        self._bd[d] = (r, c)
        return r, c

    def boundary_matrix(self, d):
        r, c = self.boundary(d)
        return csc_matrix((np.ones(r.size, np.int64), (r, c)),
                          shape=(self.count(d - 1), self.count(d)))

    def edge_ends(self):
        r, c = self.boundary(1)
        order = np.argsort(c, kind="stable")
        return r[order].reshape(-1, 2)

    def components(self):
        V = self.count(0)
        if V == 0:
            return 0, np.zeros(0, np.int64)
        uv = self.edge_ends()
        A = coo_matrix((np.ones(len(uv)), (uv[:, 0], uv[:, 1])), shape=(V, V))
        return connected_components(A, directed=False)

    def forest_edges(self):
        """Boolean mask of edges in a spanning forest of the 1-skeleton."""
        V, E = self.count(0), self.count(1)
        tree = np.zeros(E, bool)
        if E == 0:
            return tree
        uv = self.edge_ends()
        # weights 1..E make the forest deterministic
        T = minimum_spanning_tree(coo_matrix((np.arange(1, E + 1, dtype=float),
                                              (uv[:, 0], uv[:, 1])), shape=(V, V))).tocoo()
        tree[(T.data - 1).astype(np.int64)] = True
        return tree


# --- sparse Z/2 elimination -----------------------------------------------------

@numba.njit(cache=True)
def _symdiff(a, b):
    out = np.empty(a.size + b.size, np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            out[k] = a[i]
            i += 1
            k += 1
        elif a[i] > b[j]:
            out[k] = b[j]
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k]


@numba.njit(cache=True)
def _reduce(indptr, indices, nrows, track):
    """Column reduction with pivot = largest row index.

    Returns the pivot table (row -> stored column), the reduced columns and,
    with ``track``, the sets of original columns that sum to each of them.
    """
    ncol = indptr.size - 1
    pivot = np.full(nrows, -1, np.int64)
    store = List()
    combo = List()
    for j in range(ncol):
        col = np.sort(indices[indptr[j]:indptr[j + 1]].copy())
        mix = np.array([j], np.int64)
        while col.size > 0:
            p = pivot[col[-1]]
            if p < 0:
                break
            col = _symdiff(col, store[p])
            if track:
                mix = _symdiff(mix, combo[p])
        if col.size > 0:
            pivot[col[-1]] = len(store)
            store.append(col)
            if track:
                combo.append(mix)
            else:
                combo.append(mix[:0])
    return pivot, store, combo


@numba.njit(cache=True)
def _solve(pivot, store, combo, b):
    """Reduce ``b`` against the pivots; returns (residual, combination)."""
    col = np.sort(b.copy())
    mix = np.zeros(0, np.int64)
    while col.size > 0:
        p = pivot[col[-1]]
        if p < 0:
            break
        col = _symdiff(col, store[p])
        mix = _symdiff(mix, combo[p])
    return col, mix


class Z2Boundary:
    """The boundary map from 2-cells to non-tree edges, reduced once."""

    def __init__(self, cx: CubicalComplex, track=False):
        self.cx = cx
        tree = cx.forest_edges()
        self.row_of_edge = np.full(cx.count(1), -1, np.int64)
        self.nontree = np.nonzero(~tree)[0]
        self.row_of_edge[self.nontree] = np.arange(self.nontree.size)
        if cx.count(2):
            r, c = cx.boundary(2)
            rr = self.row_of_edge[r]
            keep = rr >= 0
            M = csc_matrix((np.ones(int(keep.sum()), np.int8), (rr[keep], c[keep])),
                           shape=(self.nontree.size, cx.count(2)))
            M.sort_indices()
            indptr, indices = M.indptr.astype(np.int64), M.indices.astype(np.int64)
        else:
            indptr, indices = np.zeros(1, np.int64), np.zeros(0, np.int64)
        self.pivot, self.store, self.combo = _reduce(indptr, indices, max(self.nontree.size, 1),
                                                     bool(track))
        self.rank = len(self.store)
        self.track = track

    def solve(self, edges):
        """A 2-chain (face indices) with boundary ``edges``, or None."""
        rows = self.row_of_edge[np.asarray(edges, np.int64)]
        rows = rows[rows >= 0]
        if rows.size == 0:
            return np.zeros(0, np.int64)
        res, mix = _solve(self.pivot, self.store, self.combo, rows.astype(np.int64))
        if res.size:
            return None
        if not self.track:
            raise ConfigurationError("solver built without combination tracking")
        return mix


def boundary_of_chain(cx, d, chain):
    """Mod-2 boundary of a d-chain given as cell indices; returns (d-1)-cell indices."""
    r, c = cx.boundary(d)
    sel = np.zeros(cx.count(d), bool)
    sel[np.asarray(chain, np.int64)] = True
    hits = r[sel[c]]
    counts = np.bincount(hits, minlength=cx.count(d - 1))
    return np.nonzero(counts % 2)[0]


def betti1(mask):
    """Rank of H1 of the voxel set over Z/2 (closure of the voxels as a complex)."""
    mask = np.asarray(mask, bool)
    if not mask.any():
        return 0
    cx = CubicalComplex.from_mask(mask)
    red = Z2Boundary(cx)
    # dim ker d1 = E - V + b0 = number of non-tree edges
    return int(red.nontree.size - red.rank)


def betti_numbers_dual(mask):
    """(b0, b1, b2) via Euler characteristic and bounded complement components.

    An independent check of :func:`betti1` for 3D voxel sets: b2 counts the
    bounded components of the complement (6-connected, since the closure
    joins voxels sharing a vertex).
    """
    mask = np.asarray(mask, bool)
    if not mask.any():
        return 0, 0, 0
    cx = CubicalComplex.from_mask(mask)
    b0, _ = cx.components()
    padded = np.pad(~mask, 1, constant_values=True)
    lab, n = ndimage.label(padded)
    b2 = n - 1
    chi = cx.euler_characteristic()
    return int(b0), int(b0 + b2 - chi), int(b2)


def region_betti1(region):
    """b1 of W = W_in + W_out (the two sides are separated by the surface)."""
    if isinstance(region, VoxelRegion):
        return betti1(region.w_in) + betti1(region.w_out)
    return betti1(region)


@dataclass(frozen=True)
class MonotonicityReport:
    ranks: tuple
    violations: tuple

    @property
    def passed(self):
        return not self.violations


def check_h1_monotonicity(regions):
    """b1(W(t_i)) >= b1(W(t_{i+1})) for consecutive frames."""
    if len(regions) < 2:
        raise ConfigurationError("need at least two frames")
    ranks = tuple(region_betti1(r) for r in regions)
    bad = tuple((i, i + 1) for i in range(len(ranks) - 1) if ranks[i + 1] > ranks[i])
    return MonotonicityReport(ranks, bad)


# --- spacetime descent ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpacetimeComplement:
    """Slices W(t_0..t_K) on one voxel box, joined by prisms over intersections."""

    masks: tuple
    times: tuple = ()

    def __post_init__(self):
        masks = tuple(np.asarray(m, bool) for m in self.masks)
        if len(masks) < 1 or len(masks) > MAX_SLICES:
            raise ConfigurationError(f"need 1..{MAX_SLICES} slices")
        if len({m.shape for m in masks}) != 1 or masks[0].ndim != 3:
            raise ConfigurationError("slices must be 3D masks of one shape")
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "_cx", None)
        object.__setattr__(self, "_solver", None)

    @classmethod
    def from_regions(cls, regions, side):
        """Stack the ``'in'``, ``'out'`` or ``'w'`` masks of voxel regions."""
        pick = {"in": lambda r: r.w_in, "out": lambda r: r.w_out, "w": lambda r: r.w}[side]
        return cls(tuple(pick(r) for r in regions), tuple(r.time for r in regions))

    @property
    def slices(self):
        return len(self.masks)

    @property
    def complex(self):
        if self._cx is None:
            object.__setattr__(self, "_cx", CubicalComplex(spacetime_presence(self.masks)))
        return self._cx

    def solver(self):
        if self._solver is None:
            object.__setattr__(self, "_solver", Z2Boundary(self.complex, track=True))
        return self._solver

    def slice_edges(self, k, cycle):
        """Spacetime edge indices of a slice-k cycle given as 3D doubled coordinates."""
        c = np.asarray(cycle, np.int64).reshape(-1, 3)
        full = np.column_stack([np.full(len(c), 2 * k), c])
        idx = self.complex.index(1, full)
        if (idx < 0).any():
            raise ConfigurationError(f"cycle edges outside slice {k} of the spacetime complex")
        return idx

    def slice_complex(self, k):
        return CubicalComplex.from_mask(self.masks[k])


@dataclass(frozen=True, eq=False)
class ChainWitness:
    """Cycles at two slices and a 2-chain whose boundary is their difference."""

    cycle0: np.ndarray
    cycle1: np.ndarray
    slice0: int
    slice1: int
    chain: Optional[np.ndarray] = None

    @property
    def found(self):
        return self.chain is not None

    def to_json(self):
        return {"slice0": self.slice0, "slice1": self.slice1,
                "cycle0": np.asarray(self.cycle0).tolist(),
                "cycle1": np.asarray(self.cycle1).tolist(),
                "chain": None if self.chain is None else np.asarray(self.chain).tolist()}


def is_cycle(cx, edges):
    return boundary_of_chain(cx, 1, edges).size == 0


def verify_descent(gamma0, gamma1, spacetime, k0=0, k1=None):
    """Solve d(x) = gamma0 - gamma1 over Z/2 in the spacetime complex.

    ``gamma0`` and ``gamma1`` are edge lists in doubled 3D coordinates living
    in slices ``k0`` and ``k1`` (default: the last). Returns a
    :class:`ChainWitness`; ``chain`` is None when there is no descent at
    this resolution. A found chain is checked by evaluating its boundary.
    """
    k1 = spacetime.slices - 1 if k1 is None else k1
    cx = spacetime.complex
    e0 = spacetime.slice_edges(k0, gamma0) if len(gamma0) else np.zeros(0, np.int64)
    e1 = spacetime.slice_edges(k1, gamma1) if len(gamma1) else np.zeros(0, np.int64)
    for e in (e0, e1):
        if not is_cycle(cx, e):
            raise ConfigurationError("input chain is not a cycle")
    target = np.nonzero(np.bincount(np.concatenate([e0, e1]), minlength=cx.count(1)) % 2)[0]
    chain = spacetime.solver().solve(target)
    if chain is not None and not np.array_equal(boundary_of_chain(cx, 2, chain), target):
        raise AssertionError("descent witness does not have the requested boundary")
    g0 = np.asarray(gamma0, np.int64).reshape(-1, 3)
    g1 = np.asarray(gamma1, np.int64).reshape(-1, 3)
    return ChainWitness(g0, g1, k0, k1, chain)


def bounds_in_slice(spacetime, k, cycle_a, cycle_b=()):
    """Whether cycle_a - cycle_b bounds inside slice k alone."""
    cx = spacetime.slice_complex(k)
    ea = cx.index(1, np.asarray(cycle_a, np.int64).reshape(-1, 3))
    eb = cx.index(1, np.asarray(cycle_b, np.int64).reshape(-1, 3))
    if (ea < 0).any() or (eb < 0).any():
        raise ConfigurationError("cycle outside the slice mask")
    target = np.nonzero(np.bincount(np.concatenate([ea, eb]), minlength=cx.count(1)) % 2)[0]
    return Z2Boundary(cx, track=True).solve(target) is not None


@dataclass(frozen=True)
class UniquenessReport:
    successes: tuple
    consistent: bool


def descent_uniqueness_check(gamma0, candidates, spacetime, k0=0, k1=None):
    """Candidates reached from gamma0 must all lie in one class of slice k1."""
    k1 = spacetime.slices - 1 if k1 is None else k1
    ok = tuple(i for i, c in enumerate(candidates)
               if verify_descent(gamma0, c, spacetime, k0, k1).found)
    consistent = all(bounds_in_slice(spacetime, k1, candidates[a], candidates[b])
                     for a, b in zip(ok, ok[1:]))
    return UniquenessReport(ok, consistent)


# --- cycles -------------------------------------------------------------------------

def _vertex(region, x, y, z):
    """Nearest lattice vertex (doubled coordinates) to a point of the box."""
    out = []
    for (a, b), s, v in zip(region.bounds, region.spacing, (x, y, z)):
        q = int(round((v - a) / s))
        out.append(2 * min(max(q, 0), region.n))
    return out


def _path(p, q):
    """Axis-aligned lattice path between two doubled-coordinate vertices."""
    edges = []
    cur = list(p)
    for ax in range(3):
        step = 2 if q[ax] > cur[ax] else -2
        while cur[ax] != q[ax]:
            e = list(cur)
            e[ax] += step // 2
            edges.append(tuple(e))
            cur[ax] += step
    return edges


def _polygon_cycle(vertices):
    edges = []
    for p, q in zip(vertices, vertices[1:] + vertices[:1]):
        edges.extend(_path(p, q))
    # cancel edges traversed twice
    uniq, counts = np.unique(np.array(edges, np.int64).reshape(-1, 3), axis=0,
                             return_counts=True)
    return uniq[counts % 2 == 1]


def rotational_cycle(region, r0, z0, samples=64):
    """Lattice loop around the z axis at radius ``r0`` and height ``z0``."""
    verts = []
    for m in range(samples):
        phi = 2 * math.pi * m / samples
        v = _vertex(region, r0 * math.cos(phi), r0 * math.sin(phi), z0)
        if not verts or v != verts[-1]:
            verts.append(v)
    if len(verts) > 1 and verts[0] == verts[-1]:
        verts.pop()
    return _polygon_cycle(verts)


def meridian_cycle(region, r_lo, r_hi, z_lo, z_hi):
    """Rectangle in the half-plane y = 0, x > 0 (a loop around a tube)."""
    corners = [(r_lo, 0.0, z_lo), (r_hi, 0.0, z_lo), (r_hi, 0.0, z_hi), (r_lo, 0.0, z_hi)]
    return _polygon_cycle([_vertex(region, *c) for c in corners])


def cycle_in_mask(mask, cycle):
    cx = CubicalComplex.from_mask(mask)
    idx = cx.index(1, np.asarray(cycle, np.int64).reshape(-1, 3))
    return bool((idx >= 0).all()) and is_cycle(cx, idx)


# --- fixtures -------------------------------------------------------------------------

def _grid(n):
    x = (np.arange(n) + 0.5) / n * 2 - 1
    return np.meshgrid(x, x, x, indexing="ij")


def fixture_zoo(n=24):
    """Hand-countable voxel sets: name -> (mask, expected b1)."""
    X, Y, Z = _grid(n)
    R = np.hypot(X, Y)
    ball = X ** 2 + Y ** 2 + Z ** 2 < 0.7 ** 2
    tube = np.hypot(R - 0.55, Z)
    torus = tube < 0.25
    shell = (tube < 0.35) & (tube > 0.15)
    stacked = (np.hypot(R - 0.5, Z - 0.45) < 0.2) | (np.hypot(R - 0.5, Z + 0.45) < 0.2)
    tunnel = ball & ~(np.hypot(X, Y) < 0.2)
    return {
        "ball": (ball, 0),
        "solid_torus": (torus, 1),
        "torus_shell": (shell, 2),
        "stacked_tori": (stacked, 2),
        "ball_with_tunnel": (tunnel, 1),
        "torus_complement": (~torus, 1),
    }


def save_masks(masks, path):
    """Write masks as packed bits plus a JSON index at ``path + '.json'``.

    ``masks`` maps names to boolean arrays (optionally with extra metadata as
    ``(mask, meta)`` pairs). The binary layout is a 4-byte magic followed by
    the packed bits of each mask in index order.
    """
    index = []
    offset = 4
    with open(path, "wb") as fh:
        fh.write(b"GFV1")
        for name, item in masks.items():
            mask, meta = item if isinstance(item, tuple) else (item, None)
            mask = np.asarray(mask, bool)
            blob = np.packbits(mask.ravel()).tobytes()
            fh.write(blob)
            index.append({"name": name, "shape": list(mask.shape), "offset": offset,
                          "nbytes": len(blob), "meta": meta})
            offset += len(blob)
    with open(str(path) + ".json", "w") as fh:
        json.dump({"format": "packbits-v1", "masks": index}, fh, indent=2, sort_keys=True)
    return path


def load_masks(path):
    with open(str(path) + ".json") as fh:
        index = json.load(fh)["masks"]
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != b"GFV1":
        raise ConfigurationError(f"{path} is not a mask archive")
    out = {}
    for item in index:
        raw = np.frombuffer(data, np.uint8, item["nbytes"], item["offset"])
        size = int(np.prod(item["shape"]))
        out[item["name"]] = np.unpackbits(raw)[:size].astype(bool).reshape(item["shape"])
    return out
