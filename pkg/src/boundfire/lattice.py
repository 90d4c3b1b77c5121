"""Triangular-lattice geometry.

Sites carry integer axial coordinates ``(u, v)`` and embed in the plane at
``u * (1, 0) + v * (1/2, sqrt(3)/2)``.  The squared Euclidean norm of an axial
offset is the integer ``du**2 + du*dv + dv**2``, so ball and annulus
membership are decided exactly.

Domains are finite site sets with a dense row-major id (sorted by ``v`` then
``u``) and a ``(k, 6)`` neighbour table that the numeric kernels consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)
# fixed neighbour order; the kernels index offsets by position in this tuple
NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))
# the same six offsets in counterclockwise angular order starting at angle 0
RING_CCW = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))
DU = np.array([o[0] for o in NEIGHBOR_OFFSETS], dtype=np.int64)
DV = np.array([o[1] for o in NEIGHBOR_OFFSETS], dtype=np.int64)
MAX_SITES = 2**31 - 1
_EPS = 1e-9


class Site(NamedTuple):
    u: int
    v: int

    def embed(self) -> tuple[float, float]:
        return (self.u + 0.5 * self.v, 0.5 * SQRT3 * self.v)

    def __add__(self, other):  # type: ignore[override]
        return Site(self.u + other[0], self.v + other[1])

    def __sub__(self, other):
        return Site(self.u - other[0], self.v - other[1])


ORIGIN = Site(0, 0)


def embed(site) -> tuple[float, float]:
    u, v = site
    return (u + 0.5 * v, 0.5 * SQRT3 * v)


def norm2(du, dv):
    """Exact squared Euclidean length of an axial offset (int or int array)."""
    return du * du + du * dv + dv * dv


def distance(a, b) -> float:
    return math.sqrt(norm2(a[0] - b[0], a[1] - b[1]))


def hex_distance(a, b=ORIGIN) -> int:
    """Graph distance on the triangular lattice."""
    du = a[0] - b[0]
    dv = a[1] - b[1]
    return (abs(du) + abs(dv) + abs(du + dv)) // 2


def neighbors(site) -> list[Site]:
    u, v = site
    return [Site(u + du, v + dv) for du, dv in NEIGHBOR_OFFSETS]


def adjacent(a, b) -> bool:
    return (a[0] - b[0], a[1] - b[1]) in NEIGHBOR_OFFSETS


def cone_slope(alpha: float) -> float:
    """Bound ``s`` such that an offset is in the cone iff ``|2du+dv| <= s*dv``."""
    if alpha >= 0.5 * math.pi - 1e-12:
        return math.inf
    return math.tan(alpha) * SQRT3


def in_cone(du, dv, alpha: float) -> bool:
    """Closed cone of half-angle ``alpha`` around the upward vertical."""
    if dv < 0:
        return False
    slope = cone_slope(alpha)
    if dv == 0:
        return du == 0 or math.isinf(slope)
    return abs(2 * du + dv) <= slope * dv * (1.0 + _EPS)


def cone_mask(du: np.ndarray, dv: np.ndarray, alpha: float) -> np.ndarray:
    slope = cone_slope(alpha)
    if math.isinf(slope):
        return dv >= 0
    lhs = np.abs(2 * du + dv).astype(float)
    return (dv > 0) & (lhs <= slope * dv * (1.0 + _EPS)) | ((du == 0) & (dv == 0))


# --------------------------------------------------------------------------
# domain kinds


@dataclass(frozen=True)
class Hexagon:
    """Sites within graph distance ``N`` of the origin."""

    N: int

    def count(self) -> int:
        return 1 + 3 * self.N * (self.N + 1)

    def coords(self) -> np.ndarray:
        n = self.N
        u, v = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="xy")
        u = u.ravel()
        v = v.ravel()
        keep = (np.abs(u) + np.abs(v) + np.abs(u + v)) <= 2 * n
        return np.stack([u[keep], v[keep]], axis=1)


@dataclass(frozen=True)
class HalfPlaneStrip:
    """``height`` rows of ``width`` sites resting on the real axis.

    Row ``v`` holds ``u`` in ``[-(width // 2) - v // 2, ...]``, so every row is
    centred on ``x = 0`` up to half a lattice spacing and the bottom-centre
    site is the origin when ``width`` is odd.
    """

    width: int
    height: int

    def count(self) -> int:
        return self.width * self.height

    def coords(self) -> np.ndarray:
        rows = []
        for v in range(self.height):
            start = -(self.width // 2) - v // 2
            u = np.arange(start, start + self.width)
            rows.append(np.stack([u, np.full_like(u, v)], axis=1))
        return np.concatenate(rows) if rows else np.zeros((0, 2), dtype=np.int64)


@dataclass(frozen=True)
class Rectangle:
    """Sites whose embedding lies in ``[x1, x2] x [y1, y2]`` (closed)."""

    x1: float
    x2: float
    y1: float
    y2: float

    def count(self) -> int:
        rows = (self.y2 - self.y1) / (0.5 * SQRT3) + 2
        return int(rows * (self.x2 - self.x1 + 2))

    def coords(self) -> np.ndarray:
        vmin = math.ceil(self.y1 / (0.5 * SQRT3) - _EPS)
        vmax = math.floor(self.y2 / (0.5 * SQRT3) + _EPS)
        rows = []
        for v in range(vmin, vmax + 1):
            umin = math.ceil(self.x1 - 0.5 * v - _EPS)
            umax = math.floor(self.x2 - 0.5 * v + _EPS)
            if umax < umin:
                continue
            u = np.arange(umin, umax + 1)
            rows.append(np.stack([u, np.full_like(u, v)], axis=1))
        return np.concatenate(rows) if rows else np.zeros((0, 2), dtype=np.int64)


@dataclass(frozen=True)
class Rhombus:
    """``n x n`` parallelogram spanned by the two lattice basis vectors."""

    n: int

    def count(self) -> int:
        return self.n * self.n

    def coords(self) -> np.ndarray:
        u, v = np.meshgrid(np.arange(self.n), np.arange(self.n), indexing="xy")
        return np.stack([u.ravel(), v.ravel()], axis=1)


@dataclass(frozen=True)
class SiteSet:
    """Arbitrary finite site set (small test domains)."""

    sites: tuple

    def count(self) -> int:
        return len(self.sites)

    def coords(self) -> np.ndarray:
        if not self.sites:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(sorted(set(map(tuple, self.sites))), dtype=np.int64)


DomainKind = Hexagon | HalfPlaneStrip | Rectangle | Rhombus | SiteSet


class Domain:
    """Finite vertex set with dense ids, neighbour table and boundaries.

    Attributes
    ----------
    kind : the constructor parameters
    coords : (k, 2) int64 axial coordinates, row-major by embedding
    nbr : (k, 6) int64 neighbour ids in ``NEIGHBOR_OFFSETS`` order, -1 outside
    """

    def __init__(self, kind, coords: np.ndarray):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((coords[:, 0], coords[:, 1]))
        coords = coords[order]
        if len(coords) > 1 and np.any(np.all(coords[1:] == coords[:-1], axis=1)):
            raise ValueError("duplicate sites in domain")
        self.kind = kind
        self.coords = coords
        self.coords.setflags(write=False)
        self._lookup = {(int(u), int(v)): i for i, (u, v) in enumerate(coords)}
        self.nbr = self._neighbor_table()
        self.nbr.setflags(write=False)
        self._outer = None

    def _neighbor_table(self) -> np.ndarray:
        k = len(self.coords)
        nbr = np.full((k, 6), -1, dtype=np.int64)
        if k == 0:
            return nbr
        u0 = self.coords[:, 0].min() - 1
        v0 = self.coords[:, 1].min() - 1
        w = self.coords[:, 0].max() - u0 + 2
        h = self.coords[:, 1].max() - v0 + 2
        grid = np.full((w, h), -1, dtype=np.int64)
        grid[self.coords[:, 0] - u0, self.coords[:, 1] - v0] = np.arange(k)
        for j in range(6):
            nbr[:, j] = grid[self.coords[:, 0] - u0 + DU[j], self.coords[:, 1] - v0 + DV[j]]
        return nbr

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def size(self) -> int:
        return len(self.coords)

    def __contains__(self, site) -> bool:
        return (int(site[0]), int(site[1])) in self._lookup

    def __repr__(self) -> str:
        return f"Domain({self.kind!r}, sites={self.size})"

    def index(self, site) -> int:
        """Dense id of ``site``, or -1 if it is not in the domain."""
        return self._lookup.get((int(site[0]), int(site[1])), -1)

    def site(self, i: int) -> Site:
        return Site(int(self.coords[i, 0]), int(self.coords[i, 1]))

    def sites(self) -> list[Site]:
        return [Site(int(u), int(v)) for u, v in self.coords]

    @property
    def xy(self) -> np.ndarray:
        return np.stack(
            [self.coords[:, 0] + 0.5 * self.coords[:, 1], 0.5 * SQRT3 * self.coords[:, 1]],
            axis=1,
        )

    def inner_boundary(self) -> np.ndarray:
        """Ids of sites with at least one neighbour outside the domain."""
        return np.flatnonzero(np.any(self.nbr < 0, axis=1))

    def outer_boundary(self) -> list[Site]:
        """Sites outside the domain adjacent to it, row-major."""
        if self._outer is None:
            out = set()
            for i in self.inner_boundary():
                u, v = self.coords[i]
                for j in range(6):
                    if self.nbr[i, j] < 0:
                        out.add((int(u + DU[j]), int(v + DV[j])))
            self._outer = [Site(u, v) for u, v in sorted(out, key=lambda s: (s[1], s[0]))]
        return list(self._outer)

    def bottom_outer_boundary(self) -> list[Site]:
        """Outer-boundary sites on the row just below the lowest domain row."""
        if self.size == 0:
            return []
        vmin = int(self.coords[:, 1].min())
        return [s for s in self.outer_boundary() if s.v == vmin - 1]

    def inner_neighbors(self, outside_sites: Iterable) -> tuple[np.ndarray, np.ndarray]:
        """CSR lists of domain ids adjacent to each given outside site."""
        ptr = [0]
        adj = []
        for s in outside_sites:
            for w in neighbors(s):
                i = self.index(w)
                if i >= 0:
                    adj.append(i)
            ptr.append(len(adj))
        return np.array(ptr, dtype=np.int64), np.array(adj, dtype=np.int64)

    def graph_distance_from(self, source) -> np.ndarray:
        """BFS graph distance inside the domain (-1 where unreachable)."""
        dist = np.full(self.size, -1, dtype=np.int64)
        s = self.index(source)
        if s < 0:
            return dist
        dist[s] = 0
        frontier = [s]
        while frontier:
            nxt = []
            for i in frontier:
                for j in self.nbr[i]:
                    if j >= 0 and dist[j] < 0:
                        dist[j] = dist[i] + 1
                        nxt.append(j)
            frontier = nxt
        return dist


def build_domain(kind, max_sites: int = MAX_SITES) -> Domain:
    """Construct a :class:`Domain` from a kind descriptor."""
    if isinstance(kind, Hexagon):
        if kind.N < 0:
            raise ValueError("hexagon size must be >= 0")
    elif isinstance(kind, HalfPlaneStrip):
        if kind.width <= 0 or kind.height <= 0:
            raise ValueError("strip width and height must be positive")
    elif isinstance(kind, Rhombus):
        if kind.n <= 0:
            raise ValueError("rhombus side must be positive")
    elif isinstance(kind, Rectangle):
        if not (kind.x1 < kind.x2 and kind.y1 < kind.y2):
            raise ValueError("rectangle needs x1 < x2 and y1 < y2")
    elif not isinstance(kind, SiteSet):
        raise TypeError(f"unknown domain kind {kind!r}")
    if kind.count() > max_sites:
        raise OverflowError(f"{kind!r} has more sites than the index space allows")
    return Domain(kind, kind.coords())


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Ball:
    """Open Euclidean ball ``{x : |x - center| < n}``."""

    center: Site
    n: float

    def mask(self, coords: np.ndarray) -> np.ndarray:
        d2 = norm2(coords[:, 0] - self.center[0], coords[:, 1] - self.center[1])
        return d2 < self.n * self.n

    def contains(self, site) -> bool:
        return norm2(site[0] - self.center[0], site[1] - self.center[1]) < self.n * self.n


@dataclass(frozen=True)
class Annulus:
    """Open annulus ``{x : n1 < |x - center| < n2}``."""

    center: Site
    n1: float
    n2: float

    def mask(self, coords: np.ndarray) -> np.ndarray:
        d2 = norm2(coords[:, 0] - self.center[0], coords[:, 1] - self.center[1])
        return (d2 > self.n1 * self.n1) & (d2 < self.n2 * self.n2)

    def contains(self, site) -> bool:
        d2 = norm2(site[0] - self.center[0], site[1] - self.center[1])
        return self.n1 * self.n1 < d2 < self.n2 * self.n2


@dataclass(frozen=True)
class ConeSection:
    """Closed cone of half-angle ``alpha`` above ``apex``, cut to radii.

    With ``n1 == 0`` this is the truncated cone ``cone ∩ B_n2(apex)`` and
    contains the apex; with ``n1 > 0`` it is the open section
    ``cone ∩ {n1 < |x - apex| < n2}``.
    """

    apex: Site
    alpha: float
    n1: float
    n2: float

    def mask(self, coords: np.ndarray) -> np.ndarray:
        du = coords[:, 0] - self.apex[0]
        dv = coords[:, 1] - self.apex[1]
        d2 = norm2(du, dv)
        radial = d2 < self.n2 * self.n2
        if self.n1 > 0:
            radial &= d2 > self.n1 * self.n1
        return radial & cone_mask(du, dv, self.alpha)

    def contains(self, site) -> bool:
        return bool(self.mask(np.array([site], dtype=np.int64))[0])


Region = Ball | Annulus | ConeSection


def region_sites(region, domain: Domain) -> set[Site]:
    """Sites of ``domain`` inside ``region``."""
    if domain.size == 0:
        return set()
    keep = region.mask(domain.coords)
    return {domain.site(i) for i in np.flatnonzero(keep)}


def region_ids(region, domain: Domain) -> np.ndarray:
    return np.flatnonzero(region.mask(domain.coords)) if domain.size else np.zeros(0, np.int64)
