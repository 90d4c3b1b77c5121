"""Cone sites on the bottom row of a half-plane strip.

A bottom-row site ``v`` is an ``(alpha, n)``-cone site at the critical time
when

1. no pure-birth mark at ``T_C`` lies in the closed cone of half-angle
   ``alpha`` above ``v``, and
2. ``v`` is occupied and joined to distance ``n`` by an occupied path inside
   the cone.

With an infinite ignition rate ``v`` itself would burn on birth, so the
second condition becomes: ``v`` vacant and one of its two upper neighbours
joined to distance ``n`` inside the cone.  The localized variant replaces the
global marks by those generated from triggers within distance
``tan(alpha) n`` of ``v`` along paths inside the box
``v + [-tan(alpha) n, tan(alpha) n] x [0, n]``.

Occupation inside an unmarked cone is the same for the fire and for the
pure-birth process, so condition 2 is read from the birth clocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lattice
from .forestfire import NO_RECOVERY, T_C, ProcessSpec, RunRecord, simulate
from .kernels import cones, fire
from .lattice import HalfPlaneStrip, Site, build_domain
from .percolation import Estimate, cone_arm_probability

STANDARD = "Standard"
INFINITE_ZETA = "InfiniteZeta"


@dataclass(frozen=True)
class ConeSiteSpec:
    alpha: float
    n: float
    variant: str = STANDARD
    localized: float | None = None  # the delta of the box; None for the global version

    def __post_init__(self):
        if not math.pi / 6 < self.alpha <= math.pi / 2 + 1e-12:
            raise ValueError("alpha must lie in (pi/6, pi/2]")
        if not self.n > 0:
            raise ValueError("n must be positive")
        if self.variant not in (STANDARD, INFINITE_ZETA):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.localized is not None and lattice.cone_slope(self.alpha) == math.inf:
            raise ValueError("the localized box is unbounded for alpha = pi/2")

    @property
    def slope(self) -> float:
        return lattice.cone_slope(self.alpha)

    def with_radius(self, n: float) -> "ConeSiteSpec":
        return ConeSiteSpec(self.alpha, n, self.variant, self.localized)


class _View:
    """Per-run arrays shared by all cone-site queries on one record."""

    def __init__(self, run: RunRecord):
        if run.spec.horizon < T_C:
            raise ValueError("the run must reach the critical time")
        self.run = run
        dom = run.domain
        self.coords = dom.coords
        self.xy = dom.xy
        self.bottom = int(dom.coords[:, 1].min())
        self.occupied = run.birth_time <= T_C
        self.mark = run.pure_birth_mark_time(T_C) <= T_C
        self.marked_xy = self.xy[self.mark]

    def check_bottom(self, v) -> int:
        i = self.run.domain.index(v)
        if i < 0 or v[1] != self.bottom:
            raise ValueError(f"{v} is not on the bottom row")
        return i

    def blocked(self, ids, alpha) -> np.ndarray:
        """Marks inside the (untruncated) cone of each bottom site."""
        if len(self.marked_xy) == 0:
            return np.zeros(len(ids), dtype=bool)
        x = self.xy[ids, 0][:, None]
        mx = self.marked_xy[:, 0][None, :]
        my = (self.marked_xy[:, 1] - self.xy[ids, 1][:, None])
        tan = math.tan(alpha) if alpha < math.pi / 2 - 1e-12 else math.inf
        if math.isinf(tan):
            inside = my >= -1e-9
        else:
            inside = (my >= -1e-9) & (np.abs(mx - x) <= tan * my + 1e-9)
        return inside.any(axis=1)

    def local_blocked(self, i, spec: ConeSiteSpec) -> bool:
        run = self.run
        dom = run.domain
        half = math.tan(spec.alpha) * spec.n
        dx = self.xy[:, 0] - self.xy[i, 0]
        dy = self.xy[:, 1] - self.xy[i, 1]
        in_box = (np.abs(dx) <= half + 1e-9) & (dy >= -1e-9) & (dy <= spec.n + 1e-9)
        du = self.coords[:, 0] - self.coords[i, 0]
        dv = self.coords[:, 1] - self.coords[i, 1]
        in_cone = in_box & lattice.cone_mask(du, dv, spec.alpha)
        birth = np.where(in_box, run.birth_time, np.inf)
        bptr, badj, _ = run.spec.arrays()
        # only triggers within distance tan(alpha) n of the apex count
        bxy = np.array([lattice.embed(b) for b in run.spec.boundary_sites()]).reshape(-1, 2)
        near = np.hypot(bxy[:, 0] - self.xy[i, 0], bxy[:, 1] - self.xy[i, 1]) <= half + 1e-9
        if math.isinf(run.spec.zeta):
            touch = np.full(dom.size, -1, dtype=np.int64)
            for b in np.flatnonzero(near):
                touch[badj[bptr[b] : bptr[b + 1]]] = b
            mark = fire.infinite_zeta_marks(dom.nbr, touch, birth, T_C)
            return bool(np.any(in_cone & (mark <= T_C)))
        keep = near[run.ignition_vertex] if run.ignition_vertex.size else np.zeros(0, dtype=bool)
        _, hit = fire.pure_birth_marks(
            dom.nbr, bptr, badj, birth, run.ignition_time[keep], run.ignition_vertex[keep], T_C, in_cone, True
        )
        return bool(hit)

    def arm(self, i, spec: ConeSiteSpec) -> bool:
        dom = self.run.domain
        u, v = int(self.coords[i, 0]), int(self.coords[i, 1])
        if spec.variant == STANDARD:
            if not self.occupied[i]:
                return False
            sources = np.array([i], dtype=np.int64)
        else:
            if self.occupied[i]:
                return False
            sources = np.array([dom.index((u, v + 1)), dom.index((u - 1, v + 1))], dtype=np.int64)
        if spec.n <= 1:
            # the apex (or an upper neighbour) alone already reaches distance n
            return bool(np.any([s >= 0 and self.occupied[s] for s in sources]))
        reach = cones.cone_reach(dom.nbr, self.coords, self.occupied, u, v, spec.slope, float(spec.n), sources)
        return reach >= spec.n


def _view(run) -> _View:
    return run if isinstance(run, _View) else _View(run)


def is_cone_site(run, v, spec: ConeSiteSpec) -> bool:
    """Is the bottom-row site ``v`` an ``(alpha, n)``-cone site of ``run`` at ``T_C``?"""
    view = _view(run)
    i = view.check_bottom(Site(*v))
    if not view.arm(i, spec):
        return False
    if spec.localized is not None:
        return not view.local_blocked(i, spec)
    return not bool(view.blocked(np.array([i]), spec.alpha)[0])


def _check_geometry(view: _View, n: int, spec: ConeSiteSpec):
    row = view.coords[view.coords[:, 1] == view.bottom]
    spread = min(spec.n, math.tan(spec.alpha) * spec.n) if spec.alpha < math.pi / 2 else spec.n
    lo, hi = row[:, 0].min(), row[:, 0].max()
    if lo > -n - spread or hi < n + spread:
        raise ValueError("strip too narrow for the interval plus cone radius")
    if view.coords[:, 1].max() - view.bottom < spec.n / (0.5 * math.sqrt(3.0)):
        raise ValueError("strip too low for the cone radius")


def count_cone_sites(run, n: int, spec: ConeSiteSpec) -> int:
    """Number of bottom-row sites with ``|x| <= n`` that are cone sites for ``spec``.

    ``spec.n`` is the cone radius (``delta * n`` in the usual scaling).
    """
    view = _view(run)
    _check_geometry(view, n, spec)
    dom = view.run.domain
    ids = np.array(
        [dom.index((u, view.bottom)) for u in range(-int(n), int(n) + 1)], dtype=np.int64
    )
    if spec.localized is None:
        candidates = ids[~view.blocked(ids, spec.alpha)]
    else:
        candidates = ids
    count = 0
    for i in candidates:
        if not view.arm(int(i), spec):
            continue
        if spec.localized is not None and view.local_blocked(int(i), spec):
            continue
        count += 1
    return count


def cone_count_strip(n: int, alpha: float, radius: float):
    """Strip used by :func:`cone_count_runs`: the interval, the cones and a margin."""
    height = max(int(math.ceil(2 * radius)) + 4, n // 2)
    tan = math.tan(alpha) if alpha < math.pi / 2 - 1e-12 else 1.0
    margin = int(math.ceil(min(tan * height * 0.5 * math.sqrt(3.0), 2 * n))) + 4
    return build_domain(HalfPlaneStrip(2 * (n + margin) + 1, height))


def cone_count_runs(n: int, alpha: float, radius: float, zeta, replicas: int, seed: int = 0, first: int = 0):
    """Yield one run per replica on a strip sized for ``count_cone_sites(run, n, ...)``."""
    strip = cone_count_strip(n, alpha, radius)
    spec = ProcessSpec(strip, NO_RECOVERY, zeta, T_C, tuple(strip.bottom_outer_boundary()))
    for r in range(first, first + replicas):
        yield simulate(spec, seed, replica=r, name="cone-count")


def cone_site_counts(n: int, spec: ConeSiteSpec, zeta, replicas: int, seed: int = 0) -> np.ndarray:
    return np.array(
        [count_cone_sites(run, n, spec) for run in cone_count_runs(n, spec.alpha, spec.n, zeta, replicas, seed)]
    )


def pair_correlation_check(runs, v, w, spec: ConeSiteSpec, arm_replicas: int = 100_000, arm_seed: int = 0):
    """Joint cone-site frequency of ``v`` and ``w`` normalised by one-arm probabilities.

    Returns a dict with the joint estimate, both marginals and
    ``ratio = P(both) / (pi1(n) * pi1(min(|v - w|, n)))`` where ``pi1`` is the
    critical one-arm probability in the cone (``pi1(0) = 1``).
    """
    both = []
    first = []
    second = []
    for run in runs:
        view = _view(run)
        a = is_cone_site(view, v, spec)
        b = is_cone_site(view, w, spec)
        first.append(a)
        second.append(b)
        both.append(a and b)
    joint = Estimate.from_outcomes(both, 0)
    dist = min(lattice.distance(v, w), spec.n)
    pi_n = cone_arm_probability(spec.alpha, float(spec.n), arm_replicas, arm_seed).p_hat
    pi_d = 1.0 if dist <= 0 else cone_arm_probability(spec.alpha, float(dist), arm_replicas, arm_seed).p_hat
    denom = pi_n * pi_d
    return {
        "joint": joint,
        "first": Estimate.from_outcomes(first, 0),
        "second": Estimate.from_outcomes(second, 0),
        "pi1_n": pi_n,
        "pi1_d": pi_d,
        "ratio": joint.p_hat / denom if denom > 0 else math.inf,
    }
