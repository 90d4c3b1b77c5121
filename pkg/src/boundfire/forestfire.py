"""Forest fire with boundary ignitions.

Every vacant site becomes occupied at rate 1.  Vertices of the ignition
boundary (outside the domain) are hit by lightning at rate ``zeta``; a hit
burns every occupied cluster adjacent to the vertex at once.  With
``zeta = inf`` a cluster burns as soon as it touches the ignition boundary.
Without recovery burnt sites stay burnt; with recovery they behave as vacant
sites and become occupied again at rate 1.

Two mark sets are exposed by :class:`RunRecord`:

* *fire marks* (:meth:`RunRecord.marks`): sites burnt by triggers up to ``t``;
* *pure-birth marks* (:meth:`RunRecord.pure_birth_marks`): the same triggers
  applied to the fire-free birth process, marking the whole pure-birth
  cluster of the trigger's inner neighbours.  These dominate the fire marks
  and are the set used for cone sites and fire depth.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .ctmc import BurntBy, EventuallyBurnt, exact_small_ctmc
from .kernels import fire, lazy
from .lattice import Domain, HalfPlaneStrip, Hexagon, Site, build_domain
from .parallel import run_blocks
from .percolation import Estimate
from .rng import as_u64, key_of

T_C = math.log(2.0)
VACANT, OCCUPIED, BURNT = fire.VACANT, fire.OCCUPIED, fire.BURNT

NO_RECOVERY = "NoRecovery"
RECOVERY = "Recovery"
VARIANTS = (NO_RECOVERY, RECOVERY)

__all__ = [
    "T_C",
    "ProcessSpec",
    "DynState",
    "RunRecord",
    "simulate",
    "eventual_burn_closure",
    "origin_burn_experiment",
    "long_path_experiment",
    "fire_depth_experiment",
    "bounded_cluster_experiment",
    "exact_small_ctmc",
    "EventuallyBurnt",
    "BurntBy",
]


def parse_zeta(value) -> float:
    """Accept a positive number or ``"inf"``."""
    if isinstance(value, str):
        text = value.strip().lower()
        z = math.inf if text in ("inf", "infinity", "infinite") else float(text)
    else:
        z = float(value)
    if not z > 0:
        raise ValueError(f"zeta must be positive, got {value!r}")
    return z


def format_zeta(z: float) -> str:
    return "inf" if math.isinf(z) else repr(float(z))


@functools.lru_cache(maxsize=64)
def boundary_arrays(domain: Domain, boundary: tuple):
    """CSR adjacency of ignition vertices plus the smallest touching vertex per site."""
    bptr, badj = domain.inner_neighbors(boundary)
    touch = np.full(domain.size, -1, dtype=np.int64)
    for b in range(len(boundary) - 1, -1, -1):
        touch[badj[bptr[b] : bptr[b + 1]]] = b
    for arr in (bptr, badj, touch):
        arr.setflags(write=False)
    return bptr, badj, touch


@dataclass(frozen=True)
class ProcessSpec:
    """Parameters of one forest-fire process.

    ``ignition_boundary`` defaults to the whole outer boundary.  ``horizon``
    may be infinite only without recovery (the run then stops after the last
    birth and :func:`eventual_burn_closure` settles the rest).
    """

    domain: Domain
    variant: str = NO_RECOVERY
    zeta: float = 1.0
    horizon: float = math.inf
    ignition_boundary: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "zeta", parse_zeta(self.zeta))
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.recovery and math.isinf(self.horizon):
            raise ValueError("the recovery variant needs a finite horizon")
        if self.ignition_boundary is not None:
            sites = tuple(Site(*s) for s in self.ignition_boundary)
            outer = set(self.domain.outer_boundary())
            bad = [s for s in sites if s not in outer]
            if bad:
                raise ValueError(f"ignition vertex {bad[0]} is not on the outer boundary")
            object.__setattr__(self, "ignition_boundary", tuple(sorted(set(sites), key=lambda s: (s.v, s.u))))

    @property
    def recovery(self) -> bool:
        return self.variant == RECOVERY

    def boundary_sites(self) -> tuple:
        if self.ignition_boundary is None:
            return tuple(self.domain.outer_boundary())
        return self.ignition_boundary

    def arrays(self):
        return boundary_arrays(self.domain, self.boundary_sites())


@dataclass
class DynState:
    """Site states at one time, with the fire-mark flags."""

    time: float
    state: np.ndarray
    marked: np.ndarray
    recovery: bool = False


@dataclass
class RunRecord:
    """Outcome of :func:`simulate`.

    Attributes
    ----------
    state : final site states
    birth_time, burn_time : first occupation / first burn per site (inf if never)
    ignition_time, ignition_vertex : every trigger, including those that burn nothing
    fire_time, fire_trigger, fire_size : one entry per fire that burnt >= 1 site
    fire_ptr, fire_sites : CSR list of the sites burnt by each fire
    snapshots : ``{t: states}`` at the observer times
    violations : counters of the debug invariant scans
    """

    spec: ProcessSpec
    seed: int
    replica: int
    state: np.ndarray
    birth_time: np.ndarray
    burn_time: np.ndarray
    ignition_time: np.ndarray
    ignition_vertex: np.ndarray
    fire_time: np.ndarray
    fire_trigger: np.ndarray
    fire_size: np.ndarray
    fire_ptr: np.ndarray
    fire_sites: np.ndarray
    snapshots: dict
    violations: dict
    t_end: float
    _mark_cache: dict = field(default_factory=dict, repr=False)

    @property
    def domain(self) -> Domain:
        return self.spec.domain

    def fire_log(self):
        """``[(t, trigger_site, size, site_ids)]`` in time order."""
        boundary = self.spec.boundary_sites()
        return [
            (
                float(self.fire_time[f]),
                boundary[int(self.fire_trigger[f])],
                int(self.fire_size[f]),
                self.fire_sites[self.fire_ptr[f] : self.fire_ptr[f + 1]],
            )
            for f in range(len(self.fire_time))
        ]

    def triggered_by(self, t: float) -> list:
        boundary = self.spec.boundary_sites()
        idx = sorted(set(self.ignition_vertex[self.ignition_time <= t].tolist()))
        return [boundary[i] for i in idx]

    def marks(self, t: float) -> np.ndarray:
        """Fire marks: sites burnt by some trigger at time ``<= t``."""
        return self.burn_time <= t

    def snapshot(self, t: float) -> DynState:
        if t not in self.snapshots:
            raise KeyError(f"no snapshot retained at t={t}")
        return DynState(t, self.snapshots[t], self.marks(t), self.spec.recovery)

    def pure_birth_occupied(self, t: float) -> np.ndarray:
        """Occupation at ``t`` of the fire-free process driven by the same clocks."""
        if t > self.spec.horizon:
            raise ValueError("time beyond the simulated horizon")
        return self.birth_time <= t

    def pure_birth_mark_time(self, tmax: float) -> np.ndarray:
        """Time each site first carries a pure-birth mark (inf if not by ``tmax``)."""
        if tmax > self.spec.horizon:
            raise ValueError("time beyond the simulated horizon")
        if tmax not in self._mark_cache:
            spec = self.spec
            bptr, badj, touch = spec.arrays()
            if math.isinf(spec.zeta):
                mark = fire.infinite_zeta_marks(self.domain.nbr, touch, self.birth_time, float(tmax))
            else:
                target = np.zeros(self.domain.size, dtype=bool)
                mark, _ = fire.pure_birth_marks(
                    self.domain.nbr,
                    bptr,
                    badj,
                    self.birth_time,
                    self.ignition_time,
                    self.ignition_vertex,
                    float(tmax),
                    target,
                    False,
                )
            self._mark_cache[tmax] = mark
        return self._mark_cache[tmax]

    def pure_birth_marks(self, t: float) -> np.ndarray:
        return self.pure_birth_mark_time(t) <= t


def _key(name: str):
    return as_u64(key_of(name))


def simulate(
    spec: ProcessSpec,
    seed: int = 0,
    observers=(),
    replica: int = 0,
    debug: bool = False,
    name: str = "forest-fire",
) -> RunRecord:
    """Run one trajectory of the process.

    Parameters
    ----------
    spec : ProcessSpec
    seed : int
        Master seed; together with ``name`` and ``replica`` it fixes all clocks.
    observers : sequence of float
        Times at which to retain a full snapshot (must not exceed the horizon).
    debug : bool
        Scan for invariant violations after every event (slow).
    """
    obs = np.array(sorted(float(t) for t in observers), dtype=np.float64)
    if obs.size and (obs[0] < 0 or obs[-1] > spec.horizon):
        raise ValueError("observer times must lie in [0, horizon]")
    bptr, badj, touch = spec.arrays()
    res = fire.run_process(
        spec.domain.nbr,
        bptr,
        badj,
        touch,
        spec.zeta,
        spec.recovery,
        float(spec.horizon),
        as_u64(seed),
        _key(name),
        int(replica),
        obs,
        -1,
        True,
        bool(debug),
    )
    (st, birth, burn, ign_t, ign_b, fire_t, fire_b, fire_size, fire_ptr, fire_sites, snaps, viol, _, t_end) = res
    return RunRecord(
        spec=spec,
        seed=int(seed),
        replica=int(replica),
        state=st,
        birth_time=birth,
        burn_time=burn,
        ignition_time=ign_t,
        ignition_vertex=ign_b,
        fire_time=fire_t,
        fire_trigger=fire_b,
        fire_size=fire_size,
        fire_ptr=fire_ptr,
        fire_sites=fire_sites,
        snapshots={float(t): snaps[i] for i, t in enumerate(obs)},
        violations={
            "monotone": int(viol[fire.VIOLATION_MONOTONE]),
            "atomic": int(viol[fire.VIOLATION_ATOMIC]),
            "infinite_zeta": int(viol[fire.VIOLATION_INFINITE]),
        },
        t_end=float(t_end),
    )


def eventual_burn_closure(final) -> np.ndarray:
    """Sites that are burnt or will surely burn (no-recovery runs only).

    ``final`` is a :class:`RunRecord`, or a ``(spec, states)`` pair.  Every
    occupied cluster adjacent to the ignition boundary is eventually hit.
    """
    if isinstance(final, RunRecord):
        spec, st = final.spec, final.state
    else:
        spec, st = final
    if spec.recovery:
        raise ValueError("eventual burning is undefined with recovery")
    st = np.asarray(st, dtype=np.int8)
    if np.any(st == VACANT):
        raise ValueError("closure needs a state without vacant sites")
    bptr, badj, _ = spec.arrays()
    return fire.eventual_closure(spec.domain.nbr, bptr, badj, st)


# --------------------------------------------------------------------------
# experiments


def origin_burn_experiment(
    N: int,
    zeta,
    variant: str = NO_RECOVERY,
    replicas: int = 1000,
    seed: int = 0,
    time_probe: float | None = None,
    threads: int | None = None,
) -> Estimate:
    """Probability that the centre of the hexagon of radius ``N`` burns.

    Without recovery: eventually (through the closure).  With recovery: by
    ``time_probe``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if (variant == RECOVERY) != (time_probe is not None):
        raise ValueError("time_probe is required exactly for the recovery variant")
    horizon = math.inf if time_probe is None else float(time_probe)
    spec = ProcessSpec(build_domain(Hexagon(N)), variant, zeta, horizon)
    return _site_burn_estimate(spec, Site(0, 0), replicas, seed, threads, "origin-burn")


def _site_burn_estimate(spec, site, replicas, seed, threads, name):
    bptr, badj, touch = spec.arrays()
    i = spec.domain.index(site)
    s, key = as_u64(seed), _key(name)
    out = run_blocks(
        lambda r0, r1: fire.origin_burn_replicas(
            spec.domain.nbr, bptr, badj, touch, spec.zeta, spec.recovery, float(spec.horizon), i, s, key, r0, r1
        ),
        replicas,
        threads,
    )
    return Estimate.from_outcomes(out, seed)


def site_burn_probability(spec: ProcessSpec, site, replicas: int, seed: int = 0, threads=None) -> Estimate:
    """Monte Carlo counterpart of :func:`exact_small_ctmc` queries.

    Without recovery and with an infinite horizon: eventually burnt.
    Otherwise: burnt by ``spec.horizon``.
    """
    return _site_burn_estimate(spec, Site(*site), replicas, seed, threads, "site-burn")


def long_path_reaches(zeta, nmax: float, replicas: int, seed: int = 0, threads=None) -> np.ndarray:
    """Per replica: reach of the origin's half-plane arm at its last trigger before ``T_C``."""
    z = parse_zeta(zeta)
    s, key = as_u64(seed), _key("long-path")
    return run_blocks(
        lambda r0, r1: lazy.long_path_replicas(z, 2.0, T_C, float(nmax), s, key, r0, r1), replicas, threads
    )


def long_path_experiment(n: int, zeta, replicas: int, seed: int = 0, strip=None, threads=None) -> Estimate:
    """Probability that a lower neighbour of the origin triggers by ``T_C`` while
    the origin has an occupied half-plane arm to distance ``n``.

    The origin is the bottom-centre site of a half-plane strip at least ``6n``
    wide and ``2n`` high; the arm lives inside ``B_n``, well clear of the
    inert side and top walls, so the strip never has to be materialised.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if strip is not None:
        kind = strip.kind if isinstance(strip, Domain) else strip
        if not isinstance(kind, HalfPlaneStrip) or kind.width < 6 * n or kind.height < 2 * n:
            raise ValueError("strip too small: need width >= 6n and height >= 2n")
    reach = long_path_reaches(zeta, float(n), replicas, seed, threads)
    return Estimate.from_outcomes(reach >= n, seed)


def long_path_curve(ns, zeta, replicas: int, seed: int = 0, threads=None):
    reach = long_path_reaches(zeta, float(max(ns)), replicas, seed, threads)
    return [Estimate.from_outcomes(reach >= n, seed) for n in ns]


def fire_depth_target(domain: Domain, N: int, delta: float) -> np.ndarray:
    radius = math.floor(N - N ** (1.0 - delta))
    coords = domain.coords
    dist = (np.abs(coords[:, 0]) + np.abs(coords[:, 1]) + np.abs(coords[:, 0] + coords[:, 1])) // 2
    return dist <= radius


def fire_depth_experiment(
    N: int, zeta, delta: float, beta: float, replicas: int, seed: int = 0, threads=None
) -> Estimate:
    """Probability that a pure-birth mark enters the inner hexagon by ``T_C + N**-beta``.

    The inner hexagon has graph radius ``floor(N - N**(1 - delta))``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < delta < 1.0 / 13.0:
        raise ValueError("delta must lie in (0, 1/13)")
    if not beta > 0.75 * (1.0 - delta):
        raise ValueError("beta must exceed 3/4 (1 - delta)")
    z = parse_zeta(zeta)
    dom = build_domain(Hexagon(N))
    spec = ProcessSpec(dom, NO_RECOVERY, z)
    bptr, badj, touch = spec.arrays()
    target = fire_depth_target(dom, N, delta)
    tmax = T_C + N ** (-beta)
    s, key = as_u64(seed), _key("fire-depth")
    out = run_blocks(
        lambda r0, r1: fire.fire_depth_replicas(dom.nbr, bptr, badj, touch, z, tmax, target, s, key, r0, r1),
        replicas,
        threads,
    )
    return Estimate.from_outcomes(out, seed)


def bounded_cluster_sizes(strip: Domain, v, zeta, horizon: float, replicas: int, seed: int = 0, threads=None):
    """Per replica: the largest size reached by the occupied cluster of ``v`` up to ``horizon``."""
    i = strip.index(v)
    if i < 0:
        raise ValueError("v is not in the strip")
    spec = ProcessSpec(strip, NO_RECOVERY, zeta, horizon, tuple(strip.bottom_outer_boundary()))
    bptr, badj, touch = spec.arrays()
    s, key = as_u64(seed), _key("bounded-cluster")
    return run_blocks(
        lambda r0, r1: fire.watched_cluster_replicas(
            strip.nbr, bptr, badj, touch, spec.zeta, float(horizon), i, s, key, r0, r1
        ),
        replicas,
        threads,
    )


def bounded_cluster_experiment(
    strip: Domain, v, zeta, horizon: float, L_grid, replicas: int, seed: int = 0, threads=None
):
    """``[(L, Estimate of P(max cluster of v <= L))]`` for each ``L`` in ``L_grid``.

    Ignitions come only from the row below the strip; the other walls are inert.
    """
    sizes = bounded_cluster_sizes(strip, v, zeta, horizon, replicas, seed, threads)
    return [(int(L), Estimate.from_outcomes(sizes <= L, seed)) for L in L_grid]
