"""Static Bernoulli site percolation on the triangular lattice.

Two evaluation routes are provided:

* finite domains (:func:`sample`, :func:`evaluate_event`,
  :func:`estimate_event`): a configuration covers every site of a
  :class:`~boundfire.lattice.Domain` and events are decided by graph search on
  its neighbour table;
* the unbounded lattice (arm curves, :func:`characteristic_length`,
  :func:`theta_proxy`): sites are sampled on demand while a search explores
  them, so the cost follows the explored cluster rather than the window.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import lattice
from .analysis import binomial_ci
from .kernels import graph, lazy
from .lattice import Annulus, Ball, ConeSection, Domain, Rectangle, Site, norm2
from .parallel import run_blocks
from .rng import STREAM_SAMPLE, as_u64, key_of, make_state

CRITICAL_P = 0.5
CHAR_THRESHOLD = 1e-3


class _AboveCap:
    """Sentinel for a characteristic length beyond the search cap."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "AboveCap"

    def __reduce__(self):
        return (_AboveCap, ())


AboveCap = _AboveCap()


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo frequency with a 95% Wilson interval."""

    p_hat: float
    replicas: int
    ci_low: float
    ci_high: float
    seed: int
    successes: int = 0

    @classmethod
    def from_outcomes(cls, outcomes, seed: int, level: float = 0.95) -> "Estimate":
        outcomes = np.asarray(outcomes, dtype=bool)
        k = int(outcomes.sum())
        n = int(outcomes.size)
        lo, hi = binomial_ci(k, n, level)
        return cls(k / n, n, lo, hi, int(seed), k)

    @classmethod
    def from_counts(cls, successes: int, replicas: int, seed: int, level: float = 0.95) -> "Estimate":
        lo, hi = binomial_ci(successes, replicas, level)
        return cls(successes / replicas, replicas, lo, hi, int(seed), successes)

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.p_hat * (1.0 - self.p_hat), 1e-300) / self.replicas)


@dataclass(frozen=True)
class Configuration:
    domain: Domain
    state: np.ndarray

    def __post_init__(self):
        state = np.asarray(self.state, dtype=bool)
        if state.shape != (self.domain.size,):
            raise ValueError("state must hold one entry per domain site")
        object.__setattr__(self, "state", state)

    def occupied(self, site) -> bool:
        i = self.domain.index(site)
        if i < 0:
            raise KeyError(site)
        return bool(self.state[i])


def sample(domain: Domain, p: float, rng=0) -> Configuration:
    """Bernoulli(p) configuration on ``domain``.

    ``rng`` is either a stream state from :func:`boundfire.rng.make_state`
    (advanced in place) or an integer seed.  Site ``i`` is occupied iff the
    ``i``-th uniform of the stream is below ``p``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not isinstance(rng, np.ndarray):
        rng = make_state(int(rng), key_of("sample"), 0, STREAM_SAMPLE)
    state = np.zeros(domain.size, dtype=np.int8)
    graph.sample_state(rng, float(p), state)
    return Configuration(domain, state.astype(bool))


# --------------------------------------------------------------------------
# events


def _check_radius(*radii):
    for r in radii:
        if not (isinstance(r, (int, float, np.integer, np.floating)) and r >= 0 and math.isfinite(r)):
            raise ValueError(f"invalid radius {r!r}")


@dataclass(frozen=True)
class _Crossing:
    """Crossing of ``rect`` (or of the whole domain when ``rect`` is None).

    Sides are read per row: left/right are the sites with the smallest and
    largest ``x`` of each row, bottom/top are the lowest and highest rows.
    """

    rect: Rectangle | None = None
    horizontal = True
    color = 1


class HCross(_Crossing):
    horizontal = True
    color = 1


class VCross(_Crossing):
    horizontal = False
    color = 1


class HCrossVacant(_Crossing):
    horizontal = True
    color = 0


class VCrossVacant(_Crossing):
    horizontal = False
    color = 0


@dataclass(frozen=True)
class OccCircuit:
    """Occupied circuit surrounding the centre inside an annulus."""

    annulus: Annulus
    color = 1

    def __post_init__(self):
        _check_radius(self.annulus.n1, self.annulus.n2)
        if not self.annulus.n1 < self.annulus.n2:
            raise ValueError("annulus needs n1 < n2")


@dataclass(frozen=True)
class VacCircuit(OccCircuit):
    color = 0


@dataclass(frozen=True)
class OneArmCone:
    """Occupied arm inside a cone section; anchored at the apex when ``n1 == 0``."""

    apex: Site
    alpha: float
    n1: float
    n2: float

    def __post_init__(self):
        _check_radius(self.n1, self.n2)
        if not self.n1 < self.n2:
            raise ValueError("cone section needs n1 < n2")
        if not 0.0 < self.alpha <= 0.5 * math.pi + 1e-12:
            raise ValueError("cone half-angle must lie in (0, pi/2]")

    @property
    def section(self) -> ConeSection:
        return ConeSection(Site(*self.apex), self.alpha, self.n1, self.n2)


@dataclass(frozen=True)
class FourArm:
    """Alternating occupied/vacant/occupied/vacant arms from the centre to radius ``n``."""

    center: Site
    n: float

    def __post_init__(self):
        _check_radius(self.n)
        if self.n <= 1:
            raise ValueError("four-arm radius must exceed 1")


EventSpec = _Crossing | OccCircuit | OneArmCone | FourArm


def _ring_has(coords, center, pred):
    """Mask: site has a neighbour ``w`` with ``pred(norm2(w - center))``."""
    out = np.zeros(len(coords), dtype=bool)
    for du, dv in lattice.NEIGHBOR_OFFSETS:
        out |= pred(norm2(coords[:, 0] + du - center[0], coords[:, 1] + dv - center[1]))
    return out


def _require_inside(domain: Domain, sites, what: str):
    missing = [s for s in sites if s not in domain]
    if missing:
        raise ValueError(f"{what} is not contained in the domain (e.g. {missing[0]})")


def _plane_sites(center, radius):
    r = int(math.ceil(radius * 2.0 / math.sqrt(3.0))) + 1
    u, v = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    return np.stack([u.ravel() + center[0], v.ravel() + center[1]], axis=1)


@functools.lru_cache(maxsize=256)
def _compile(event, domain: Domain):
    """Reduce an event to ``(mode, color, region, src, dst)`` masks on ``domain``."""
    coords = domain.coords
    k = domain.size
    if isinstance(event, _Crossing):
        if event.rect is None:
            region = np.ones(k, dtype=bool)
        else:
            xy = domain.xy
            r = event.rect
            eps = 1e-9
            region = (
                (xy[:, 0] >= r.x1 - eps)
                & (xy[:, 0] <= r.x2 + eps)
                & (xy[:, 1] >= r.y1 - eps)
                & (xy[:, 1] <= r.y2 + eps)
            )
            _require_inside(domain, [tuple(s) for s in r.coords()], "crossing rectangle")
        ids = np.flatnonzero(region)
        src = np.zeros(k, dtype=bool)
        dst = np.zeros(k, dtype=bool)
        if ids.size:
            rows = coords[ids, 1]
            if event.horizontal:
                for v in np.unique(rows):
                    row = ids[rows == v]
                    src[row[np.argmin(coords[row, 0])]] = True
                    dst[row[np.argmax(coords[row, 0])]] = True
            else:
                src[ids[rows == rows.min()]] = True
                dst[ids[rows == rows.max()]] = True
        return graph.MODE_CONNECT, event.color, region, src, dst
    if isinstance(event, OccCircuit):
        a = event.annulus
        plane = _plane_sites(a.center, a.n2)
        _require_inside(domain, [tuple(s) for s in plane[a.mask(plane)]], "annulus")
        region = a.mask(coords)
        src = region & _ring_has(coords, a.center, lambda d2: d2 <= a.n1 * a.n1)
        dst = region & _ring_has(coords, a.center, lambda d2: d2 >= a.n2 * a.n2)
        # a circuit of one colour exists iff no crossing of the other colour does
        return graph.MODE_NOT_CONNECT, 1 - event.color, region, src, dst
    if isinstance(event, OneArmCone):
        sec = event.section
        plane = _plane_sites(sec.apex, sec.n2)
        _require_inside(domain, [tuple(s) for s in plane[sec.mask(plane)]], "cone section")
        region = sec.mask(coords)
        if event.n1 == 0:
            src = np.zeros(k, dtype=bool)
            src[domain.index(sec.apex)] = True
        else:
            src = region & _ring_has(coords, sec.apex, lambda d2: d2 <= event.n1 * event.n1)
        dst = region & _ring_has(coords, sec.apex, lambda d2: d2 >= event.n2 * event.n2)
        return graph.MODE_CONNECT, 1, region, src, dst
    if isinstance(event, FourArm):
        ball = Ball(Site(*event.center), event.n)
        plane = _plane_sites(event.center, event.n)
        _require_inside(domain, [tuple(s) for s in plane[ball.mask(plane)]], "four-arm ball")
        c = event.center
        d2c = norm2(coords[:, 0] - c[0], coords[:, 1] - c[1])
        region = ball.mask(coords) & (d2c > 0)
        src = region & (d2c == 1)
        dst = region & _ring_has(coords, c, lambda d2: d2 >= event.n * event.n)
        # two separate occupied clusters joining the ring to distance n are
        # equivalent to four alternating arms (the vacant arms separate them)
        return graph.MODE_TWO_CLUSTERS, 1, region, src, dst
    raise TypeError(f"unknown event {event!r}")


def evaluate_event(config: Configuration, event) -> bool:
    """Does ``event`` occur in ``config``?"""
    mode, color, region, src, dst = _compile(event, config.domain)
    state = config.state.astype(np.int8)
    return bool(graph.evaluate(config.domain.nbr, state, mode, color, region, src, dst))


def estimate_event(
    event, domain: Domain, p: float, replicas: int, seed: int = 0, threads: int | None = None
) -> Estimate:
    """Frequency of ``event`` over ``replicas`` Bernoulli(p) configurations.

    Replica ``r`` samples from the stream keyed by ``(seed, r)``; equal seeds
    couple different ``p`` monotonically.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    mode, color, region, src, dst = _compile(event, domain)
    s, key = as_u64(seed), as_u64(key_of("perc-event"))
    out = run_blocks(
        lambda r0, r1: graph.estimate_replicas(
            domain.nbr, float(p), mode, color, region, src, dst, s, key, r0, r1
        ),
        replicas,
        threads,
    )
    return Estimate.from_outcomes(out, seed)


# --------------------------------------------------------------------------
# unbounded-lattice estimators


def _section_sources(alpha: float, n1: float) -> np.ndarray:
    if n1 <= 0:
        return np.zeros((1, 2), dtype=np.int64)
    sec = ConeSection(lattice.ORIGIN, alpha, n1, n1 + 2.0)
    plane = _plane_sites((0, 0), n1 + 2.0)
    keep = sec.mask(plane) & _ring_has(plane, (0, 0), lambda d2: d2 <= n1 * n1)
    return np.ascontiguousarray(plane[keep])


def arm_reaches(
    nmax: float,
    replicas: int,
    seed: int = 0,
    p: float = CRITICAL_P,
    alpha: float | None = None,
    n1: float = 0.0,
    threads: int | None = None,
    name: str = "one-arm",
) -> np.ndarray:
    """Per-replica reach of the occupied cluster from the origin (or a cone section).

    ``alpha=None`` explores the full plane; otherwise the closed cone of
    half-angle ``alpha`` above the origin, cut to ``|x| > n1`` when ``n1 > 0``.
    The one-arm event to radius ``n <= nmax`` holds iff the reach is ``>= n``.
    """
    if alpha is None:
        kind, slope = lazy.REGION_PLANE, math.inf
        sources = np.zeros((1, 2), dtype=np.int64)
    else:
        kind = lazy.REGION_SECTION if n1 > 0 else lazy.REGION_CONE
        slope = lattice.cone_slope(alpha)
        sources = _section_sources(alpha, n1)
    s, key = as_u64(seed), as_u64(key_of(name))
    return run_blocks(
        lambda r0, r1: lazy.arm_reach_replicas(
            float(p), float(nmax), kind, slope, float(n1), sources, s, key, r0, r1
        ),
        replicas,
        threads,
    )


def one_arm_curve(ns, replicas: int, seed: int = 0, p: float = CRITICAL_P, alpha=None, n1=0.0, threads=None):
    """Estimates of the one-arm probability for each radius in ``ns``.

    Radii share one sample.  For a cone section a starting site may itself lie
    at distance up to ``n1 + 1``, so radii ``n <= n1 + 1`` get their own run
    with the exploration cut at ``n`` (which drops such starting sites).
    """
    ns = [float(n) for n in ns]
    near = [n for n in ns if n1 > 0 and n <= n1 + 1.0]
    far = [n for n in ns if n not in near]
    out = {}
    if far:
        reach = arm_reaches(max(far), replicas, seed, p, alpha, n1, threads)
        out.update({n: Estimate.from_outcomes(reach >= n, seed) for n in far})
    for n in near:
        reach = arm_reaches(n, replicas, seed, p, alpha, n1, threads)
        out[n] = Estimate.from_outcomes(reach >= n, seed)
    return [out[n] for n in ns]


def four_arm_reaches(nmax: float, replicas: int, seed: int = 0, p: float = CRITICAL_P, threads=None):
    """Per-replica largest radius carrying four alternating arms around the origin."""
    s, key = as_u64(seed), as_u64(key_of("four-arm"))
    return run_blocks(
        lambda r0, r1: lazy.four_arm_replicas(float(p), float(nmax), s, key, r0, r1), replicas, threads
    )


def four_arm_curve(ns, replicas: int, seed: int = 0, p: float = CRITICAL_P, threads=None):
    ns = [float(n) for n in ns]
    reach = four_arm_reaches(max(ns), replicas, seed, p, threads)
    return [Estimate.from_outcomes(reach >= n, seed) for n in ns]


@functools.lru_cache(maxsize=None)
def cone_arm_probability(alpha: float, n: float, replicas: int = 100_000, seed: int = 0, n1: float = 0.0) -> Estimate:
    """Cached critical cone one-arm estimate, shared by normalisations."""
    if n <= n1:
        return Estimate(1.0, replicas, 1.0, 1.0, seed, replicas)
    alpha_arg = None if alpha is None else float(alpha)
    return one_arm_curve([n], replicas, seed, CRITICAL_P, alpha_arg, n1)[0]


@functools.lru_cache(maxsize=None)
def four_arm_probability(n: float, replicas: int = 100_000, seed: int = 0) -> Estimate:
    return four_arm_curve([n], replicas, seed)[0]


def near_critical_parameter(n: float, lam: float, replicas: int = 100_000, seed: int = 0, pi4=None) -> float:
    """``1/2 + lam / (n^2 * pi4(n))`` clamped to ``[0, 1]``.

    ``pi4`` may be supplied (a float or Estimate); otherwise it is estimated
    at ``p = 1/2`` and cached.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if lam == 0:
        return CRITICAL_P
    if pi4 is None:
        pi4 = four_arm_probability(float(n), replicas, seed)
    value = pi4.p_hat if hasattr(pi4, "p_hat") else float(pi4)
    if value <= 0:
        return 1.0 if lam > 0 else 0.0
    return min(1.0, max(0.0, CRITICAL_P + lam / (n * n * value)))


def theta_proxy(p: float, n: float, replicas: int, seed: int = 0, threads=None) -> Estimate:
    """Probability that the origin is joined to distance ``n`` by occupied sites."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s, key = as_u64(seed), as_u64(key_of("theta"))
    out = run_blocks(
        lambda r0, r1: lazy.connects_far_replicas(float(p), float(n), s, key, r0, r1), replicas, threads
    )
    return Estimate.from_outcomes(out, seed)


def rectangle_crossing(p: float, n: int, replicas: int, seed: int = 0, threads=None, start: int = 0) -> Estimate:
    """Vertical occupied crossing of ``[0, 2n] x [0, n]``."""
    s, key = as_u64(seed), as_u64(key_of("char-length"))
    out = run_blocks(
        lambda r0, r1: lazy.rect_vertical_replicas(float(p), 2.0 * n, float(n), s, key, r0, r1),
        replicas,
        threads,
        start=start,
    )
    return Estimate.from_outcomes(out, seed)


def _below_threshold(p, n, seed, max_replicas, block, threads, threshold):
    """Sequential test of ``P(crossing) <= threshold`` at side ``n``.

    Adds blocks of replicas until the Wilson interval lies on one side of the
    threshold.  Returns ``(qualifies, successes, replicas)``; running out of
    replicas counts as not qualifying.
    """
    s, key = as_u64(seed), as_u64(key_of("char-length"))
    hits = 0
    done = 0
    while done < max_replicas:
        step = min(block, max_replicas - done)
        out = run_blocks(
            lambda r0, r1: lazy.rect_vertical_replicas(float(p), 2.0 * n, float(n), s, key, r0, r1),
            step,
            threads,
            block=max(1, step),
            start=done,
        )
        hits += int(out.sum())
        done += step
        lo, hi = binomial_ci(hits, done)
        if hi <= threshold:
            return True, hits, done
        if lo > threshold:
            return False, hits, done
    return False, hits, done


def characteristic_length(
    p: float,
    cap: int = 2048,
    max_replicas: int = 60_000,
    seed: int = 0,
    start: int = 4,
    growth: float = 1.25,
    block: int = 4000,
    threads: int | None = None,
    threshold: float = CHAR_THRESHOLD,
    trace: list | None = None,
):
    """Smallest ``n <= cap`` whose crossing probability is safely ``<= threshold``.

    The vertical crossing of ``[0, 2n] x [0, n]`` is tested at ``p`` (or at
    ``1 - p`` above 1/2).  Sides grow geometrically by ``growth`` until one
    qualifies, then bisection locates the smallest qualifying side between the
    last failure and the first success.  ``trace`` collects
    ``(n, qualifies, successes, replicas)`` tuples.

    Returns
    -------
    int or AboveCap
    """
    if p == CRITICAL_P:
        return AboveCap
    q = p if p < CRITICAL_P else 1.0 - p

    def test(n):
        res = _below_threshold(q, n, seed, max_replicas, block, threads, threshold)
        if trace is not None:
            trace.append((n, *res))
        return res[0]

    lo = 0
    n = max(1, int(start))
    while True:
        if n > cap:
            if lo >= cap or not test(cap):
                return AboveCap
            n = cap
            break
        if test(n):
            break
        lo = n
        n = max(n + 1, int(math.ceil(n * growth)))
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if test(mid):
            hi = mid
        else:
            lo = mid
    return hi
