"""Percolation kernels on the unbounded lattice with on-demand site sampling.

Sites live in a square axial grid centred on the origin.  A site is sampled
the first time an exploration touches it in the current replica (tracked by
``stamp``), so the cost of a replica is the size of what is explored rather
than the area of the window.

Arm kernels return a *reach*: the largest Euclidean norm among the neighbours
of the explored cluster.  The one-arm event to radius ``n`` holds iff
``reach >= n``, which gives the whole curve ``n -> pi_1(n)`` from one sample.
"""

import math

import numpy as np

from .._jit import njit
from ..rng import STREAM_IGNITE, STREAM_SAMPLE, exponential, seed_stream, uniform
from .heap import heap_pop, heap_push

_DU = np.array([1, -1, 0, 0, 1, -1], dtype=np.int64)
_DV = np.array([0, 0, 1, -1, -1, 1], dtype=np.int64)
# counterclockwise ring around a site
_RU = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)
_RV = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)

REGION_PLANE = 0
REGION_CONE = 1
REGION_SECTION = 2


@njit
def _window(radius):
    # |u| can reach 2/sqrt(3) times the Euclidean norm (e.g. u = -2v)
    return int(math.ceil(radius * 2.0 / math.sqrt(3.0))) + 3


@njit
def _occ(state, stamp, tag, rng, p, iu, iv):
    if stamp[iu, iv] != tag:
        stamp[iu, iv] = tag
        state[iu, iv] = 1 if uniform(rng) < p else 0
    return state[iu, iv]


@njit
def _in_region(u, v, kind, slope, n1sq, nmaxsq):
    d2 = u * u + u * v + v * v
    if d2 >= nmaxsq:
        return False
    if kind == REGION_PLANE:
        return True
    if v < 0:
        return False
    if v == 0:
        if u != 0 and slope != np.inf:
            return False
    elif slope != np.inf and abs(2 * u + v) > slope * v * (1.0 + 1e-9):
        return False
    if kind == REGION_SECTION and d2 <= n1sq:
        return False
    return True


@njit
def arm_reach_core(state, stamp, visit, tag, rng, p, off, kind, slope, n1sq, nmaxsq, sources, stack):
    """Reach of the occupied cluster grown from ``sources`` inside the region."""
    sp = 0
    best = 0
    for s in range(sources.shape[0]):
        u = sources[s, 0]
        v = sources[s, 1]
        if not _in_region(u, v, kind, slope, n1sq, nmaxsq):
            continue
        iu = u + off
        iv = v + off
        if visit[iu, iv] == tag:
            continue
        visit[iu, iv] = tag
        if _occ(state, stamp, tag, rng, p, iu, iv) == 1:
            stack[sp] = u
            stack[sp + 1] = v
            sp += 2
    while sp > 0:
        sp -= 2
        u = stack[sp]
        v = stack[sp + 1]
        for j in range(6):
            wu = u + _DU[j]
            wv = v + _DV[j]
            d2 = wu * wu + wu * wv + wv * wv
            if d2 > best:
                best = d2
            if not _in_region(wu, wv, kind, slope, n1sq, nmaxsq):
                continue
            iu = wu + off
            iv = wv + off
            if visit[iu, iv] == tag:
                continue
            visit[iu, iv] = tag
            if _occ(state, stamp, tag, rng, p, iu, iv) == 1:
                stack[sp] = wu
                stack[sp + 1] = wv
                sp += 2
    return math.sqrt(best)


@njit
def arm_reach_replicas(p, nmax, kind, slope, n1, sources, seed, key, r0, r1):
    off = _window(nmax)
    g = 2 * off + 1
    state = np.zeros((g, g), dtype=np.int8)
    stamp = np.zeros((g, g), dtype=np.int32)
    visit = np.zeros((g, g), dtype=np.int32)
    stack = np.empty(2 * g * g + 2 * sources.shape[0], dtype=np.int64)
    rng = np.zeros(4, dtype=np.uint64)
    out = np.zeros(r1 - r0, dtype=np.float64)
    nmaxsq = nmax * nmax
    n1sq = n1 * n1
    for r in range(r0, r1):
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        tag = r - r0 + 1
        out[r - r0] = arm_reach_core(
            state, stamp, visit, tag, rng, p, off, kind, slope, n1sq, nmaxsq, sources, stack
        )
    return out


@njit
def connects_far_core(state, stamp, visit, tag, rng, p, off, nsq, keys, vals):
    """Best-first search: does the origin's cluster reach distance ``sqrt(nsq)``?"""
    g = state.shape[0]
    if _occ(state, stamp, tag, rng, p, off, off) == 0:
        return False
    visit[off, off] = tag
    size = heap_push(keys, vals, 0, 0.0, off * g + off)
    while size > 0:
        _, code, size = heap_pop(keys, vals, size)
        iu = code // g
        iv = code - iu * g
        u = iu - off
        v = iv - off
        for j in range(6):
            wu = u + _DU[j]
            wv = v + _DV[j]
            d2 = wu * wu + wu * wv + wv * wv
            if d2 >= nsq:
                return True
            ju = wu + off
            jv = wv + off
            if visit[ju, jv] == tag:
                continue
            visit[ju, jv] = tag
            if _occ(state, stamp, tag, rng, p, ju, jv) == 1:
                size = heap_push(keys, vals, size, -float(d2), ju * g + jv)
    return False


@njit
def connects_far_replicas(p, n, seed, key, r0, r1):
    off = _window(n)
    g = 2 * off + 1
    state = np.zeros((g, g), dtype=np.int8)
    stamp = np.zeros((g, g), dtype=np.int32)
    visit = np.zeros((g, g), dtype=np.int32)
    keys = np.empty(g * g, dtype=np.float64)
    vals = np.empty(g * g, dtype=np.int64)
    rng = np.zeros(4, dtype=np.uint64)
    out = np.zeros(r1 - r0, dtype=np.bool_)
    for r in range(r0, r1):
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        out[r - r0] = connects_far_core(state, stamp, visit, r - r0 + 1, rng, p, off, n * n, keys, vals)
    return out


@njit
def rect_vertical_core(state, stamp, tag, rng, p, vmax, x2max, stack):
    """Occupied bottom-to-top crossing of the rows ``0..vmax`` with ``0 <= 2u+v <= x2max``.

    Grid index is ``(u + vmax // 2 + 1, v)``.
    """
    uo = vmax // 2 + 1
    sp = 0
    for u in range(0, x2max // 2 + 1):
        iu = u + uo
        stamp[iu, 0] = tag
        if uniform(rng) < p:
            state[iu, 0] = 1
            if vmax == 0:
                return True
            stack[sp] = iu
            stack[sp + 1] = 0
            sp += 2
        else:
            state[iu, 0] = 0
    while sp > 0:
        sp -= 2
        iu = stack[sp]
        iv = stack[sp + 1]
        for j in range(6):
            jv = iv + _DV[j]
            if jv < 0 or jv > vmax:
                continue
            ju = iu + _DU[j]
            x2 = 2 * (ju - uo) + jv
            if x2 < 0 or x2 > x2max:
                continue
            if stamp[ju, jv] == tag:
                continue
            stamp[ju, jv] = tag
            if uniform(rng) < p:
                state[ju, jv] = 1
                if jv == vmax:
                    return True
                stack[sp] = ju
                stack[sp + 1] = jv
                sp += 2
            else:
                state[ju, jv] = 0
    return False


@njit
def rect_vertical_replicas(p, width, height, seed, key, r0, r1):
    """Vertical occupied crossings of ``([0, width] x [0, height]) ∩ V``."""
    vmax = int(math.floor(height / (0.5 * math.sqrt(3.0)) + 1e-9))
    x2max = int(math.floor(2.0 * width + 1e-9))
    gw = x2max // 2 + vmax // 2 + 4
    state = np.zeros((gw, vmax + 1), dtype=np.int8)
    stamp = np.zeros((gw, vmax + 1), dtype=np.int32)
    stack = np.empty(2 * gw * (vmax + 1) + 2, dtype=np.int64)
    rng = np.zeros(4, dtype=np.uint64)
    out = np.zeros(r1 - r0, dtype=np.bool_)
    for r in range(r0, r1):
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        out[r - r0] = rect_vertical_core(state, stamp, r - r0 + 1, rng, p, vmax, x2max, stack)
    return out


@njit
def four_arm_core(state, stamp, tag, rng, p, off, nmaxsq, reach2):
    """Largest radius with four alternating arms around the origin.

    Each colour change between consecutive neighbours of the origin starts an
    occupied/vacant interface.  Tracing it outward until it returns to the
    origin (or leaves the window) gives the largest norm it touches; four
    alternating arms to radius ``n`` exist iff at least four of these traces
    reach ``n``.  Returns the fourth largest reach, or 0.
    """
    col = np.zeros(6, dtype=np.int8)
    for i in range(6):
        col[i] = _occ(state, stamp, tag, rng, p, _RU[i] + off, _RV[i] + off)
    m = 0
    for i in range(6):
        j = (i + 1) % 6
        if col[i] == col[j]:
            continue
        if col[i] == 1:
            au, av, bu, bv = _RU[i], _RV[i], _RU[j], _RV[j]
        else:
            au, av, bu, bv = _RU[j], _RV[j], _RU[i], _RV[i]
        cu = 0
        cv = 0
        best = 1
        while True:
            wu = au + bu - cu
            wv = av + bv - cv
            if wu == 0 and wv == 0:
                break
            d2 = wu * wu + wu * wv + wv * wv
            if d2 > best:
                best = d2
            if d2 >= nmaxsq:
                break
            if _occ(state, stamp, tag, rng, p, wu + off, wv + off) == 1:
                cu, cv = au, av
                au, av = wu, wv
            else:
                cu, cv = bu, bv
                bu, bv = wu, wv
        reach2[m] = best
        m += 1
    if m < 4:
        return 0.0
    srt = np.sort(reach2[:m])
    return math.sqrt(srt[m - 4])


@njit
def four_arm_replicas(p, nmax, seed, key, r0, r1):
    off = _window(nmax)
    g = 2 * off + 1
    state = np.zeros((g, g), dtype=np.int8)
    stamp = np.zeros((g, g), dtype=np.int32)
    reach2 = np.zeros(6, dtype=np.int64)
    rng = np.zeros(4, dtype=np.uint64)
    out = np.zeros(r1 - r0, dtype=np.float64)
    nmaxsq = nmax * nmax
    for r in range(r0, r1):
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        out[r - r0] = four_arm_core(state, stamp, r - r0 + 1, rng, p, off, nmaxsq, reach2)
    return out


@njit
def long_path_replicas(zeta, rate_sites, tc, nmax, seed, key, r0, r1):
    """Reach of the half-plane arm of the origin at the last trigger time before ``tc``.

    The origin sits on the bottom row; ``rate_sites`` boundary vertices below
    it each ignite at rate ``zeta``.  The arm event is increasing in time, so
    the latest trigger is the one to test.  Returns 0 when nothing triggers.
    """
    off = _window(nmax)
    g = 2 * off + 1
    state = np.zeros((g, g), dtype=np.int8)
    stamp = np.zeros((g, g), dtype=np.int32)
    visit = np.zeros((g, g), dtype=np.int32)
    stack = np.empty(2 * g * g + 2, dtype=np.int64)
    sources = np.zeros((1, 2), dtype=np.int64)
    ri = np.zeros(4, dtype=np.uint64)
    rng = np.zeros(4, dtype=np.uint64)
    out = np.zeros(r1 - r0, dtype=np.float64)
    nmaxsq = nmax * nmax
    for r in range(r0, r1):
        if zeta == np.inf:
            last = tc
        else:
            seed_stream(ri, seed, key, r, STREAM_IGNITE)
            last = -1.0
            t = exponential(ri) / (zeta * rate_sites)
            while t <= tc:
                last = t
                t += exponential(ri) / (zeta * rate_sites)
        if last < 0:
            continue
        p = 1.0 - math.exp(-last)
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        out[r - r0] = arm_reach_core(
            state, stamp, visit, r - r0 + 1, rng, p, off, REGION_CONE, np.inf, 0.0, nmaxsq, sources, stack
        )
    return out
