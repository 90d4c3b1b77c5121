"""Cone-restricted searches on a finite domain."""

import math

import numpy as np

from .._jit import njit

_DU = np.array([1, -1, 0, 0, 1, -1], dtype=np.int64)
_DV = np.array([0, 0, 1, -1, -1, 1], dtype=np.int64)


@njit
def in_cone(du, dv, slope):
    if dv < 0:
        return False
    if dv == 0:
        return du == 0 or slope == np.inf
    if slope == np.inf:
        return True
    return abs(2 * du + dv) <= slope * dv * (1.0 + 1e-9)


@njit
def cone_reach(nbr, coords, occupied, apex_u, apex_v, slope, radius, sources):
    """Reach (from the apex) of the occupied cluster of ``sources`` in the truncated cone.

    Only domain sites inside the closed cone and the open ball of ``radius``
    around the apex are explored; the reach is the largest distance from the
    apex among neighbours of explored sites, so the arm event to ``radius``
    holds iff the result is ``>= radius``.
    """
    k = nbr.shape[0]
    r2 = radius * radius
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    sp = 0
    best = 0
    for q in range(sources.shape[0]):
        i = sources[q]
        if i < 0 or seen[i] or not occupied[i]:
            continue
        du = coords[i, 0] - apex_u
        dv = coords[i, 1] - apex_v
        if not in_cone(du, dv, slope) or du * du + du * dv + dv * dv >= r2:
            continue
        seen[i] = True
        stack[sp] = i
        sp += 1
    while sp > 0:
        sp -= 1
        i = stack[sp]
        for j in range(6):
            du = coords[i, 0] + _DU[j] - apex_u
            dv = coords[i, 1] + _DV[j] - apex_v
            d2 = du * du + du * dv + dv * dv
            if d2 > best:
                best = d2
            w = nbr[i, j]
            if w < 0 or seen[w] or not occupied[w] or d2 >= r2 or not in_cone(du, dv, slope):
                continue
            seen[w] = True
            stack[sp] = w
            sp += 1
    return math.sqrt(best)
