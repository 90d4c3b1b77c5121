"""Connectivity kernels on a domain neighbour table."""

import numpy as np

from .._jit import njit
from ..rng import STREAM_SAMPLE, seed_stream, uniform

MODE_CONNECT = 0
MODE_NOT_CONNECT = 1
MODE_TWO_CLUSTERS = 2


@njit
def connects(nbr, allowed, src, dst, seen, stack):
    """True iff an ``allowed`` path joins a ``src`` site to a ``dst`` site."""
    k = nbr.shape[0]
    for i in range(k):
        seen[i] = False
    sp = 0
    for i in range(k):
        if src[i] and allowed[i]:
            if dst[i]:
                return True
            seen[i] = True
            stack[sp] = i
            sp += 1
    while sp > 0:
        sp -= 1
        i = stack[sp]
        for j in range(6):
            w = nbr[i, j]
            if w < 0 or seen[w] or not allowed[w]:
                continue
            if dst[w]:
                return True
            seen[w] = True
            stack[sp] = w
            sp += 1
    return False


@njit
def count_spanning_clusters(nbr, allowed, src, dst, seen, stack):
    """Number of distinct ``allowed`` clusters meeting both ``src`` and ``dst``."""
    k = nbr.shape[0]
    for i in range(k):
        seen[i] = False
    count = 0
    for s in range(k):
        if not (src[s] and allowed[s]) or seen[s]:
            continue
        seen[s] = True
        stack[0] = s
        sp = 1
        hit = False
        while sp > 0:
            sp -= 1
            i = stack[sp]
            if dst[i]:
                hit = True
            for j in range(6):
                w = nbr[i, j]
                if w >= 0 and allowed[w] and not seen[w]:
                    seen[w] = True
                    stack[sp] = w
                    sp += 1
        if hit:
            count += 1
    return count


@njit
def label_clusters(nbr, allowed):
    """Cluster labels (-1 where not allowed) and the size of each label."""
    k = nbr.shape[0]
    labels = np.full(k, -1, dtype=np.int64)
    sizes = np.zeros(k, dtype=np.int64)
    stack = np.empty(k, dtype=np.int64)
    nlab = 0
    for s in range(k):
        if not allowed[s] or labels[s] >= 0:
            continue
        labels[s] = nlab
        stack[0] = s
        sp = 1
        size = 0
        while sp > 0:
            sp -= 1
            i = stack[sp]
            size += 1
            for j in range(6):
                w = nbr[i, j]
                if w >= 0 and allowed[w] and labels[w] < 0:
                    labels[w] = nlab
                    stack[sp] = w
                    sp += 1
        sizes[nlab] = size
        nlab += 1
    return labels, sizes[:nlab]


@njit
def evaluate(nbr, state, mode, color, region, src, dst):
    k = state.shape[0]
    allowed = np.zeros(k, dtype=np.bool_)
    for i in range(k):
        allowed[i] = region[i] and state[i] == color
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    return _decide(nbr, allowed, mode, src, dst, seen, stack)


@njit
def _decide(nbr, allowed, mode, src, dst, seen, stack):
    if mode == MODE_CONNECT:
        return connects(nbr, allowed, src, dst, seen, stack)
    if mode == MODE_NOT_CONNECT:
        return not connects(nbr, allowed, src, dst, seen, stack)
    return count_spanning_clusters(nbr, allowed, src, dst, seen, stack) >= 2


@njit
def sample_state(rng, p, state):
    for i in range(state.shape[0]):
        state[i] = 1 if uniform(rng) < p else 0


@njit
def estimate_replicas(nbr, p, mode, color, region, src, dst, seed, key, r0, r1):
    """Outcomes of replicas ``r0 .. r1-1`` of a static event at parameter ``p``.

    Replica ``r`` draws one uniform per site (id order) from its own stream and
    sets the site occupied iff the uniform is below ``p``; equal seeds thus
    couple all values of ``p`` monotonically.
    """
    k = nbr.shape[0]
    out = np.zeros(r1 - r0, dtype=np.bool_)
    rng = np.zeros(4, dtype=np.uint64)
    state = np.zeros(k, dtype=np.int8)
    allowed = np.zeros(k, dtype=np.bool_)
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    for r in range(r0, r1):
        seed_stream(rng, seed, key, r, STREAM_SAMPLE)
        sample_state(rng, p, state)
        for i in range(k):
            allowed[i] = region[i] and state[i] == color
        out[r - r0] = _decide(nbr, allowed, mode, src, dst, seen, stack)
    return out
