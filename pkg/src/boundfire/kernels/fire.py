"""Event-driven kernels for the boundary-ignition forest fire.

Site states are ``VACANT``, ``OCCUPIED`` and ``BURNT``.  The ignition boundary
is given as CSR lists ``(bptr, badj)``: vertex ``b`` touches the domain ids
``badj[bptr[b]:bptr[b+1]]``.  ``touch[i]`` is the smallest boundary vertex
adjacent to site ``i`` (or -1).

Random streams (see :mod:`boundfire.rng`):

* birth clocks: one Exp(1) per site, drawn in id order from ``STREAM_BIRTH``;
* ignitions: gaps Exp(1) / (zeta * m) followed by a uniform vertex index,
  alternating, from ``STREAM_IGNITE``.  Superposing the ``m`` rate-zeta vertex
  streams this way is equal in law to running them separately;
* recovery clocks: Exp(1) from ``STREAM_RECOVER`` in order of burning.

Every kernel that needs births or ignitions draws them in exactly this order,
so a replica index identifies the same pure-birth history everywhere.
"""

import numpy as np

from .._jit import njit
from ..rng import STREAM_BIRTH, STREAM_IGNITE, STREAM_RECOVER, exponential, randbelow, seed_stream
from .heap import heap_pop, heap_push

VACANT = 0
OCCUPIED = 1
BURNT = 2

# debug counters
VIOLATION_MONOTONE = 0
VIOLATION_ATOMIC = 1
VIOLATION_INFINITE = 2


@njit
def _append_f(arr, n, x):
    if n == arr.shape[0]:
        new = np.empty(2 * n + 16, dtype=arr.dtype)
        new[:n] = arr[:n]
        arr = new
    arr[n] = x
    return arr


@njit
def _append_i(arr, n, x):
    if n == arr.shape[0]:
        new = np.empty(2 * n + 16, dtype=arr.dtype)
        new[:n] = arr[:n]
        arr = new
    arr[n] = x
    return arr


@njit
def birth_clocks(k, seed, key, replica):
    """First occupation times of the pure-birth process."""
    rng = np.zeros(4, dtype=np.uint64)
    seed_stream(rng, seed, key, replica, STREAM_BIRTH)
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        out[i] = exponential(rng)
    return out


@njit
def ignition_times(m, zeta, tmax, seed, key, replica):
    """Ignition log ``(times, vertices)`` up to ``tmax`` for finite ``zeta``."""
    rng = np.zeros(4, dtype=np.uint64)
    seed_stream(rng, seed, key, replica, STREAM_IGNITE)
    ts = np.empty(16, dtype=np.float64)
    bs = np.empty(16, dtype=np.int64)
    n = 0
    if m == 0:
        return ts[:0], bs[:0]
    rate = zeta * m
    t = exponential(rng) / rate
    while t <= tmax:
        b = randbelow(rng, m)
        ts = _append_f(ts, n, t)
        bs = _append_i(bs, n, b)
        n += 1
        t = t + exponential(rng) / rate
    return ts[:n], bs[:n]


@njit
def _burn_cluster(nbr, st, burn, start, t, recovery, rr, keys, vals, size, buf, off):
    """Burn the occupied cluster of ``start``; ids go to ``buf[off:]``.

    Returns ``(count, heap_size)``.
    """
    st[start] = BURNT
    buf[off] = start
    head = off
    tail = off + 1
    while head < tail:
        i = buf[head]
        head += 1
        if t < burn[i]:
            burn[i] = t
        if recovery:
            size = heap_push(keys, vals, size, t + exponential(rr), i)
        for j in range(6):
            w = nbr[i, j]
            if w >= 0 and st[w] == OCCUPIED:
                st[w] = BURNT
                buf[tail] = w
                tail += 1
    return tail - off, size


@njit
def run_process(nbr, bptr, badj, touch, zeta, recovery, horizon, seed, key, replica, obs, watch, log, debug):
    """One trajectory of the forest fire up to ``horizon``.

    Without recovery and with an infinite horizon the loop stops once every
    birth clock has rung; the remaining dynamics only burns boundary-adjacent clusters, which the
    eventual-burn closure accounts for.

    Returns
    -------
    tuple
        ``(state, birth, burn, ign_t, ign_b, fire_t, fire_b, fire_size,
        fire_ptr, fire_sites, snaps, violations, watch_size, t_end)``
    """
    k = nbr.shape[0]
    m = bptr.shape[0] - 1
    infinite = zeta == np.inf
    st = np.zeros(k, dtype=np.int8)
    birth = np.full(k, np.inf)
    burn = np.full(k, np.inf)
    keys = np.empty(max(k, 1), dtype=np.float64)
    vals = np.empty(max(k, 1), dtype=np.int64)
    size = 0
    clocks = birth_clocks(k, seed, key, replica)
    for i in range(k):
        size = heap_push(keys, vals, size, clocks[i], i)
    ri = np.zeros(4, dtype=np.uint64)
    seed_stream(ri, seed, key, replica, STREAM_IGNITE)
    rr = np.zeros(4, dtype=np.uint64)
    seed_stream(rr, seed, key, replica, STREAM_RECOVER)
    next_ign = np.inf
    if not infinite and m > 0:
        next_ign = exponential(ri) / (zeta * m)

    ign_t = np.empty(16, dtype=np.float64)
    ign_b = np.empty(16, dtype=np.int64)
    fire_t = np.empty(16, dtype=np.float64)
    fire_b = np.empty(16, dtype=np.int64)
    fire_size = np.empty(16, dtype=np.int64)
    fire_ptr = np.zeros(17, dtype=np.int64)
    fire_sites = np.empty(16, dtype=np.int64)
    n_ign = 0
    n_fire = 0
    n_sites = 0
    nobs = obs.shape[0]
    snaps = np.zeros((nobs, k), dtype=np.int8)
    oi = 0
    buf = np.empty(max(k, 1), dtype=np.int64)
    viol = np.zeros(3, dtype=np.int64)
    watch_size = 0
    t = 0.0

    while True:
        if not recovery and size == 0 and horizon == np.inf:
            break
        tb = keys[0] if size > 0 else np.inf
        te = min(tb, next_ign)
        if te > horizon or te == np.inf:
            break
        while oi < nobs and obs[oi] < te:
            snaps[oi, :] = st
            oi += 1
        t = te
        trigger = -1
        total = 0
        watched = watch >= 0 and st[watch] == OCCUPIED
        if tb <= next_ign:
            _, i, size = heap_pop(keys, vals, size)
            if debug and not recovery and st[i] != VACANT:
                viol[VIOLATION_MONOTONE] += 1
            st[i] = OCCUPIED
            if birth[i] == np.inf:
                birth[i] = t
            watched = watch >= 0 and st[watch] == OCCUPIED
            if infinite and touch[i] >= 0:
                trigger = touch[i]
                total, size = _burn_cluster(nbr, st, burn, i, t, recovery, rr, keys, vals, size, buf, 0)
        else:
            trigger = randbelow(ri, m)
            for q in range(bptr[trigger], bptr[trigger + 1]):
                j = badj[q]
                if st[j] == OCCUPIED:
                    cnt, size = _burn_cluster(
                        nbr, st, burn, j, t, recovery, rr, keys, vals, size, buf, total
                    )
                    total += cnt
            if debug:
                for q in range(bptr[trigger], bptr[trigger + 1]):
                    if st[badj[q]] == OCCUPIED:
                        viol[VIOLATION_ATOMIC] += 1
            next_ign = t + exponential(ri) / (zeta * m)
        if trigger >= 0:
            if watched and st[watch] == BURNT:
                # clusters are burnt one after another, so find the one holding ``watch``
                watch_size = _cluster_size_in(nbr, buf, total, watch)
            if log:
                ign_t = _append_f(ign_t, n_ign, t)
                ign_b = _append_i(ign_b, n_ign, trigger)
                n_ign += 1
                if total > 0:
                    fire_t = _append_f(fire_t, n_fire, t)
                    fire_b = _append_i(fire_b, n_fire, trigger)
                    fire_size = _append_i(fire_size, n_fire, total)
                    for q in range(total):
                        fire_sites = _append_i(fire_sites, n_sites, buf[q])
                        n_sites += 1
                    n_fire += 1
                    fire_ptr = _append_i(fire_ptr, n_fire, n_sites)
        if debug:
            if infinite:
                for i in range(k):
                    if st[i] == OCCUPIED and touch[i] >= 0:
                        viol[VIOLATION_INFINITE] += 1
    while oi < nobs and obs[oi] <= horizon:
        snaps[oi, :] = st
        oi += 1
    fire_ptr[0] = 0
    return (
        st,
        birth,
        burn,
        ign_t[:n_ign],
        ign_b[:n_ign],
        fire_t[:n_fire],
        fire_b[:n_fire],
        fire_size[:n_fire],
        fire_ptr[: n_fire + 1],
        fire_sites[:n_sites],
        snaps,
        viol,
        watch_size,
        t,
    )


@njit
def _cluster_size_in(nbr, buf, total, target):
    """Size of the connected piece of ``buf[:total]`` that contains ``target``."""
    k = nbr.shape[0]
    inset = np.zeros(k, dtype=np.bool_)
    for q in range(total):
        inset[buf[q]] = True
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(total, dtype=np.int64)
    stack[0] = target
    seen[target] = True
    sp = 1
    count = 0
    while sp > 0:
        sp -= 1
        i = stack[sp]
        count += 1
        for j in range(6):
            w = nbr[i, j]
            if w >= 0 and inset[w] and not seen[w]:
                seen[w] = True
                stack[sp] = w
                sp += 1
    return count


@njit
def eventual_closure(nbr, bptr, badj, st):
    """Sites burnt now or lying in an occupied cluster touching the ignition boundary."""
    k = nbr.shape[0]
    out = np.zeros(k, dtype=np.bool_)
    stack = np.empty(max(k, 1), dtype=np.int64)
    sp = 0
    for i in range(k):
        if st[i] == BURNT:
            out[i] = True
    for q in range(badj.shape[0]):
        j = badj[q]
        if st[j] == OCCUPIED and not out[j]:
            out[j] = True
            stack[sp] = j
            sp += 1
    while sp > 0:
        sp -= 1
        i = stack[sp]
        for j in range(6):
            w = nbr[i, j]
            if w >= 0 and st[w] == OCCUPIED and not out[w]:
                out[w] = True
                stack[sp] = w
                sp += 1
    return out


@njit
def cluster_size(nbr, occupied, start):
    if not occupied[start]:
        return 0
    k = nbr.shape[0]
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    stack[0] = start
    seen[start] = True
    sp = 1
    count = 0
    while sp > 0:
        sp -= 1
        i = stack[sp]
        count += 1
        for j in range(6):
            w = nbr[i, j]
            if w >= 0 and occupied[w] and not seen[w]:
                seen[w] = True
                stack[sp] = w
                sp += 1
    return count


@njit
def pure_birth_marks(nbr, bptr, badj, birth, ign_t, ign_b, tmax, target, stop_on_target):
    """Mark times of the pure-birth process.

    At each ignition ``(s, b)`` with ``s <= tmax`` every site in the
    time-``s`` pure-birth cluster of an inner neighbour of ``b`` is marked
    (if not already).  With ``stop_on_target`` the scan returns as soon as a
    site with ``target[i]`` is marked.

    Returns ``(mark_time, hit)``.
    """
    k = nbr.shape[0]
    mark = np.full(k, np.inf)
    seen = np.zeros(k, dtype=np.int32)
    stack = np.empty(max(k, 1), dtype=np.int64)
    hit = False
    for s in range(ign_t.shape[0]):
        ts = ign_t[s]
        if ts > tmax:
            break
        tag = s + 1
        b = ign_b[s]
        sp = 0
        for q in range(bptr[b], bptr[b + 1]):
            j = badj[q]
            if birth[j] <= ts and seen[j] != tag:
                seen[j] = tag
                stack[sp] = j
                sp += 1
        while sp > 0:
            sp -= 1
            i = stack[sp]
            if mark[i] == np.inf:
                mark[i] = ts
                if target[i]:
                    hit = True
                    if stop_on_target:
                        return mark, hit
            for j in range(6):
                w = nbr[i, j]
                if w >= 0 and birth[w] <= ts and seen[w] != tag:
                    seen[w] = tag
                    stack[sp] = w
                    sp += 1
    return mark, hit


@njit
def infinite_zeta_marks(nbr, touch, birth, tmax):
    """Mark times when every boundary contact burns at once.

    A site is marked at the first time it is joined to a boundary-adjacent
    site by a born path: the minimax birth time over such paths.
    """
    k = nbr.shape[0]
    mark = np.full(k, np.inf)
    cap = 7 * k + 1
    keys = np.empty(cap, dtype=np.float64)
    vals = np.empty(cap, dtype=np.int64)
    size = 0
    for i in range(k):
        if touch[i] >= 0 and birth[i] <= tmax:
            mark[i] = birth[i]
            size = heap_push(keys, vals, size, birth[i], i)
    while size > 0:
        t, i, size = heap_pop(keys, vals, size)
        if t > mark[i]:
            continue
        for j in range(6):
            w = nbr[i, j]
            if w < 0:
                continue
            c = max(t, birth[w])
            if c <= tmax and c < mark[w]:
                mark[w] = c
                size = heap_push(keys, vals, size, c, w)
    return mark


# --------------------------------------------------------------------------
# batched experiment kernels


@njit
def origin_burn_replicas(nbr, bptr, badj, touch, zeta, recovery, horizon, site, seed, key, r0, r1):
    """Per replica: is ``site`` burnt by a finite ``horizon``, or eventually (closure) otherwise."""
    out = np.zeros(r1 - r0, dtype=np.bool_)
    obs = np.empty(0, dtype=np.float64)
    for r in range(r0, r1):
        res = run_process(nbr, bptr, badj, touch, zeta, recovery, horizon, seed, key, r, obs, -1, False, False)
        st = res[0]
        if horizon < np.inf:
            out[r - r0] = res[2][site] <= horizon
        elif st[site] == BURNT:
            out[r - r0] = True
        else:
            out[r - r0] = eventual_closure(nbr, bptr, badj, st)[site]
    return out


@njit
def watched_cluster_replicas(nbr, bptr, badj, touch, zeta, horizon, site, seed, key, r0, r1):
    """Per replica: largest size the occupied cluster of ``site`` reaches by ``horizon``."""
    out = np.zeros(r1 - r0, dtype=np.int64)
    obs = np.empty(0, dtype=np.float64)
    for r in range(r0, r1):
        res = run_process(nbr, bptr, badj, touch, zeta, False, horizon, seed, key, r, obs, site, False, False)
        st = res[0]
        if st[site] == BURNT:
            out[r - r0] = res[12]
        else:
            out[r - r0] = cluster_size(nbr, st == OCCUPIED, site)
    return out


@njit
def fire_depth_replicas(nbr, bptr, badj, touch, zeta, tmax, target, seed, key, r0, r1):
    """Per replica: does a pure-birth mark enter ``target`` by ``tmax``."""
    k = nbr.shape[0]
    m = bptr.shape[0] - 1
    out = np.zeros(r1 - r0, dtype=np.bool_)
    for r in range(r0, r1):
        birth = birth_clocks(k, seed, key, r)
        if zeta == np.inf:
            mark = infinite_zeta_marks(nbr, touch, birth, tmax)
            hit = False
            for i in range(k):
                if target[i] and mark[i] <= tmax:
                    hit = True
                    break
            out[r - r0] = hit
        else:
            ts, bs = ignition_times(m, zeta, tmax, seed, key, r)
            _, hit = pure_birth_marks(nbr, bptr, badj, birth, ts, bs, tmax, target, True)
            out[r - r0] = hit
    return out
