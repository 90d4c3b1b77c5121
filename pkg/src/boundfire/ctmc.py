"""Exact solution of the forest-fire chain on very small domains.

States are enumerated explicitly from the all-vacant start.  Without recovery
a site is vacant, occupied or burnt (``3**k`` states); with recovery a burnt
site behaves like a vacant one, so a state is the occupied set plus a flag
recording whether the queried site has burnt yet.  An infinite ignition rate
is handled by contracting the instantaneous burn into the birth transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply, spsolve

MAX_SITES = 8


@dataclass(frozen=True)
class EventuallyBurnt:
    """The site burns at some time (no-recovery variant only)."""

    site: tuple


@dataclass(frozen=True)
class BurntBy:
    """The site has burnt at least once by time ``t``."""

    site: tuple
    t: float


def _clusters_touching(nbr, occ, starts):
    """Union of occupied clusters containing any of ``starts``."""
    out = set()
    stack = [s for s in starts if occ[s]]
    out.update(stack)
    while stack:
        i = stack.pop()
        for w in nbr[i]:
            if w >= 0 and occ[w] and w not in out:
                out.add(int(w))
                stack.append(int(w))
    return out


class _Chain:
    def __init__(self, spec, target: int, absorb_on_target: bool):
        from .forestfire import boundary_arrays  # deferred: forestfire imports this module

        dom = spec.domain
        self.k = dom.size
        self.nbr = dom.nbr.tolist()
        bptr, badj, touch = boundary_arrays(dom, spec.boundary_sites())
        self.groups = [badj[bptr[b] : bptr[b + 1]].tolist() for b in range(len(bptr) - 1)]
        self.touch = touch.tolist()
        self.zeta = float(spec.zeta)
        self.recovery = spec.recovery
        self.target = target
        self.absorb = absorb_on_target

    # a state is a tuple of site states (0 vacant, 1 occupied, 2 burnt) plus a hit flag
    def moves(self, state):
        sites, hit = state
        if hit and self.absorb:
            return []
        out = []
        occ = [s == 1 for s in sites]
        for i in range(self.k):
            if sites[i] == 1 or (sites[i] == 2 and not self.recovery):
                continue
            new = list(sites)
            new[i] = 1
            if math.isinf(self.zeta) and self.touch[i] >= 0:
                occ2 = [s == 1 for s in new]
                burnt = _clusters_touching(self.nbr, occ2, [i])
                out.append((1.0, self._burn(new, burnt, hit)))
            else:
                out.append((1.0, (tuple(new), hit)))
        if not math.isinf(self.zeta):
            for group in self.groups:
                burnt = _clusters_touching(self.nbr, occ, group)
                if burnt:
                    out.append((self.zeta, self._burn(list(sites), burnt, hit)))
        return out

    def _burn(self, sites, burnt, hit):
        for j in burnt:
            sites[j] = 0 if self.recovery else 2
        return tuple(sites), hit or (self.target in burnt)

    def enumerate(self):
        start = (tuple([0] * self.k), False)
        index = {start: 0}
        order = [start]
        rows, cols, vals = [], [], []
        i = 0
        while i < len(order):
            s = order[i]
            for rate, t in self.moves(s):
                if t not in index:
                    index[t] = len(order)
                    order.append(t)
                rows.append(i)
                cols.append(index[t])
                vals.append(rate)
            i += 1
        n = len(order)
        rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return order, rates


def exact_small_ctmc(spec, query) -> float:
    """Exact probability of ``query`` for the process described by ``spec``.

    Parameters
    ----------
    spec : ProcessSpec
        Domain with at most 8 sites.
    query : EventuallyBurnt or BurntBy

    Raises
    ------
    ValueError
        If the domain is too large or the query does not fit the variant.
    """
    if spec.domain.size > MAX_SITES:
        raise ValueError(f"state space too large: {spec.domain.size} sites (max {MAX_SITES})")
    target = spec.domain.index(query.site)
    if target < 0:
        raise ValueError("query site is not in the domain")
    if isinstance(query, EventuallyBurnt):
        if spec.recovery:
            raise ValueError("eventual burning is only defined without recovery")
        chain = _Chain(spec, target, absorb_on_target=False)
        order, rates = chain.enumerate()
        n = len(order)
        value = np.zeros(n)
        terminal = np.zeros(n, dtype=bool)
        nbr = chain.nbr
        boundary = sorted({j for g in chain.groups for j in g})
        for idx, (sites, _) in enumerate(order):
            if 0 in sites:
                continue
            terminal[idx] = True
            if sites[target] == 2:
                value[idx] = 1.0
            else:
                doomed = _clusters_touching(nbr, [s == 1 for s in sites], boundary)
                value[idx] = 1.0 if target in doomed else 0.0
        out_rate = np.asarray(rates.sum(axis=1)).ravel()
        gen = sp.diags(out_rate) - rates
        gen = gen.tolil()
        rhs = np.zeros(n)
        for idx in np.flatnonzero(terminal):
            gen.rows[idx] = [idx]
            gen.data[idx] = [1.0]
            rhs[idx] = value[idx]
        return float(spsolve(gen.tocsc(), rhs)[0])
    if isinstance(query, BurntBy):
        if query.t < 0:
            raise ValueError("time must be >= 0")
        chain = _Chain(spec, target, absorb_on_target=True)
        order, rates = chain.enumerate()
        n = len(order)
        out_rate = np.asarray(rates.sum(axis=1)).ravel()
        gen = (rates - sp.diags(out_rate)).tocsc()
        p0 = np.zeros(n)
        p0[0] = 1.0
        pt = expm_multiply(gen.T * query.t, p0)
        hit = np.array([h for _, h in order])
        return float(np.clip(pt[hit].sum(), 0.0, 1.0))
    raise TypeError(f"unknown query {query!r}")
