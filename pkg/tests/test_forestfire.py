import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from boundfire import forestfire as ff
from boundfire.forestfire import NO_RECOVERY, RECOVERY, T_C, ProcessSpec, simulate
from boundfire.kernels import fire
from boundfire.lattice import HalfPlaneStrip, Hexagon, Site, SiteSet, build_domain
from boundfire.rng import as_u64, key_of

OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


def _graph(dom, keep):
    g = nx.Graph()
    ids = [i for i in range(dom.size) if keep[i]]
    g.add_nodes_from(ids)
    for i in ids:
        for j in dom.nbr[i]:
            if j >= 0 and keep[j]:
                g.add_edge(i, int(j))
    return g


def _boundary_neighbours(spec):
    """Domain ids adjacent to each ignition vertex, from coordinates."""
    dom = spec.domain
    out = []
    for b in spec.boundary_sites():
        out.append({dom.index((b[0] + du, b[1] + dv)) for du, dv in OFFSETS} - {-1})
    return out


def _occupied_at(run, t, eps=0.0):
    """No-recovery occupation just after time ``t`` from the recorded clocks."""
    return (run.birth_time <= t + eps) & ~(run.burn_time <= t + eps)


SMALL_SPECS = [
    ProcessSpec(build_domain(Hexagon(4)), NO_RECOVERY, 1.0),
    ProcessSpec(build_domain(Hexagon(3)), NO_RECOVERY, 0.3, 3.0),
    ProcessSpec(build_domain(HalfPlaneStrip(9, 5)), NO_RECOVERY, 2.0, 2.0,
                tuple(build_domain(HalfPlaneStrip(9, 5)).bottom_outer_boundary())),
]


# --------------------------------------------------------------------------
# basic behaviour


def test_replay_is_identical():
    spec = SMALL_SPECS[0]
    a = simulate(spec, 7, observers=(0.5, 1.0), replica=3)
    b = simulate(spec, 7, observers=(0.5, 1.0), replica=3)
    for name in ("state", "birth_time", "burn_time", "ignition_time", "ignition_vertex", "fire_time", "fire_sites"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert all(np.array_equal(a.snapshots[t], b.snapshots[t]) for t in a.snapshots)
    c = simulate(spec, 8, replica=3)
    assert not np.array_equal(a.birth_time, c.birth_time)


def test_rejects_invalid_specs():
    dom = build_domain(Hexagon(2))
    with pytest.raises(ValueError):
        ProcessSpec(dom, NO_RECOVERY, 0.0)
    with pytest.raises(ValueError):
        ProcessSpec(dom, NO_RECOVERY, -1.0)
    with pytest.raises(ValueError):
        ProcessSpec(dom, RECOVERY, 1.0)  # needs a finite horizon
    with pytest.raises(ValueError):
        ProcessSpec(dom, NO_RECOVERY, 1.0, ignition_boundary=((0, 0),))
    with pytest.raises(ValueError):
        ProcessSpec(dom, "Sometimes", 1.0)


def test_zeta_parsing():
    assert ff.parse_zeta("inf") == math.inf
    assert ff.parse_zeta("0.5") == 0.5
    assert ff.format_zeta(math.inf) == "inf"
    with pytest.raises(ValueError):
        ff.parse_zeta("0")


def test_infinite_horizon_run_settles():
    """Every site ends occupied or burnt and no boundary cluster survives the closure."""
    spec = SMALL_SPECS[0]
    for r in range(50):
        run = simulate(spec, 1, replica=r)
        assert np.all(run.state != fire.VACANT)
        closed = ff.eventual_burn_closure(run)
        assert np.all(closed[run.state == fire.BURNT])
        g = _graph(spec.domain, ~closed)
        touching = set().union(*_boundary_neighbours(spec))
        assert not any(i in g for i in touching)


def test_closure_examples():
    dom = build_domain(SiteSet(((0, 0),)))
    spec = ProcessSpec(dom, NO_RECOVERY, 1.0)
    assert ff.eventual_burn_closure((spec, np.array([fire.OCCUPIED])))[0]
    hexd = build_domain(Hexagon(1))
    spec = ProcessSpec(hexd, NO_RECOVERY, 1.0)
    st_ = np.full(hexd.size, fire.BURNT, dtype=np.int8)
    st_[hexd.index((0, 0))] = fire.OCCUPIED
    closed = ff.eventual_burn_closure((spec, st_))
    assert not closed[hexd.index((0, 0))] and closed.sum() == hexd.size - 1
    with pytest.raises(ValueError):
        ff.eventual_burn_closure((ProcessSpec(hexd, RECOVERY, 1.0, 2.0), st_))
    with pytest.raises(ValueError):
        ff.eventual_burn_closure((spec, np.zeros(hexd.size, np.int8)))


def test_fire_log_properties():
    spec = ProcessSpec(build_domain(Hexagon(6)), NO_RECOVERY, 1.0)
    for r in range(20):
        run = simulate(spec, 2, replica=r)
        assert np.all(np.diff(run.fire_time) > 0)
        assert np.all(run.fire_size >= 1)
        for t, trig, size, ids in run.fire_log():
            assert size == len(ids)
            assert trig in spec.boundary_sites()


def test_origin_burn_six_sevenths():
    est = ff.origin_burn_experiment(1, math.inf, replicas=40_000, seed=1)
    assert abs(est.p_hat - 6 / 7) <= 3 * math.sqrt((6 / 7) * (1 / 7) / est.replicas)


def test_origin_burn_argument_checks():
    with pytest.raises(ValueError):
        ff.origin_burn_experiment(0, 1.0)
    with pytest.raises(ValueError):
        ff.origin_burn_experiment(2, 1.0, RECOVERY)
    with pytest.raises(ValueError):
        ff.origin_burn_experiment(2, 1.0, NO_RECOVERY, time_probe=1.0)


def test_thread_count_does_not_change_estimates():
    a = ff.origin_burn_experiment(4, 1.0, replicas=9000, seed=5, threads=1)
    b = ff.origin_burn_experiment(4, 1.0, replicas=9000, seed=5, threads=4)
    assert a == b


# --------------------------------------------------------------------------
# invariant campaigns (>= 1000 runs each)

CAMPAIGN = 1000


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=["hex4", "hex3-finite", "strip-bottom"])
def test_no_recovery_monotone_and_atomic(spec):
    groups = _boundary_neighbours(spec)
    for r in range(CAMPAIGN):
        run = simulate(spec, 11, observers=(0.2, 0.7, min(1.5, spec.horizon)), replica=r, debug=True)
        assert run.violations == {"monotone": 0, "atomic": 0, "infinite_zeta": 0}
        # vacant -> occupied -> burnt, burnt absorbing
        assert np.all(run.birth_time <= run.burn_time)
        snaps = [run.snapshots[t] for t in sorted(run.snapshots)]
        for a, b in zip(snaps, snaps[1:]):
            assert np.all(b >= a)
        # right after every trigger no occupied site touches the triggered vertex
        for t, b in zip(run.ignition_time, run.ignition_vertex):
            occ = _occupied_at(run, t)
            assert not any(occ[i] for i in groups[b])


@pytest.mark.parametrize("N", [2, 4])
def test_infinite_zeta_boundary_invariant(N):
    spec = ProcessSpec(build_domain(Hexagon(N)), NO_RECOVERY, math.inf)
    touching = sorted(set().union(*_boundary_neighbours(spec)))
    for r in range(CAMPAIGN):
        run = simulate(spec, 12, replica=r, debug=True)
        assert run.violations["infinite_zeta"] == 0
        # a boundary-adjacent site burns at the instant it is born
        assert np.all(run.burn_time[touching] == run.birth_time[touching])
        # and at every birth instant no occupied cluster touches the boundary
        for t in np.unique(run.birth_time[np.isfinite(run.birth_time)])[::7]:
            assert not _occupied_at(run, t)[touching].any()


@pytest.mark.parametrize("spec", SMALL_SPECS[:2], ids=["hex4", "hex3-finite"])
def test_mark_soundness(spec):
    groups = _boundary_neighbours(spec)
    for r in range(CAMPAIGN):
        run = simulate(spec, 13, replica=r)
        # replay: each fire burns exactly the occupied clusters adjacent to its trigger
        for t, trig, size, ids in run.fire_log():
            occ = _occupied_at(run, t, eps=0.0) | (run.burn_time == t)
            g = _graph(spec.domain, occ)
            b = spec.boundary_sites().index(trig)
            cluster = set()
            for i in groups[b]:
                if i in g:
                    cluster |= nx.node_connected_component(g, i)
            assert cluster == set(ids.tolist())
        for t in (0.3, T_C, 1.2):
            burnt_by_t = set()
            for ft, _, _, ids in run.fire_log():
                if ft <= t:
                    burnt_by_t |= set(ids.tolist())
            assert set(np.flatnonzero(run.marks(t)).tolist()) == burnt_by_t
            # pure-birth marks contain the fire marks
            assert np.all(run.pure_birth_marks(t) >= run.marks(t))


def test_pure_birth_embedding():
    dom = build_domain(Hexagon(8))
    spec = ProcessSpec(dom, NO_RECOVERY, 1.0, 3.0, ignition_boundary=())
    times = (0.3, T_C, 1.5)
    counts = {t: 0 for t in times}
    runs = CAMPAIGN
    for r in range(runs):
        run = simulate(spec, 14, observers=times, replica=r)
        assert run.fire_time.size == 0
        for t in times:
            snap = run.snapshots[t]
            assert np.array_equal(snap == fire.OCCUPIED, run.birth_time <= t)
            counts[t] += int((snap == fire.OCCUPIED).sum())
    for t in times:
        n = runs * dom.size
        p = 1 - math.exp(-t)
        assert abs(counts[t] / n - p) <= 3 * math.sqrt(p * (1 - p) / n)


@given(st.integers(0, 2**63), st.sampled_from([0.5, 1.0, math.inf]))
def test_recovery_runs_are_consistent(seed, zeta):
    spec = ProcessSpec(build_domain(Hexagon(3)), RECOVERY, zeta, 2.5)
    run = simulate(spec, seed, observers=(1.0, 2.5), debug=True)
    assert run.violations["atomic"] == 0
    assert np.all(run.birth_time <= run.burn_time)


# --------------------------------------------------------------------------
# long paths


def _half_ball_arm_probability(p):
    """Probability that the origin joins distance 2 inside the upper half-plane."""
    sites = [(u, v) for u in range(-3, 4) for v in range(0, 3) if u * u + u * v + v * v < 4]
    assert len(sites) == 8
    total = 0.0
    for mask in range(1 << len(sites)):
        occ = {s for i, s in enumerate(sites) if mask >> i & 1}
        if (0, 0) not in occ:
            continue
        seen, stack, ok = {(0, 0)}, [(0, 0)], False
        while stack and not ok:
            s = stack.pop()
            for du, dv in OFFSETS:
                w = (s[0] + du, s[1] + dv)
                if w[0] ** 2 + w[0] * w[1] + w[1] ** 2 >= 4:
                    ok = True
                if w in occ and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if ok:
            k = len(occ)
            total += p**k * (1 - p) ** (len(sites) - k)
    return total


def test_long_path_two_matches_quadrature():
    zeta = 1.0
    lam = 2 * zeta
    exact, _ = quad(lambda s: lam * math.exp(-lam * (T_C - s)) * _half_ball_arm_probability(1 - math.exp(-s)), 0, T_C)
    est = ff.long_path_experiment(2, zeta, 200_000, seed=3)
    assert abs(est.p_hat - exact) <= 3 * math.sqrt(exact * (1 - exact) / est.replicas)


def test_long_path_small_zeta_bound():
    for zeta in (0.01, 0.05):
        est = ff.long_path_experiment(4, zeta, 50_000, seed=1)
        assert est.p_hat <= 1 - math.exp(-2 * zeta * T_C) + 3 * est.sigma + 1e-4
    assert ff.long_path_experiment(8, 1e-6, 20_000).p_hat == 0.0


def test_long_path_checks_strip_size():
    with pytest.raises(ValueError):
        ff.long_path_experiment(1, 1.0, 10)
    with pytest.raises(ValueError):
        ff.long_path_experiment(8, 1.0, 10, strip=HalfPlaneStrip(20, 40))
    ff.long_path_experiment(8, 1.0, 10, strip=HalfPlaneStrip(49, 16))


# --------------------------------------------------------------------------
# fire depth


def _fire_depth_oracle(N, zeta, delta, beta, seed, replica):
    """Marks of the pure-birth process by direct cluster search per trigger."""
    dom = build_domain(Hexagon(N))
    spec = ProcessSpec(dom, NO_RECOVERY, zeta)
    groups = _boundary_neighbours(spec)
    target = ff.fire_depth_target(dom, N, delta)
    tmax = T_C + N ** (-beta)
    key = as_u64(key_of("fire-depth"))
    birth = fire.birth_clocks(dom.size, as_u64(seed), key, replica)
    if math.isinf(zeta):
        g = _graph(dom, birth <= tmax)
        touching = set().union(*groups)
        for comp in nx.connected_components(g):
            if comp & touching and any(target[i] for i in comp):
                return True
        return False
    ts, bs = fire.ignition_times(len(groups), zeta, tmax, as_u64(seed), key, replica)
    for t, b in zip(ts, bs):
        g = _graph(dom, birth <= t)
        for i in groups[b]:
            if i in g and any(target[j] for j in nx.node_connected_component(g, i)):
                return True
    return False


@pytest.mark.parametrize("zeta", [1.0, 0.2, math.inf])
def test_fire_depth_matches_independent_implementation(zeta):
    N, delta, beta, reps = 8, 1 / 14, 0.7, 600
    est = ff.fire_depth_experiment(N, zeta, delta, beta, reps, seed=4)
    oracle = sum(_fire_depth_oracle(N, zeta, delta, beta, 4, r) for r in range(reps))
    assert est.successes == oracle


def test_fire_depth_checks_and_trivial_bound():
    with pytest.raises(ValueError):
        ff.fire_depth_experiment(16, 1.0, 0.1, 0.7, 10)
    with pytest.raises(ValueError):
        ff.fire_depth_experiment(16, 1.0, 1 / 14, 0.5, 10)
    N, zeta = 16, 1e-3
    est = ff.fire_depth_experiment(N, zeta, 1 / 14, 50.0, 4000, seed=2)
    boundary = 6 * (N + 1)
    assert est.p_hat <= 1 - math.exp(-zeta * T_C * boundary) + 3 * est.sigma + 1e-3


# --------------------------------------------------------------------------
# bounded clusters


def test_bounded_cluster_table():
    strip = build_domain(HalfPlaneStrip(15, 8))
    table = ff.bounded_cluster_experiment(strip, Site(0, 0), 1.0, 2 * T_C, [1, 5, 20, 200], 400, seed=3)
    vals = [e.p_hat for _, e in table]
    assert vals == sorted(vals)
    assert table[-1][1].p_hat == 1.0  # L >= |strip|
