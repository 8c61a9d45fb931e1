"""Insertion kernel vs naive re-verification oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

import helpers
from arrpsim import _insertion_py as pk
from arrpsim import kernels
from arrpsim import state as st


def _eval(impl, fleet, matrix, v, req, eff_node, eff_time, p, d):
    return impl.evaluate_insertion(
        matrix.tau, matrix.dist,
        fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l, fleet.s_a, fleet.s_t,
        fleet.s_pair, fleet.s_alpha, fleet.s_tdir, fleet.s_D, fleet.s_q,
        fleet.s_occ_after, fleet.sched_len, fleet.onboard_q,
        v, eff_node, eff_time,
        req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
        req.party_size, req.direct_time, req.max_delay, fleet.w_m, fleet.capacity,
        p, d)


def _best(impl, fleet, matrix, v, req, eff_node, eff_time):
    cand = np.array([v], dtype=np.int32)
    out_cost = np.empty(1)
    out_p = np.empty(1, dtype=np.int32)
    out_d = np.empty(1, dtype=np.int32)
    impl.best_insertions(
        matrix.tau, matrix.dist,
        fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l, fleet.s_a, fleet.s_t,
        fleet.s_pair, fleet.s_alpha, fleet.s_tdir, fleet.s_D, fleet.s_q,
        fleet.s_occ_after, fleet.sched_len, fleet.onboard_q,
        cand, np.array([eff_node], dtype=np.int32), np.array([eff_time]),
        req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
        req.party_size, req.direct_time, req.max_delay, fleet.w_m, fleet.capacity,
        out_cost, out_p, out_d)
    return float(out_cost[0]), int(out_p[0]), int(out_d[0])


def test_screen_verdict_equals_naive_verification():
    g, m = helpers.small_world()
    rng = np.random.default_rng(42)
    attempts = 0
    clock = 0.0
    while attempts < 3000:
        fleet, _ = helpers.fleet_with_schedules(rng, m, g.n_nodes, n_veh=3,
                                                n_committed=int(rng.integers(2, 8)),
                                                clock=clock)
        req = helpers.random_request(rng, m, g.n_nodes, clock, rid=900)
        for v in range(fleet.n):
            en, et = fleet.effective_position(v, clock)
            L = int(fleet.sched_len[v])
            for p in range(L + 1):
                for d in range(p, L + 1):
                    ok_k, cost_k = _eval(pk, fleet, m, v, req, en, et, p, d)
                    ok_n, cost_n = helpers.naive_insertion_check(
                        fleet, v, p, d, req, en, et)
                    assert ok_k == ok_n, (
                        f"verdict mismatch v={v} p={p} d={d} L={L}")
                    if ok_k:
                        assert cost_k == pytest.approx(cost_n, abs=1e-6)
                    attempts += 1
    assert attempts >= 3000


def test_best_plan_matches_exhaustive_enumeration():
    g, m = helpers.small_world()
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(120):
        fleet, _ = helpers.fleet_with_schedules(rng, m, g.n_nodes, n_veh=3,
                                                n_committed=int(rng.integers(2, 9)))
        req = helpers.random_request(rng, m, g.n_nodes, 0.0, rid=901)
        for v in range(fleet.n):
            en, et = fleet.effective_position(v, 0.0)
            cost_k, p_k, d_k = _best(pk, fleet, m, v, req, en, et)
            cost_n, p_n, d_n = helpers.naive_best_plan(fleet, v, req, en, et)
            if math.isinf(cost_n):
                assert math.isinf(cost_k)
            else:
                assert cost_k == pytest.approx(cost_n, abs=1e-6)
                # chosen plan must itself verify, and nothing may beat it
                ok, cost_chk = helpers.naive_insertion_check(
                    fleet, v, p_k, d_k, req, en, et)
                assert ok and cost_chk <= cost_n + 1e-6
                checked += 1
    assert checked > 50


def test_wait_absorption_is_not_over_pruned():
    # A committed pickup far in the future absorbs the detour of a new
    # insertion: the plain suffix-slack screen would reject, the exact
    # verdict accepts.
    g, m = helpers.small_world()
    fleet = st.Fleet([0], capacity=4, w_m=600.0, tau=m.tau, dist=m.dist)
    committed = st.Request(
        id=1, origin=30, dest=35, earliest_pickup=500.0, latest_pickup=500.0,
        party_size=1, willing_to_share=True, advance=True, placed_at=0.0,
        direct_time=float(m.tau[30, 35]), direct_dist=float(m.dist[30, 35]),
        max_delay=900.0, visible_from=0.0)
    fleet.insert_pair(0, 0, 0, committed, 0, 0.0)
    assert fleet.s_t[0, 0] == 500.0   # vehicle waits at the pickup
    wait = fleet.s_t[0, 0] - fleet.s_a[0, 0]
    assert wait > 200.0
    nearby = st.Request(
        id=2, origin=1, dest=2, earliest_pickup=0.0,
        latest_pickup=wait / 2,   # tight: only absorbable thanks to the wait
        party_size=1, willing_to_share=True, advance=False, placed_at=0.0,
        direct_time=float(m.tau[1, 2]), direct_dist=float(m.dist[1, 2]),
        max_delay=900.0, visible_from=0.0)
    ok, cost = _eval(pk, fleet, m, 0, nearby, 0, 0.0, 0, 0)
    ok_n, cost_n = helpers.naive_insertion_check(fleet, 0, 0, 0, nearby, 0, 0.0)
    assert ok and ok_n
    assert cost == pytest.approx(cost_n, abs=1e-6)


def test_solo_capacity_and_window_rejections():
    g, m = helpers.small_world()
    fleet = st.Fleet([0], capacity=1, w_m=600.0, tau=m.tau, dist=m.dist)
    r1 = helpers.random_request(np.random.default_rng(1), m, g.n_nodes, 0.0, 1)
    r1.party_size = 1
    cost, p, d = pk._best_for_vehicle(
        m.tau, m.dist, fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l,
        fleet.s_a, fleet.s_t, fleet.s_pair, fleet.s_alpha, fleet.s_tdir,
        fleet.s_D, fleet.s_q, fleet.s_occ_after,
        0, 0, 0, 0, 0.0, r1.origin, r1.dest, r1.earliest_pickup,
        r1.latest_pickup, 2, r1.direct_time, r1.max_delay, 600.0, 1)
    assert math.isinf(cost)   # party larger than capacity

    # unreachable pickup window: latest before any possible arrival
    cost, p, d = pk._best_for_vehicle(
        m.tau, m.dist, fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l,
        fleet.s_a, fleet.s_t, fleet.s_pair, fleet.s_alpha, fleet.s_tdir,
        fleet.s_D, fleet.s_q, fleet.s_occ_after,
        0, 0, 0, 0, 0.0, 48, 1, 0.0, float(m.tau[0, 48]) * 0.5,
        1, float(m.tau[48, 1]), 900.0, 600.0, 1)
    assert math.isinf(cost)


def test_compiled_twin_matches_python_twin():
    if not kernels.COMPILED:
        pytest.skip("compiled kernel not built")
    from arrpsim import _insertion_c as ck
    g, m = helpers.small_world()
    rng = np.random.default_rng(99)
    for _ in range(60):
        fleet, _ = helpers.fleet_with_schedules(rng, m, g.n_nodes, n_veh=3,
                                                n_committed=int(rng.integers(2, 9)))
        req = helpers.random_request(rng, m, g.n_nodes, 0.0, rid=902)
        for v in range(fleet.n):
            en, et = fleet.effective_position(v, 0.0)
            assert _best(ck, fleet, m, v, req, en, et) == \
                _best(pk, fleet, m, v, req, en, et)
            L = int(fleet.sched_len[v])
            for p in range(L + 1):
                for d in range(p, L + 1):
                    assert _eval(ck, fleet, m, v, req, en, et, p, d) == \
                        _eval(pk, fleet, m, v, req, en, et, p, d)
