"""Shared test fixtures: small worlds, random instances, naive oracles.

The naive insertion verifier here is intentionally written from scratch
(object lists, full re-propagation, full route sums) as the independent
second route the kernel results are checked against.
"""

from __future__ import annotations

import numpy as np

from arrpsim import network
from arrpsim import state as st
from arrpsim import _insertion_py as pk


def small_world(width=2400, spacing=400, speed=10.0):
    g = network.build_grid_graph(width, width, spacing, speed)
    m = network.all_pairs_shortest(g)
    return g, m


def random_request(rng, matrix, n_nodes, clock, rid, horizon=900.0):
    o = int(rng.integers(n_nodes))
    d = int(rng.integers(n_nodes))
    while d == o:
        d = int(rng.integers(n_nodes))
    e = clock + float(rng.uniform(0.0, horizon))
    w = float(rng.choice([300.0, 420.0, 600.0]))
    dmax = float(rng.choice([600.0, 900.0, 1200.0]))
    q = int(rng.choice([1, 1, 1, 2]))
    return st.Request(
        id=rid, origin=o, dest=d, earliest_pickup=e, latest_pickup=e + w,
        party_size=q, willing_to_share=True, advance=e > clock + 120.0,
        placed_at=clock, direct_time=float(matrix.tau[o, d]),
        direct_dist=float(matrix.dist[o, d]), max_delay=dmax, visible_from=clock)


def fleet_with_schedules(rng, matrix, n_nodes, n_veh=4, n_committed=6,
                         clock=0.0, capacity=4, w_m=600.0):
    """A fleet whose schedules were built by committing kernel-chosen plans."""
    starts = rng.integers(n_nodes, size=n_veh)
    fleet = st.Fleet(starts, capacity, w_m, matrix.tau, matrix.dist, t0=clock)
    rid = 0
    requests = {}
    tries = 0
    while rid < n_committed and tries < n_committed * 30:
        tries += 1
        req = random_request(rng, matrix, n_nodes, clock, rid)
        v = int(rng.integers(n_veh))
        en, et = fleet.effective_position(v, clock)
        cost, p, d = pk._best_for_vehicle(
            matrix.tau, matrix.dist,
            fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l, fleet.s_a, fleet.s_t,
            fleet.s_pair, fleet.s_alpha, fleet.s_tdir, fleet.s_D, fleet.s_q,
            fleet.s_occ_after,
            v, int(fleet.sched_len[v]), int(fleet.onboard_q[v]), en, et,
            req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
            req.party_size, req.direct_time, req.max_delay, w_m, capacity)
        if np.isfinite(cost):
            fleet.insert_pair(v, p, d, req, en, et)
            requests[rid] = req
            rid += 1
    return fleet, requests


# --------------------------------------------------------------- naive oracle

def _committed_stop_objects(fleet, v):
    L = int(fleet.sched_len[v])
    stops = []
    for j in range(L):
        stops.append({
            "kind": int(fleet.s_kind[v, j]),
            "node": int(fleet.s_node[v, j]),
            "e": float(fleet.s_e[v, j]),
            "l": float(fleet.s_l[v, j]),
            "tdir": float(fleet.s_tdir[v, j]),
            "D": float(fleet.s_D[v, j]),
            "q": int(fleet.s_q[v, j]),
            "alpha_frozen": (float(fleet.s_alpha[v, j])
                             if fleet.s_kind[v, j] == st.DROPOFF and fleet.s_pair[v, j] < 0
                             else None),
            "pair": None,
        })
    for j in range(L):
        pr = int(fleet.s_pair[v, j])
        if fleet.s_kind[v, j] == st.DROPOFF and pr >= 0:
            stops[j]["pair"] = stops[pr]
    return stops


def naive_insertion_check(fleet, v, p, d, req, eff_node, eff_time):
    """Full re-verification of one insertion; returns (feasible, cost)."""
    stops = _committed_stop_objects(fleet, v)
    if len(stops) + 2 > st.MAX_STOPS or not (0 <= p <= d <= len(stops)):
        return False, float("inf")
    pick = {"kind": st.PICKUP, "node": req.origin, "e": req.earliest_pickup,
            "l": req.latest_pickup, "tdir": req.direct_time, "D": req.max_delay,
            "q": req.party_size, "alpha_frozen": None, "pair": None}
    drop = {"kind": st.DROPOFF, "node": req.dest,
            "e": req.earliest_pickup + req.direct_time,
            "l": req.latest_pickup + req.direct_time + req.max_delay,
            "tdir": req.direct_time, "D": req.max_delay, "q": req.party_size,
            "alpha_frozen": None, "pair": pick}
    old_len = _route_length(fleet, eff_node, stops)
    new_stops = stops[:p] + [pick] + stops[p:d] + [drop] + stops[d:]

    occ = int(fleet.onboard_q[v])
    prev_node, prev_t = eff_node, eff_time
    for s in new_stops:
        a = prev_t + float(fleet.tau[prev_node, s["node"]])
        if s["kind"] == st.PICKUP:
            if a > s["l"]:
                return False, float("inf")
            if s["e"] - a > fleet.w_m:
                return False, float("inf")
            t = max(a, s["e"])
            occ += s["q"]
            if occ > fleet.capacity:
                return False, float("inf")
        else:
            t = a
            if t > s["l"]:
                return False, float("inf")
            alpha = s["alpha_frozen"] if s["pair"] is None else s["pair"]["serving"]
            if (t - alpha) - s["tdir"] > s["D"]:
                return False, float("inf")
            occ -= s["q"]
            if occ < 0:
                return False, float("inf")
        s["serving"] = t
        prev_node, prev_t = s["node"], t
    return True, _route_length(fleet, eff_node, new_stops) - old_len


def _route_length(fleet, from_node, stops):
    total, prev = 0.0, from_node
    for s in stops:
        total += float(fleet.dist[prev, s["node"]])
        prev = s["node"]
    return total


def naive_best_plan(fleet, v, req, eff_node, eff_time):
    """Exhaustive enumeration over all (p, d); ties by (cost, p, d)."""
    L = int(fleet.sched_len[v])
    best = (float("inf"), -1, -1)
    for p in range(L + 1):
        for d in range(p, L + 1):
            ok, cost = naive_insertion_check(fleet, v, p, d, req, eff_node, eff_time)
            if ok and (cost, p, d) < best:
                best = (cost, p, d)
    return best
