"""Request-to-vehicle assignment for one scheduling round.

Requests are handled in a fixed order (earliest pickup, then id) and each is
placed greedily at its cheapest feasible insertion, measured as added route
meters. Idle vehicles win ties against in-service ones whenever their extra
cost is within a configurable margin, which keeps pooling from starving the
idle fleet of easy work.
"""

from __future__ import annotations

import math

import numpy as np

from arrpsim import kernels
from arrpsim.state import MAX_STOPS, Fleet, Request, RequestState, Status

_REACH_DUST = 1e-9   # forgive float dust when pruning by earliest possible arrival


def max_insertion_count(n_stops: int) -> int:
    """Number of (pickup, dropoff) position pairs scanned for a schedule."""
    return (n_stops + 2) * (n_stops + 1) // 2


def build_screening_table(latest, planned) -> np.ndarray:
    """Suffix minimum of per-stop slack (latest minus planned serving).

    table[j] bounds how much delay can be injected at stop j before some stop
    at or after j misses its latest serving time.
    """
    slack = np.asarray(latest, dtype=np.float64) - np.asarray(planned, dtype=np.float64)
    return np.minimum.accumulate(slack[::-1])[::-1].copy()


def sort_pool(pool):
    """Assignment order: earliest pickup first, ids break ties."""
    return sorted(pool, key=lambda r: (r.earliest_pickup, r.id))


def candidate_vehicles(fleet: Fleet, matrix, req: Request, clock: float):
    """Vehicles worth scanning for req: eligible status, free slots, reachable."""
    ok = fleet.status != Status.IN_SERVICE_SOLO
    ok &= fleet.sched_len + 2 <= MAX_STOPS
    if not req.willing_to_share:
        # exclusive riders only board vehicles with nothing else going on
        ok &= (fleet.sched_len == 0) & (fleet.onboard_q == 0)
    idx = np.nonzero(ok)[0]
    eff_node = fleet.loc_node[idx]
    eff_time = np.maximum(fleet.loc_time[idx], clock)
    reach = eff_time + matrix.tau[eff_node, req.origin]
    keep = reach <= req.latest_pickup + _REACH_DUST
    return (idx[keep].astype(np.int32), eff_node[keep].astype(np.int32),
            eff_time[keep])


def feasible_insertion_plans(fleet: Fleet, matrix, v: int, req: Request,
                             clock: float):
    """Every feasible (cost, p, d) for one vehicle, cheapest first."""
    eff_node, eff_time = fleet.effective_position(v, clock)
    L = int(fleet.sched_len[v])
    plans = []
    for p in range(L + 1):
        for d in range(p, L + 1):
            ok, cost = kernels.evaluate_insertion(
                matrix.tau, matrix.dist, *kernels.fleet_arrays(fleet),
                v, eff_node, eff_time,
                req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
                req.party_size, req.direct_time, req.max_delay,
                fleet.w_m, fleet.capacity, p, d)
            if ok:
                plans.append((cost, p, d))
    plans.sort()
    return plans


def assign_requests(pool, fleet: Fleet, matrix, clock: float, epsilon: float):
    """Greedy insertion pass over the pool.

    Returns (assignments, deferred, rejected); assignments are
    (request, vehicle, cost) with the schedule edits already committed.
    Deferred requests stay pending for the next round.
    """
    assignments, deferred, rejected = [], [], []
    for req in sort_pool(pool):
        if clock > req.latest_pickup:
            req.state = RequestState.REJECTED
            rejected.append(req)
            continue
        cand, eff_node, eff_time = candidate_vehicles(fleet, matrix, req, clock)
        if len(cand) == 0:
            deferred.append(req)
            continue

        out_cost = np.empty(len(cand))
        out_p = np.empty(len(cand), dtype=np.int32)
        out_d = np.empty(len(cand), dtype=np.int32)
        kernels.best_insertions(
            matrix.tau, matrix.dist, *kernels.fleet_arrays(fleet),
            cand, eff_node, eff_time,
            req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
            req.party_size, req.direct_time, req.max_delay,
            fleet.w_m, fleet.capacity, out_cost, out_p, out_d)

        best = None        # (cost, vehicle, p, d) over every eligible vehicle
        best_idle = None   # same, restricted to the idle priority class
        for i in range(len(cand)):
            c = float(out_cost[i])
            if math.isinf(c):
                continue
            key = (c, int(cand[i]), int(out_p[i]), int(out_d[i]))
            if best is None or key < best:
                best = key
            if fleet.priority_class(int(cand[i])) == 0 and \
                    (best_idle is None or key < best_idle):
                best_idle = key
        if best is None:
            deferred.append(req)
            continue

        chosen = best
        if best_idle is not None and best_idle[0] - best[0] <= epsilon:
            chosen = best_idle
        cost, v, p, d = chosen
        if fleet.status[v] in (Status.REBALANCING, Status.IDLE_AFTER_REBALANCING):
            fleet.rebalance_zone[v] = -1
        en, et = fleet.effective_position(v, clock)
        fleet.insert_pair(v, p, d, req, en, et)
        req.state = RequestState.ASSIGNED
        req.vehicle = v
        assignments.append((req, v, cost))
    return assignments, deferred, rejected
