"""Discrete-epoch service loop: pool requests, assign, reposition, advance.

Every dt seconds the loop admits newly visible requests, runs one greedy
assignment round over everything still pending, repositions long-idle
vehicles, then advances the world to the next epoch. After the demand horizon
it keeps stepping (without repositioning) until every request is completed or
rejected. Committed schedule times are authoritative; motion between stops
replays shortest paths link by link and audits arrivals against the committed
chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from arrpsim.assignment import assign_requests
from arrpsim.network import route_nodes
from arrpsim.rebalancing import rebalance_vehicles
from arrpsim.state import (DROPOFF, PICKUP, TOL, Fleet, InvariantViolation,
                           Request, RequestState, Status)

log = logging.getLogger(__name__)


@dataclass
class LoopParams:
    dt: float = 30.0
    duration: float = 3600.0
    epsilon: float = 1000.0
    strategy: str = "demand_and_supply"
    psi: float = 300.0
    phi: float = 5000.0
    lookahead: float = 900.0
    rate_interval: float = 900.0
    rebalancing: bool = True
    drain_limit: float = 14400.0   # extra seconds allowed to clear the system


@dataclass
class SimResult:
    requests: list
    fleet: Fleet
    events: list | None
    epochs: int
    final_clock: float


class _Driver:
    """Moves vehicles between epochs and executes committed stops."""

    def __init__(self, fleet: Fleet, matrix, graph, zones, by_id, emit):
        self.fleet = fleet
        self.matrix = matrix
        self.zones = zones
        self.by_id = by_id
        self.emit = emit
        self.link_len = {}
        for a, b, ln in zip(graph.link_from, graph.link_to, graph.link_length):
            self.link_len[(int(a), int(b))] = float(ln)
        self.path = [None] * fleet.n   # (nodes, index into nodes) per vehicle

    def _next_hop(self, v: int, target: int) -> int:
        loc = int(self.fleet.loc_node[v])
        cached = self.path[v]
        if cached is not None:
            nodes, i = cached
            if i + 1 < len(nodes) and nodes[i] == loc and nodes[-1] == target:
                self.path[v] = (nodes, i + 1)
                return nodes[i + 1]
        nodes = route_nodes(self.matrix, loc, target)
        self.path[v] = (nodes, 1)
        return nodes[1]

    def _hop(self, v: int, target: int) -> None:
        f = self.fleet
        loc = int(f.loc_node[v])
        t0 = float(f.loc_time[v])
        nxt = self._next_hop(v, target)
        t1 = t0 + self.matrix.link_time_lookup[(loc, nxt)]
        meters = self.link_len[(loc, nxt)]
        cls = f.add_odometer(v, meters)
        f.loc_node[v] = nxt
        f.loc_time[v] = t1
        if self.emit:
            self.emit({"event_type": "vehicle_moved", "time_s": t1,
                       "vehicle_id": v, "node": nxt, "meters": meters,
                       "odometer_class": cls})

    def _execute_stop(self, v: int) -> None:
        f = self.fleet
        rid, kind, node, serving, q = f.pop_front(v)
        req = self.by_id[rid]
        f.loc_time[v] = serving
        if kind == PICKUP:
            req.state = RequestState.ONBOARD
            req.actual_pickup = serving
            if self.emit:
                self.emit({"event_type": "picked_up", "time_s": serving,
                           "request_id": rid, "vehicle_id": v, "node": node})
        else:
            req.state = RequestState.COMPLETED
            req.actual_dropoff = serving
            f.served[v] += 1
            for other in f.onboard[v]:
                r2 = self.by_id[other]
                if r2.actual_pickup < serving:   # strictly positive overlap
                    req.was_shared = True
                    r2.was_shared = True
            if self.emit:
                self.emit({"event_type": "delivered", "time_s": serving,
                           "request_id": rid, "vehicle_id": v, "node": node})
            if int(f.solo_rider[v]) == rid:
                f.solo_rider[v] = -1
            if int(f.sched_len[v]) == 0:
                if int(f.onboard_q[v]) != 0:
                    raise InvariantViolation(
                        f"vehicle {v}: riders onboard with empty schedule")
                f.status[v] = Status.IDLE_WAITING
                f.idle_since[v] = serving

    def advance(self, v: int, t_end: float) -> None:
        f = self.fleet
        while True:
            status = int(f.status[v])
            if status in (Status.IDLE_WAITING, Status.IDLE_AFTER_REBALANCING):
                return
            if status == Status.REBALANCING:
                zone = int(f.rebalance_zone[v])
                target = int(self.zones.centroid_node[zone])
                if int(f.loc_node[v]) == target:
                    t_here = float(f.loc_time[v])
                    f.status[v] = Status.IDLE_AFTER_REBALANCING
                    f.idle_since[v] = t_here
                    if self.emit:
                        self.emit({"event_type": "rebalance_finished",
                                   "time_s": t_here, "vehicle_id": v,
                                   "zone": zone, "node": target})
                    return
                if float(f.loc_time[v]) > t_end:
                    return
                self._hop(v, target)
                continue
            # in service
            L = int(f.sched_len[v])
            if L == 0:
                raise InvariantViolation(f"vehicle {v}: in service with no stops")
            stop_node = int(f.s_node[v, 0])
            serving = float(f.s_t[v, 0])
            if int(f.loc_node[v]) == stop_node:
                if serving > t_end:
                    return   # waiting at the stop across the boundary
                self._execute_stop(v)
                continue
            if float(f.loc_time[v]) > t_end:
                return
            self._hop(v, stop_node)
            if int(f.loc_node[v]) == stop_node:
                gap = abs(float(f.loc_time[v]) - float(f.s_a[v, 0]))
                if gap > TOL:
                    raise InvariantViolation(
                        f"vehicle {v}: arrival drifted {gap:.2e}s from the "
                        f"committed chain")
                f.loc_time[v] = float(f.s_a[v, 0])

    def advance_window(self, t_end: float) -> None:
        for v in range(self.fleet.n):
            self.advance(v, t_end)


def run_simulation(requests, fleet: Fleet, matrix, graph, zones,
                   rates: np.ndarray, params: LoopParams,
                   trace: list | None = None) -> SimResult:
    """Run the full loop; mutates requests and fleet in place."""
    by_id = {r.id: r for r in requests}
    if len(by_id) != len(requests):
        raise ValueError("duplicate request ids")
    order = sorted(requests, key=lambda r: (r.visible_from, r.id))
    n_zones = zones.rows * zones.cols
    emit = trace.append if trace is not None else None
    driver = _Driver(fleet, matrix, graph, zones, by_id, emit)

    clock = 0.0
    vis_i = 0
    carryover: list = []
    epochs = 0
    hard_stop = params.duration + params.drain_limit

    while True:
        if emit:
            emit({"event_type": "epoch", "time_s": clock})
        drain = clock >= params.duration

        while vis_i < len(order) and order[vis_i].visible_from <= clock:
            r = order[vis_i]
            vis_i += 1
            carryover.append(r)
            if emit:
                emit({"event_type": "request_visible", "time_s": clock,
                      "request_id": r.id})
        if drain and vis_i < len(order):
            # the demand horizon has closed; whatever never became visible
            # inside it is out of scope for this run
            for r in order[vis_i:]:
                r.state = RequestState.REJECTED
                if emit:
                    emit({"event_type": "rejected", "time_s": clock,
                          "request_id": r.id})
            vis_i = len(order)

        done, deferred, rejected = assign_requests(
            carryover, fleet, matrix, clock, params.epsilon)
        if emit:
            for req, v, cost in done:
                emit({"event_type": "assigned", "time_s": clock,
                      "request_id": req.id, "vehicle_id": v})
            for req in rejected:
                emit({"event_type": "rejected", "time_s": clock,
                      "request_id": req.id})
        carryover = deferred

        if params.rebalancing and not drain:
            outstanding = np.zeros(n_zones, dtype=np.int64)
            for r in deferred:
                outstanding[int(zones.node_zone[r.origin])] += 1
            moves, _ = rebalance_vehicles(
                fleet, matrix, zones, rates, outstanding, clock,
                strategy=params.strategy, psi=params.psi, phi=params.phi,
                lookahead=params.lookahead, rate_interval=params.rate_interval)
            for v, z, node in moves:
                fleet.loc_time[v] = max(float(fleet.loc_time[v]), clock)
                if emit:
                    emit({"event_type": "rebalance_started", "time_s": clock,
                          "vehicle_id": v, "zone": z, "node": node})

        t_end = clock + params.dt
        driver.advance_window(t_end)
        clock = t_end
        epochs += 1

        if clock >= params.duration:
            if all(r.state in (RequestState.COMPLETED, RequestState.REJECTED)
                   for r in requests):
                break
            if clock > hard_stop:
                raise InvariantViolation(
                    f"open requests remain at t={clock:.0f}s, past the drain limit")
    return SimResult(requests=requests, fleet=fleet, events=trace,
                     epochs=epochs, final_clock=clock)
