"""Core simulation state: requests, vehicles, and array-backed stop schedules.

Schedules live in flat per-vehicle arrays (fixed slot count) so the insertion
kernels can scan them without object overhead. All times are seconds, all
distances meters. Serving times follow the standard chain: arrival at a stop
is departure from the previous one plus matrix travel time; pickups wait for
their earliest time, dropoffs are served on arrival.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TOL = 1e-6          # audit tolerance for re-checked committed times (seconds/meters)
MAX_STOPS = 64      # per-vehicle schedule slots; vehicles at the cap take no new requests

PICKUP = 0
DROPOFF = 1


class Status(enum.IntEnum):
    IDLE_WAITING = 0
    REBALANCING = 1
    IDLE_AFTER_REBALANCING = 2
    IN_SERVICE_SOLO = 3
    IN_SERVICE_SHARED = 4


# Idle-priority classes for assignment; solo-serving vehicles take no new requests.
IDLE_CLASS = (Status.IDLE_WAITING, Status.REBALANCING, Status.IDLE_AFTER_REBALANCING)


class RequestState(enum.IntEnum):
    PENDING = 0
    ASSIGNED = 1
    ONBOARD = 2
    COMPLETED = 3
    REJECTED = 4


class InvariantViolation(RuntimeError):
    """A committed schedule or executed stop broke a hard constraint."""


@dataclass
class Request:
    id: int
    origin: int
    dest: int
    earliest_pickup: float
    latest_pickup: float
    party_size: int
    willing_to_share: bool
    advance: bool
    placed_at: float
    direct_time: float
    direct_dist: float
    max_delay: float
    visible_from: float
    state: RequestState = RequestState.PENDING
    vehicle: int = -1
    actual_pickup: float = math.nan
    actual_dropoff: float = math.nan
    was_shared: bool = False


class Fleet:
    """Vehicle state arrays plus the packed stop schedules."""

    def __init__(self, start_nodes, capacity: int, w_m: float,
                 tau: np.ndarray, dist: np.ndarray, t0: float = 0.0):
        n = len(start_nodes)
        self.n = n
        self.capacity = int(capacity)
        self.w_m = float(w_m)
        self.tau = tau
        self.dist = dist

        self.loc_node = np.asarray(start_nodes, dtype=np.int32).copy()
        self.loc_time = np.full(n, t0, dtype=np.float64)
        self.status = np.full(n, Status.IDLE_WAITING, dtype=np.int8)
        self.idle_since = np.full(n, t0, dtype=np.float64)
        self.onboard_q = np.zeros(n, dtype=np.int16)
        self.rebalance_zone = np.full(n, -1, dtype=np.int32)
        self.solo_rider = np.full(n, -1, dtype=np.int32)
        self.served = np.zeros(n, dtype=np.int32)
        self.max_occ = np.zeros(n, dtype=np.int16)
        # odometer classes: 0 occupied, 1 empty pickup approach, 2 empty rebalancing
        self.odometer = np.zeros((n, 3), dtype=np.float64)
        self.onboard = [set() for _ in range(n)]

        self.sched_len = np.zeros(n, dtype=np.int32)
        shape = (n, MAX_STOPS)
        self.s_req = np.full(shape, -1, dtype=np.int32)
        self.s_kind = np.zeros(shape, dtype=np.int8)
        self.s_node = np.zeros(shape, dtype=np.int32)
        self.s_e = np.zeros(shape, dtype=np.float64)      # earliest serving bound
        self.s_l = np.zeros(shape, dtype=np.float64)      # latest serving bound
        self.s_a = np.zeros(shape, dtype=np.float64)      # arrival
        self.s_t = np.zeros(shape, dtype=np.float64)      # serving
        self.s_pair = np.full(shape, -1, dtype=np.int32)  # partner slot, -1 once executed
        self.s_alpha = np.zeros(shape, dtype=np.float64)  # pickup serving time (dropoffs)
        self.s_tdir = np.zeros(shape, dtype=np.float64)
        self.s_D = np.zeros(shape, dtype=np.float64)
        self.s_q = np.zeros(shape, dtype=np.int16)
        self.s_occ_after = np.zeros(shape, dtype=np.int16)

    # ------------------------------------------------------------- helpers

    def effective_position(self, v: int, clock: float):
        """Node the vehicle is committed to and the time it is available there."""
        return int(self.loc_node[v]), max(float(self.loc_time[v]), clock)

    def priority_class(self, v: int) -> int:
        """0 for idle-priority statuses, 1 for shared in-service, -1 ineligible."""
        s = self.status[v]
        if s in IDLE_CLASS:
            return 0
        if s == Status.IN_SERVICE_SHARED:
            return 1
        return -1

    def schedule_route_length(self, v: int, from_node: int) -> float:
        """Meters from from_node through every scheduled stop."""
        total = 0.0
        prev = from_node
        for j in range(int(self.sched_len[v])):
            nd = int(self.s_node[v, j])
            total += float(self.dist[prev, nd])
            prev = nd
        return total

    # ------------------------------------------------------------ propagate

    def propagate(self, v: int, eff_node: int, eff_time: float, check: bool = True) -> None:
        """Recompute arrival/serving times for the whole schedule of v.

        Raises InvariantViolation when a committed window, delay bound,
        occupancy cap, or vehicle wait bound breaks (check=True).
        """
        L = int(self.sched_len[v])
        prev_node = eff_node
        prev_t = eff_time
        occ = int(self.onboard_q[v])
        tau = self.tau
        for j in range(L):
            nd = int(self.s_node[v, j])
            a = prev_t + tau[prev_node, nd]
            if self.s_kind[v, j] == PICKUP:
                t = a if a > self.s_e[v, j] else float(self.s_e[v, j])
                occ += int(self.s_q[v, j])
                if check:
                    if a > self.s_l[v, j] + TOL:
                        raise InvariantViolation(
                            f"vehicle {v} stop {j}: pickup window missed "
                            f"({a:.3f} > {self.s_l[v, j]:.3f})")
                    if self.s_e[v, j] - a > self.w_m + TOL:
                        raise InvariantViolation(
                            f"vehicle {v} stop {j}: vehicle wait {self.s_e[v, j] - a:.3f} "
                            f"exceeds {self.w_m}")
                    if occ > self.capacity:
                        raise InvariantViolation(f"vehicle {v} stop {j}: occupancy {occ}")
            else:
                t = a
                pair = int(self.s_pair[v, j])
                alpha = float(self.s_t[v, pair]) if pair >= 0 else float(self.s_alpha[v, j])
                self.s_alpha[v, j] = alpha
                occ -= int(self.s_q[v, j])
                if check:
                    if t > self.s_l[v, j] + TOL:
                        raise InvariantViolation(
                            f"vehicle {v} stop {j}: dropoff window missed")
                    if (t - alpha) - self.s_tdir[v, j] > self.s_D[v, j] + TOL:
                        raise InvariantViolation(
                            f"vehicle {v} stop {j}: detour delay exceeds bound")
            self.s_a[v, j] = a
            self.s_t[v, j] = t
            if self.s_kind[v, j] == PICKUP:
                self.s_alpha[v, j] = t
            self.s_occ_after[v, j] = occ
            prev_node = nd
            prev_t = t

    # --------------------------------------------------------------- edits

    def insert_pair(self, v: int, p: int, d: int, req: Request,
                    eff_node: int, eff_time: float) -> None:
        """Insert req's pickup before original stop p and dropoff before stop d.

        p in [0, L], d in [p, L]; final slots are p (pickup) and d+1 (dropoff).
        Re-propagates and re-checks the whole schedule afterwards.
        """
        L = int(self.sched_len[v])
        if not (0 <= p <= d <= L):
            raise ValueError(f"bad insertion positions p={p} d={d} L={L}")
        if L + 2 > MAX_STOPS:
            raise InvariantViolation(f"vehicle {v}: schedule slots exhausted")

        fields = (self.s_req, self.s_kind, self.s_node, self.s_e, self.s_l, self.s_a,
                  self.s_t, self.s_pair, self.s_alpha, self.s_tdir, self.s_D,
                  self.s_q, self.s_occ_after)
        for arr in fields:
            arr[v, d + 2:L + 2] = arr[v, d:L].copy()
            arr[v, p + 1:d + 1] = arr[v, p:d].copy()
        # remap surviving partner indices to the shifted layout
        for j in list(range(0, p)) + list(range(p + 1, d + 1)) + list(range(d + 2, L + 2)):
            q = int(self.s_pair[v, j])
            if q >= 0:
                self.s_pair[v, j] = q + (1 if q >= p else 0) + (1 if q >= d else 0)

        self.s_req[v, p] = req.id
        self.s_kind[v, p] = PICKUP
        self.s_node[v, p] = req.origin
        self.s_e[v, p] = req.earliest_pickup
        self.s_l[v, p] = req.latest_pickup
        self.s_pair[v, p] = d + 1
        self.s_tdir[v, p] = req.direct_time
        self.s_D[v, p] = req.max_delay
        self.s_q[v, p] = req.party_size

        self.s_req[v, d + 1] = req.id
        self.s_kind[v, d + 1] = DROPOFF
        self.s_node[v, d + 1] = req.dest
        self.s_e[v, d + 1] = req.earliest_pickup + req.direct_time
        self.s_l[v, d + 1] = req.latest_pickup + req.direct_time + req.max_delay
        self.s_pair[v, d + 1] = p
        self.s_tdir[v, d + 1] = req.direct_time
        self.s_D[v, d + 1] = req.max_delay
        self.s_q[v, d + 1] = req.party_size

        self.sched_len[v] = L + 2
        # the committed chain is anchored here; motion departs from the anchor
        self.loc_node[v] = eff_node
        self.loc_time[v] = eff_time
        self.propagate(v, eff_node, eff_time, check=True)

        if not req.willing_to_share:
            self.solo_rider[v] = req.id
            self.status[v] = Status.IN_SERVICE_SOLO
        elif self.status[v] != Status.IN_SERVICE_SOLO:
            self.status[v] = Status.IN_SERVICE_SHARED

    def pop_front(self, v: int):
        """Remove and return the executed head stop (req, kind, node, serving, q)."""
        L = int(self.sched_len[v])
        if L == 0:
            raise InvariantViolation(f"vehicle {v}: no stop to execute")
        out = (int(self.s_req[v, 0]), int(self.s_kind[v, 0]), int(self.s_node[v, 0]),
               float(self.s_t[v, 0]), int(self.s_q[v, 0]))
        if self.s_kind[v, 0] == PICKUP:
            pair = int(self.s_pair[v, 0])
            if pair <= 0 or self.s_kind[v, pair] != DROPOFF:
                raise InvariantViolation(f"vehicle {v}: pickup without later dropoff")
            # freeze the actual pickup time on the partner before unlinking
            self.s_alpha[v, pair] = self.s_t[v, 0]
            self.s_pair[v, pair] = -1
            self.onboard_q[v] += self.s_q[v, 0]
            self.onboard[v].add(int(self.s_req[v, 0]))
            if self.onboard_q[v] > self.capacity:
                raise InvariantViolation(f"vehicle {v}: occupancy over capacity")
            if self.onboard_q[v] > self.max_occ[v]:
                self.max_occ[v] = self.onboard_q[v]
        else:
            if int(self.s_pair[v, 0]) != -1:
                raise InvariantViolation(f"vehicle {v}: dropoff before its pickup")
            self.onboard_q[v] -= self.s_q[v, 0]
            self.onboard[v].discard(int(self.s_req[v, 0]))
            if self.onboard_q[v] < 0:
                raise InvariantViolation(f"vehicle {v}: negative occupancy")

        fields = (self.s_req, self.s_kind, self.s_node, self.s_e, self.s_l, self.s_a,
                  self.s_t, self.s_pair, self.s_alpha, self.s_tdir, self.s_D,
                  self.s_q, self.s_occ_after)
        for arr in fields:
            arr[v, 0:L - 1] = arr[v, 1:L].copy()
        for j in range(L - 1):
            if self.s_pair[v, j] >= 0:
                self.s_pair[v, j] -= 1
        self.sched_len[v] = L - 1
        return out

    def add_odometer(self, v: int, meters: float) -> int:
        """Accrue meters in the class implied by current occupancy/status."""
        if self.onboard_q[v] > 0:
            cls = 0
        elif self.status[v] == Status.REBALANCING:
            cls = 2
        else:
            cls = 1
        self.odometer[v, cls] += meters
        return cls
