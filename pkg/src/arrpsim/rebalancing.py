"""Probabilistic repositioning of idle vehicles toward likely demand.

Each round ranks zones by the probability that near-term demand exceeds what
is already headed there, then greedily matches the best zone with its nearest
long-idle vehicle, one commitment at a time. Zones holding requests nobody
could serve this round take absolute priority.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import poisson

from arrpsim.state import Fleet, Status

STRATEGIES = ("demand", "demand_and_supply", "uniform")


def tail_probability(k: int, lam: float) -> float:
    """P(X >= k) for X ~ Poisson(lam)."""
    return float(poisson.sf(k - 1, lam))


def zone_rates_now(rates: np.ndarray, clock: float, rate_interval: float,
                   lookahead: float) -> np.ndarray:
    """Expected requests per zone over the lookahead window starting now."""
    n_intervals = rates.shape[1]
    idx = min(int(clock // rate_interval), n_intervals - 1)
    return rates[:, idx] * (lookahead / rate_interval)


def supply_counts(fleet: Fleet, zones, clock: float, lookahead: float) -> np.ndarray:
    """Vehicles already finishing their route in each zone within the window."""
    counts = np.zeros(zones.rows * zones.cols, dtype=np.int64)
    for v in range(fleet.n):
        L = int(fleet.sched_len[v])
        if L == 0:
            continue
        if float(fleet.s_t[v, L - 1]) <= clock + lookahead:
            counts[int(zones.node_zone[fleet.s_node[v, L - 1]])] += 1
    return counts


def eligible_vehicles(fleet: Fleet, clock: float, psi: float):
    """Idle vehicles whose last status change is at least psi seconds old."""
    out = []
    for v in range(fleet.n):
        if fleet.status[v] in (Status.IDLE_WAITING, Status.IDLE_AFTER_REBALANCING) \
                and clock - float(fleet.idle_since[v]) >= psi:
            out.append(v)
    return out


def rebalance_vehicles(fleet: Fleet, matrix, zones, rates: np.ndarray,
                       outstanding: np.ndarray, clock: float, *,
                       strategy: str = "demand_and_supply",
                       psi: float = 300.0, phi: float = 5000.0,
                       lookahead: float = 900.0, rate_interval: float = 900.0):
    """One repositioning round.

    outstanding[z] counts pending requests from zone z that assignment could
    not place this round; such zones rank above every probability score and
    each dispatch covers one of them. Returns (moves, log): moves are
    (vehicle, zone, centroid_node) for vehicles that actually travel, log
    records every commitment for replay.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown rebalancing strategy: {strategy!r}")
    n_zones = zones.rows * zones.cols
    remaining = eligible_vehicles(fleet, clock, psi)
    moves, log = [], []
    if not remaining:
        return moves, log

    if strategy == "uniform":
        lam = np.ones(n_zones)
    else:
        lam = zone_rates_now(rates, clock, rate_interval, lookahead)
    need = np.ones(n_zones, dtype=np.int64)
    if strategy == "demand_and_supply":
        need += supply_counts(fleet, zones, clock, lookahead)
    out = outstanding.astype(np.int64).copy()

    cent = zones.centroid_node
    dist_vz = matrix.dist[np.ix_(fleet.loc_node[remaining], cent)]
    vzone = zones.node_zone[fleet.loc_node[remaining]]

    def commit(i, z, prob):
        v = remaining[i]
        if out[z] > 0:
            out[z] -= 1
        else:
            need[z] += 1
        stays = int(vzone[i]) == z
        if stays:
            fleet.status[v] = Status.IDLE_AFTER_REBALANCING
            fleet.idle_since[v] = clock
            fleet.rebalance_zone[v] = z
        else:
            fleet.status[v] = Status.REBALANCING
            fleet.rebalance_zone[v] = z
            moves.append((v, z, int(cent[z])))
        log.append({"vehicle": v, "zone": z, "prob": prob,
                    "distance": float(dist_vz[i, z]), "moved": not stays})

    while remaining:
        prob = np.where(out > 0, 1.0, poisson.sf(need - 1, lam))
        reachable = dist_vz <= phi
        scored = np.where(reachable.any(axis=0), prob, -1.0)
        z = int(np.argmax(scored))
        if scored[z] <= 0.0:
            # nothing worth chasing; everyone left keeps its current zone
            for i in range(len(remaining)):
                commit(i, int(vzone[i]), 0.0)
            break
        col = np.where(reachable[:, z], dist_vz[:, z], np.inf)
        i = int(np.argmin(col))
        commit(i, z, float(scored[z]))
        del remaining[i]
        dist_vz = np.delete(dist_vz, i, axis=0)
        vzone = np.delete(vzone, i)
    return moves, log
