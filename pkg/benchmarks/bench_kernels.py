"""Micro-benchmark: compiled insertion kernel against the pure-Python twin.

Builds a fleet with committed schedules, then times batched best-insertion
scans for a stream of random requests. Both implementations see identical
inputs; outputs are compared exactly before timings are reported.
"""

from __future__ import annotations

import argparse
import logging
import time

import numpy as np

from arrpsim import network
from arrpsim import state as st
from arrpsim import _insertion_py as pure

try:
    from arrpsim import _insertion_c as compiled
except ImportError:
    compiled = None

log = logging.getLogger("bench_kernels")


def fleet_arrays(fleet):
    return (fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l, fleet.s_a,
            fleet.s_t, fleet.s_pair, fleet.s_alpha, fleet.s_tdir, fleet.s_D,
            fleet.s_q, fleet.s_occ_after, fleet.sched_len, fleet.onboard_q)


def random_request(rng, matrix, n_nodes, rid):
    o = int(rng.integers(n_nodes))
    d = int(rng.integers(n_nodes))
    while d == o:
        d = int(rng.integers(n_nodes))
    e = float(rng.uniform(0.0, 900.0))
    return st.Request(
        id=rid, origin=o, dest=d, earliest_pickup=e, latest_pickup=e + 420.0,
        party_size=int(rng.choice([1, 1, 1, 2])), willing_to_share=True,
        advance=False, placed_at=e, direct_time=float(matrix.tau[o, d]),
        direct_dist=float(matrix.dist[o, d]), max_delay=900.0, visible_from=e)


def build_fleet(rng, matrix, n_nodes, n_veh, committed, capacity):
    starts = rng.integers(n_nodes, size=n_veh)
    fleet = st.Fleet(starts, capacity, 600.0, matrix.tau, matrix.dist)
    cand = np.empty(1, dtype=np.int32)
    eff_node = np.empty(1, dtype=np.int32)
    eff_time = np.empty(1)
    out_cost = np.empty(1)
    out_p = np.empty(1, dtype=np.int32)
    out_d = np.empty(1, dtype=np.int32)
    placed = 0
    rid = 0
    while placed < committed and rid < committed * 40:
        req = random_request(rng, matrix, n_nodes, rid)
        rid += 1
        v = int(rng.integers(n_veh))
        cand[0] = v
        eff_node[0], eff_time[0] = fleet.effective_position(v, 0.0)
        pure.best_insertions(
            matrix.tau, matrix.dist, *fleet_arrays(fleet),
            cand, eff_node, eff_time,
            req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
            req.party_size, req.direct_time, req.max_delay,
            fleet.w_m, fleet.capacity, out_cost, out_p, out_d)
        if np.isfinite(out_cost[0]):
            fleet.insert_pair(v, int(out_p[0]), int(out_d[0]), req,
                              int(eff_node[0]), float(eff_time[0]))
            placed += 1
    return fleet


def run_batches(impl, fleet, matrix, requests):
    n_veh = fleet.n
    cand = np.arange(n_veh, dtype=np.int32)
    eff_node = fleet.loc_node.astype(np.int32).copy()
    eff_time = fleet.loc_time.copy()
    out_cost = np.empty(n_veh)
    out_p = np.empty(n_veh, dtype=np.int32)
    out_d = np.empty(n_veh, dtype=np.int32)
    results = []
    t0 = time.perf_counter()
    for req in requests:
        impl.best_insertions(
            matrix.tau, matrix.dist, *fleet_arrays(fleet),
            cand, eff_node, eff_time,
            req.origin, req.dest, req.earliest_pickup, req.latest_pickup,
            req.party_size, req.direct_time, req.max_delay,
            fleet.w_m, fleet.capacity, out_cost, out_p, out_d)
        results.append((out_cost.copy(), out_p.copy(), out_d.copy()))
    return time.perf_counter() - t0, results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vehicles", type=int, default=400)
    parser.add_argument("--requests", type=int, default=200)
    parser.add_argument("--committed", type=int, default=1200)
    parser.add_argument("--capacity", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rng = np.random.default_rng(args.seed)
    graph = network.build_grid_graph(20000.0, 20000.0, 500.0, 10.0)
    matrix = network.all_pairs_shortest(graph)
    fleet = build_fleet(rng, matrix, graph.n_nodes, args.vehicles,
                        args.committed, args.capacity)
    requests = [random_request(rng, matrix, graph.n_nodes, 10_000 + i)
                for i in range(args.requests)]
    evals = args.vehicles * args.requests
    mean_len = float(fleet.sched_len.mean())
    log.info("fleet %d vehicles, mean schedule length %.1f, %d evaluations",
             args.vehicles, mean_len, evals)

    t_pure, r_pure = run_batches(pure, fleet, matrix, requests)
    log.info("pure python : %7.3f s  (%6.1f us/eval)",
             t_pure, 1e6 * t_pure / evals)

    if compiled is None:
        log.info("compiled extension not built; nothing to compare")
        return

    t_c, r_c = run_batches(compiled, fleet, matrix, requests)
    log.info("compiled    : %7.3f s  (%6.1f us/eval)",
             t_c, 1e6 * t_c / evals)

    for (ca, pa, da), (cb, pb, db) in zip(r_pure, r_c):
        assert np.array_equal(pa, pb) and np.array_equal(da, db)
        same = np.isinf(ca) & np.isinf(cb)
        assert np.array_equal(ca[~same], cb[~same])
    log.info("outputs identical; speedup %.1fx", t_pure / t_c)


if __name__ == "__main__":
    main()
