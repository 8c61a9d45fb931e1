"""Network module tests against an independent Dijkstra oracle."""

from __future__ import annotations

import heapq

import numpy as np
import pytest

from arrpsim import network


# ---------------------------------------------------------------- oracle

def _dijkstra_oracle(n, links, source):
    """Plain heapq Dijkstra returning (time, distance-along-time-shortest-path)."""
    adj = [[] for _ in range(n)]
    for a, b, length, speed in links:
        adj[a].append((b, length / speed, length))
    tau = [float("inf")] * n
    dist = [float("inf")] * n
    tau[source] = 0.0
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = [False] * n
    while heap:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, dt, dl in adj[u]:
            if tau[u] + dt < tau[v]:
                tau[v] = tau[u] + dt
                dist[v] = dist[u] + dl
                heapq.heappush(heap, (tau[v], v))
    return tau, dist


def _random_connected_graph(rng, n):
    """Random strongly-connected digraph with unique shortest paths (a.s.)."""
    links = []
    seen = set()
    order = rng.permutation(n)
    for i in range(n):  # a cycle through all nodes guarantees connectivity
        a, b = int(order[i]), int(order[(i + 1) % n])
        links.append((a, b, float(rng.uniform(50, 500)), float(rng.uniform(3, 15))))
        seen.add((a, b))
    for _ in range(3 * n):
        a, b = int(rng.integers(n)), int(rng.integers(n))
        if a != b and (a, b) not in seen:
            seen.add((a, b))
            links.append((a, b, float(rng.uniform(50, 500)), float(rng.uniform(3, 15))))
    frm = np.array([l[0] for l in links], dtype=np.int32)
    to = np.array([l[1] for l in links], dtype=np.int32)
    length = np.array([l[2] for l in links], dtype=np.float64)
    speed = np.array([l[3] for l in links], dtype=np.float64)
    x = rng.uniform(0, 1000, n)
    y = rng.uniform(0, 1000, n)
    ids = np.arange(n, dtype=np.int64)
    graph = network.RoadGraph(x, y, frm, to, length, speed, ids,
                              {int(i): int(i) for i in ids})
    return graph, links


# ---------------------------------------------------------------- all pairs

def test_all_pairs_matches_dijkstra_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = int(rng.integers(15, 40))
        graph, links = _random_connected_graph(rng, n)
        m = network.all_pairs_shortest(graph)
        for s in range(n):
            tau_o, dist_o = _dijkstra_oracle(n, links, s)
            np.testing.assert_allclose(m.tau[s], tau_o, rtol=0, atol=1e-9)
            np.testing.assert_allclose(m.dist[s], dist_o, rtol=0, atol=1e-6)


def test_matrix_invariants_on_random_graph():
    rng = np.random.default_rng(11)
    graph, _ = _random_connected_graph(rng, 25)
    m = network.all_pairs_shortest(graph)
    n = graph.n_nodes
    assert np.all(np.diag(m.tau) == 0.0)
    assert np.all(np.diag(m.dist) == 0.0)
    assert np.all(m.tau >= 0.0)
    assert np.all(m.dist >= 0.0)
    # triangle inequality on travel times
    for k in range(n):
        via = m.tau[:, [k]] + m.tau[[k], :]
        assert np.all(m.tau <= via + 1e-9)


def test_grid_graph_all_pairs():
    g = network.build_grid_graph(2000, 2000, 500, 10.0)
    assert g.n_nodes == 25
    m = network.all_pairs_shortest(g)
    np.testing.assert_allclose(m.tau, m.tau.T, atol=1e-9)  # symmetric lattice
    # uniform speed: distance along any time-shortest path is time * speed
    np.testing.assert_allclose(m.dist, m.tau * 10.0, atol=1e-6)
    # corner to corner: manhattan distance
    assert m.tau[0, 24] == pytest.approx(4000 / 10.0)


def test_unreachable_pairs_are_inf():
    # two disconnected 2-node components
    x = np.array([0.0, 1.0, 10.0, 11.0])
    y = np.zeros(4)
    frm = np.array([0, 1, 2, 3], dtype=np.int32)
    to = np.array([1, 0, 3, 2], dtype=np.int32)
    length = np.full(4, 100.0)
    speed = np.full(4, 10.0)
    ids = np.arange(4, dtype=np.int64)
    g = network.RoadGraph(x, y, frm, to, length, speed, ids, {i: i for i in range(4)})
    m = network.all_pairs_shortest(g)
    assert np.isinf(m.tau[0, 2]) and np.isinf(m.dist[0, 2])
    assert np.isfinite(m.tau[0, 1])
    with pytest.raises(network.NetworkError):
        network.route_nodes(m, 0, 2)


def test_route_nodes_sums_match_matrix():
    rng = np.random.default_rng(3)
    graph, links = _random_connected_graph(rng, 20)
    m = network.all_pairs_shortest(graph)
    times = {(a, b): length / speed for a, b, length, speed in links}
    lengths = {(a, b): length for a, b, length, speed in links}
    for s in range(0, 20, 3):
        for t in range(0, 20, 4):
            route = network.route_nodes(m, s, t)
            assert route[0] == s and route[-1] == t
            tt = sum(times[(route[i], route[i + 1])] for i in range(len(route) - 1))
            dd = sum(lengths[(route[i], route[i + 1])] for i in range(len(route) - 1))
            assert tt == pytest.approx(m.tau[s, t], abs=1e-9)
            assert dd == pytest.approx(m.dist[s, t], abs=1e-6)


def test_scale_travel_times():
    g = network.build_grid_graph(1000, 1000, 500, 10.0)
    m = network.all_pairs_shortest(g)
    m2 = network.scale_travel_times(m, 1.5)
    np.testing.assert_allclose(m2.tau, m.tau * 1.5, atol=1e-9)
    np.testing.assert_array_equal(m2.dist, m.dist)
    assert m2.pred is m.pred
    with pytest.raises(ValueError):
        network.scale_travel_times(m, 0.0)


# ---------------------------------------------------------------- snapping / zones

def test_nearest_node_tie_breaks_to_lowest_index():
    x = np.array([0.0, 2.0, 0.0])
    y = np.array([0.0, 0.0, 2.0])
    g = network.RoadGraph(x, y, np.array([0], dtype=np.int32), np.array([1], dtype=np.int32),
                          np.array([10.0]), np.array([1.0]),
                          np.arange(3, dtype=np.int64), {i: i for i in range(3)})
    assert network.nearest_node(g, 1.0, 1.0) == 0  # equidistant from all three


def test_zone_partition_grid():
    g = network.build_grid_graph(4000, 4000, 500, 10.0)
    zones = network.build_zones(g, 1000.0)
    assert zones.rows == 4 and zones.cols == 4
    # row-major ids and boundary-to-lower-cell rule
    assert zones.zone_of_xy(0.0, 0.0) == 0
    assert zones.zone_of_xy(1000.0, 0.0) == 0
    assert zones.zone_of_xy(1000.1, 0.0) == 1
    assert zones.zone_of_xy(500.0, 1500.0) == 4
    # node assignment agrees with coordinate rule
    for i in range(g.n_nodes):
        assert zones.node_zone[i] == zones.zone_of_xy(g.node_x[i], g.node_y[i])
    # centroids land inside their zone
    for z in range(zones.n_zones):
        cn = int(zones.centroid_node[z])
        assert zones.node_zone[cn] == z


def test_load_network_roundtrip_and_errors(tmp_path):
    nodes = tmp_path / "nodes.csv"
    links = tmp_path / "links.csv"
    nodes.write_text("id,x_m,y_m\n10,0,0\n20,100,0\n30,200,0\n")
    links.write_text("from,to,length_m,speed_mps\n10,20,100,10\n20,30,100,10\n30,10,250,10\n")
    g = network.load_network(str(nodes), str(links))
    assert g.n_nodes == 3
    assert g.id_index[20] == 1  # external ids remapped in sorted order
    m = network.all_pairs_shortest(g)
    assert m.tau[0, 2] == pytest.approx(20.0)

    bad = tmp_path / "bad.csv"
    bad.write_text("id,x_m\n1,0\n")
    with pytest.raises(network.NetworkError):
        network.load_network(str(bad), str(links))
    bad_links = tmp_path / "bad_links.csv"
    bad_links.write_text("from,to,length_m,speed_mps\n10,99,100,10\n")
    with pytest.raises(network.NetworkError):
        network.load_network(str(nodes), str(bad_links))
    neg = tmp_path / "neg_links.csv"
    neg.write_text("from,to,length_m,speed_mps\n10,20,-5,10\n")
    with pytest.raises(network.NetworkError):
        network.load_network(str(nodes), str(neg))
