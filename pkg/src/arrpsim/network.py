"""Road network: graph construction/loading, all-pairs travel matrix, zone grid."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

log = logging.getLogger(__name__)

UNREACHABLE = np.inf
_NO_PRED = -9999  # scipy's predecessor sentinel


class NetworkError(ValueError):
    """Malformed network or request input."""


@dataclass
class RoadGraph:
    """Directed road graph with per-link length and speed."""

    node_x: np.ndarray          # meters
    node_y: np.ndarray
    link_from: np.ndarray       # internal node indices
    link_to: np.ndarray
    link_length: np.ndarray     # meters
    link_speed: np.ndarray      # m/s
    node_ids: np.ndarray        # external ids, sorted ascending
    id_index: dict = field(repr=False, default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.node_x)

    def link_time(self) -> np.ndarray:
        return self.link_length / self.link_speed


@dataclass
class TravelMatrix:
    """All-pairs travel times and distances along time-shortest paths."""

    tau: np.ndarray    # seconds, inf when unreachable
    dist: np.ndarray   # meters along the time-shortest path
    pred: np.ndarray   # predecessor on the time-shortest path, _NO_PRED at source
    link_time_lookup: dict = field(repr=False, default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.tau.shape[0]


def build_grid_graph(width_m: float, height_m: float, spacing_m: float,
                     speed_mps: float) -> RoadGraph:
    """Build a 4-neighbor lattice covering [0, width] x [0, height]."""
    nx = int(round(width_m / spacing_m)) + 1
    ny = int(round(height_m / spacing_m)) + 1
    xs = np.arange(nx, dtype=np.float64) * spacing_m
    ys = np.arange(ny, dtype=np.float64) * spacing_m
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    node_x = gx.ravel()
    node_y = gy.ravel()

    frm, to = [], []
    for r in range(ny):
        for c in range(nx):
            i = r * nx + c
            if c + 1 < nx:
                j = i + 1
                frm += [i, j]
                to += [j, i]
            if r + 1 < ny:
                j = i + nx
                frm += [i, j]
                to += [j, i]
    frm = np.asarray(frm, dtype=np.int32)
    to = np.asarray(to, dtype=np.int32)
    length = np.full(len(frm), spacing_m, dtype=np.float64)
    speed = np.full(len(frm), speed_mps, dtype=np.float64)
    ids = np.arange(len(node_x), dtype=np.int64)
    return RoadGraph(node_x, node_y, frm, to, length, speed, ids,
                     {int(i): int(i) for i in ids})


def load_network(nodes_path: str, links_path: str) -> RoadGraph:
    """Load nodes.csv (id,x_m,y_m) and links.csv (from,to,length_m,speed_mps)."""
    ids, xs, ys = [], [], []
    with open(nodes_path, newline="") as f:
        reader = csv.DictReader(f)
        _require_columns(reader, ["id", "x_m", "y_m"], nodes_path)
        for lineno, row in enumerate(reader, start=2):
            try:
                ids.append(int(row["id"]))
                xs.append(float(row["x_m"]))
                ys.append(float(row["y_m"]))
            except (TypeError, ValueError) as exc:
                raise NetworkError(f"{nodes_path}:{lineno}: bad node row: {exc}")
    if not ids:
        raise NetworkError(f"{nodes_path}: no nodes")
    order = np.argsort(np.asarray(ids, dtype=np.int64), kind="stable")
    node_ids = np.asarray(ids, dtype=np.int64)[order]
    if len(np.unique(node_ids)) != len(node_ids):
        raise NetworkError(f"{nodes_path}: duplicate node ids")
    node_x = np.asarray(xs, dtype=np.float64)[order]
    node_y = np.asarray(ys, dtype=np.float64)[order]
    id_index = {int(v): i for i, v in enumerate(node_ids)}

    frm, to, length, speed = [], [], [], []
    with open(links_path, newline="") as f:
        reader = csv.DictReader(f)
        _require_columns(reader, ["from", "to", "length_m", "speed_mps"], links_path)
        for lineno, row in enumerate(reader, start=2):
            try:
                a = id_index[int(row["from"])]
                b = id_index[int(row["to"])]
                ln = float(row["length_m"])
                sp = float(row["speed_mps"])
            except KeyError as exc:
                raise NetworkError(f"{links_path}:{lineno}: unknown node id {exc}")
            except (TypeError, ValueError) as exc:
                raise NetworkError(f"{links_path}:{lineno}: bad link row: {exc}")
            if ln <= 0 or sp <= 0:
                raise NetworkError(f"{links_path}:{lineno}: length and speed must be positive")
            frm.append(a)
            to.append(b)
            length.append(ln)
            speed.append(sp)
    if not frm:
        raise NetworkError(f"{links_path}: no links")
    return RoadGraph(node_x, node_y,
                     np.asarray(frm, dtype=np.int32), np.asarray(to, dtype=np.int32),
                     np.asarray(length, dtype=np.float64), np.asarray(speed, dtype=np.float64),
                     node_ids, id_index)


def _require_columns(reader: csv.DictReader, cols: list, path: str) -> None:
    missing = [c for c in cols if reader.fieldnames is None or c not in reader.fieldnames]
    if missing:
        raise NetworkError(f"{path}: missing columns {missing}")


def all_pairs_shortest(graph: RoadGraph) -> TravelMatrix:
    """All-pairs time-shortest paths; distance is measured along those paths.

    Travel times come from a per-source Dijkstra sweep. Distances are then
    accumulated along the predecessor trees with pointer doubling, so no
    second shortest-path run is needed.
    """
    n = graph.n_nodes
    t = graph.link_time()
    adj = csr_matrix((t, (graph.link_from, graph.link_to)), shape=(n, n))
    tau, pred = dijkstra(adj, directed=True, return_predecessors=True)

    # Dense link-length lookup; duplicate links keep the fastest one, matching
    # what dijkstra saw (csr_matrix sums duplicates, so forbid them instead).
    pairs = set(zip(graph.link_from.tolist(), graph.link_to.tolist()))
    if len(pairs) != len(graph.link_from):
        raise NetworkError("duplicate links between the same node pair")
    edge_len = np.full((n, n), np.inf, dtype=np.float64)
    edge_len[graph.link_from, graph.link_to] = graph.link_length

    idx = np.arange(n, dtype=np.int64)
    p = pred.astype(np.int64, copy=True)
    root = p == _NO_PRED
    p[root] = np.broadcast_to(idx, (n, n))[root]  # roots point to themselves
    d = edge_len[p, np.broadcast_to(idx, (n, n))]
    d[root] = 0.0
    d[np.isinf(tau)] = np.inf
    # Pointer doubling: after k rounds every node has summed 2^k path links.
    for _ in range(max(1, int(math.ceil(math.log2(max(n, 2)))) + 1)):
        if np.array_equal(p, np.take_along_axis(p, p, axis=1)):
            break
        d = d + np.take_along_axis(d, p, axis=1)
        p = np.take_along_axis(p, p, axis=1)
    d[np.isinf(tau)] = np.inf

    lt = {(int(a), int(b)): float(w)
          for a, b, w in zip(graph.link_from, graph.link_to, t)}
    return TravelMatrix(tau=tau, dist=d, pred=pred, link_time_lookup=lt)


def scale_travel_times(matrix: TravelMatrix, factor: float) -> TravelMatrix:
    """Uniform congestion scaling: times stretch, paths and distances do not."""
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    lt = {k: v * factor for k, v in matrix.link_time_lookup.items()}
    return TravelMatrix(tau=matrix.tau * factor, dist=matrix.dist,
                        pred=matrix.pred, link_time_lookup=lt)


def route_nodes(matrix: TravelMatrix, a: int, b: int) -> list:
    """Node sequence of the time-shortest path a -> b, inclusive of both ends."""
    if a == b:
        return [a]
    if not np.isfinite(matrix.tau[a, b]):
        raise NetworkError(f"no path from node {a} to node {b}")
    out = [b]
    cur = b
    while cur != a:
        cur = int(matrix.pred[a, cur])
        out.append(cur)
    out.reverse()
    return out


def nearest_node(graph: RoadGraph, x: float, y: float) -> int:
    """Snap a coordinate to the nearest node (ties -> lowest index)."""
    d2 = (graph.node_x - x) ** 2 + (graph.node_y - y) ** 2
    return int(np.argmin(d2))


@dataclass
class ZonePartition:
    """Row-major grid of square zones over the network bounding box."""

    rows: int
    cols: int
    size_m: float
    x0: float
    y0: float
    node_zone: np.ndarray      # zone index per node
    centroid_node: np.ndarray  # representative node per zone
    center_x: np.ndarray
    center_y: np.ndarray

    @property
    def n_zones(self) -> int:
        return self.rows * self.cols

    def zone_of_xy(self, x: float, y: float) -> int:
        # Boundary coordinates belong to the lower-index cell.
        col = min(max(int(math.ceil((x - self.x0) / self.size_m)) - 1, 0), self.cols - 1)
        row = min(max(int(math.ceil((y - self.y0) / self.size_m)) - 1, 0), self.rows - 1)
        return row * self.cols + col


def build_zones(graph: RoadGraph, zone_size_m: float) -> ZonePartition:
    """Partition the graph bounding box into square zones."""
    x0 = float(graph.node_x.min())
    y0 = float(graph.node_y.min())
    width = float(graph.node_x.max()) - x0
    height = float(graph.node_y.max()) - y0
    cols = max(1, int(math.ceil(width / zone_size_m - 1e-9)))
    rows = max(1, int(math.ceil(height / zone_size_m - 1e-9)))

    col = np.ceil((graph.node_x - x0) / zone_size_m).astype(np.int64) - 1
    row = np.ceil((graph.node_y - y0) / zone_size_m).astype(np.int64) - 1
    col = np.clip(col, 0, cols - 1)
    row = np.clip(row, 0, rows - 1)
    node_zone = (row * cols + col).astype(np.int32)

    zr, zc = np.divmod(np.arange(rows * cols), cols)
    cx = x0 + (zc + 0.5) * zone_size_m
    cy = y0 + (zr + 0.5) * zone_size_m
    centroid = np.empty(rows * cols, dtype=np.int32)
    for z in range(rows * cols):
        centroid[z] = nearest_node(graph, cx[z], cy[z])
    return ZonePartition(rows=rows, cols=cols, size_m=zone_size_m, x0=x0, y0=y0,
                         node_zone=node_zone, centroid_node=centroid,
                         center_x=cx, center_y=cy)
