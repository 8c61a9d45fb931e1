"""Scenario assembly: configuration, world building, demand, runs, sweeps.

Demand is synthesized so that the random draws behind each request (endpoints,
timing, party size, preference coin flips) are identical for a given seed no
matter which sharing fraction, advance fraction, or horizon a cell uses; those
knobs only reinterpret the draws. That makes cells of a sweep directly
comparable request by request.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from arrpsim import metrics as mx
from arrpsim.network import (NetworkError, all_pairs_shortest, build_grid_graph,
                             build_zones, load_network, nearest_node,
                             scale_travel_times)
from arrpsim.simulation import LoopParams, run_simulation
from arrpsim.state import Fleet, Request, RequestState

LOS_TIERS = {
    "strict": (300.0, 600.0),
    "neutral": (420.0, 900.0),
    "flexible": (600.0, 1200.0),
}
TRAFFIC_SCALE = {"light": 1.0, "normal": 1.5, "congested": 2.0}

SWEEP_CAPACITIES = (2, 4, 7, 10)
SWEEP_HORIZONS = (0.0, 300.0, 900.0, 1800.0, 3600.0)
SWEEP_FRACTIONS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)
SWEEP_LOS = ("strict", "neutral", "flexible")
SWEEP_TRAFFIC = ("light", "normal", "congested")

PARTY_SIZES = (1, 2)
PARTY_PROBS = (0.8, 0.2)


class ScenarioError(ValueError):
    """Bad configuration or malformed scenario input files."""


@dataclass
class ScenarioConfig:
    scenario_id: str = "run"
    seed: int = 0
    fleet_size: int = 1500
    capacity: int = 4
    horizon_s: float = 1800.0
    wsf: float = 1.0                      # fraction willing to share
    arf: float = 0.0                      # fraction booking in advance
    los_tier: str = "neutral"
    traffic_tier: str = "normal"
    demand_per_hour: float = 5000.0
    duration_s: float = 3600.0
    dt_s: float = 30.0
    epsilon_m: float = 1000.0
    psi_s: float = 300.0
    phi_m: float = 5000.0
    lookahead_s: float = 900.0
    rate_interval_s: float = 900.0
    strategy: str = "demand_and_supply"
    rebalancing: bool = True
    vehicle_wait_s: float = 600.0
    drain_limit_s: float = 14400.0
    width_m: float = 20000.0
    height_m: float = 20000.0
    spacing_m: float = 500.0
    speed_mps: float = 10.0
    zone_size_m: float = 1000.0
    center_scale_m: float = 4500.0        # attraction falloff from downtown
    trip_scale_m: float = 3500.0          # destination falloff with distance
    nodes_csv: str = ""
    links_csv: str = ""
    requests_csv: str = ""
    rates_csv: str = ""


def _coerce(name: str, value, default):
    want = type(default)
    if want is bool:
        if isinstance(value, bool):
            return value
    elif want is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif want is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif want is str:
        if isinstance(value, str):
            return value
    raise ScenarioError(f"config key {name!r}: expected {want.__name__}, "
                        f"got {type(value).__name__}")


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioError("config must be a flat JSON object")
    defaults = ScenarioConfig()
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioError(f"unknown config keys: {unknown}")
    kwargs = {k: _coerce(k, v, getattr(defaults, k)) for k, v in data.items()}
    cfg = ScenarioConfig(**kwargs)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ScenarioError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}")
    return config_from_dict(data)


def validate_config(cfg: ScenarioConfig) -> None:
    if cfg.los_tier not in LOS_TIERS:
        raise ScenarioError(f"los_tier must be one of {sorted(LOS_TIERS)}")
    if cfg.traffic_tier not in TRAFFIC_SCALE:
        raise ScenarioError(f"traffic_tier must be one of {sorted(TRAFFIC_SCALE)}")
    if cfg.strategy not in ("demand", "demand_and_supply", "uniform"):
        raise ScenarioError("strategy must be demand, demand_and_supply, or uniform")
    for name in ("fleet_size", "capacity"):
        if getattr(cfg, name) < 1:
            raise ScenarioError(f"{name} must be at least 1")
    for name in ("dt_s", "duration_s", "speed_mps", "spacing_m", "width_m",
                 "height_m", "zone_size_m", "rate_interval_s", "lookahead_s",
                 "center_scale_m", "trip_scale_m", "vehicle_wait_s"):
        if getattr(cfg, name) <= 0:
            raise ScenarioError(f"{name} must be positive")
    for name in ("horizon_s", "demand_per_hour", "epsilon_m", "psi_s",
                 "phi_m", "drain_limit_s"):
        if getattr(cfg, name) < 0:
            raise ScenarioError(f"{name} must not be negative")
    for name in ("wsf", "arf"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            raise ScenarioError(f"{name} must lie in [0, 1]")
    if bool(cfg.nodes_csv) != bool(cfg.links_csv):
        raise ScenarioError("nodes_csv and links_csv must be given together")


# ------------------------------------------------------------------- world

def build_world(cfg: ScenarioConfig):
    """Graph, base travel matrix (light traffic), and zone partition."""
    if cfg.nodes_csv:
        graph = load_network(cfg.nodes_csv, cfg.links_csv)
    else:
        graph = build_grid_graph(cfg.width_m, cfg.height_m, cfg.spacing_m,
                                 cfg.speed_mps)
    matrix = all_pairs_shortest(graph)
    zones = build_zones(graph, cfg.zone_size_m)
    return graph, matrix, zones


def _center_weights(graph, cfg: ScenarioConfig) -> np.ndarray:
    cx = (graph.node_x.min() + graph.node_x.max()) / 2.0
    cy = (graph.node_y.min() + graph.node_y.max()) / 2.0
    d = np.hypot(graph.node_x - cx, graph.node_y - cy)
    return np.exp(-d / cfg.center_scale_m)


def default_rates(graph, zones, cfg: ScenarioConfig) -> np.ndarray:
    """Expected requests per zone per rate interval, stationary over the run."""
    w = _center_weights(graph, cfg)
    p = w / w.sum()
    n_zones = zones.rows * zones.cols
    per_zone = np.zeros(n_zones)
    np.add.at(per_zone, zones.node_zone, p)
    n_intervals = max(1, math.ceil(cfg.duration_s / cfg.rate_interval_s))
    per_interval = cfg.demand_per_hour * cfg.rate_interval_s / 3600.0
    return np.tile((per_zone * per_interval)[:, None], (1, n_intervals))


# ------------------------------------------------------------------- demand

def synthesize_demand(cfg: ScenarioConfig, graph, matrix, zones):
    """Requests whose underlying draws do not depend on wsf/arf/horizon."""
    n_req = int(round(cfg.demand_per_hour * cfg.duration_s / 3600.0))
    rng = np.random.default_rng([cfg.seed, 0])
    n_nodes = len(graph.node_x)
    w = _center_weights(graph, cfg)
    p_origin = w / w.sum()

    origins = rng.choice(n_nodes, size=n_req, p=p_origin)
    dest_p_cache: dict = {}
    dests = np.empty(n_req, dtype=np.int64)
    for i in range(n_req):
        o = int(origins[i])
        p = dest_p_cache.get(o)
        if p is None:
            pull = w * np.exp(-matrix.dist[o] / cfg.trip_scale_m)
            pull[o] = 0.0
            p = pull / pull.sum()
            dest_p_cache[o] = p
        dests[i] = rng.choice(n_nodes, p=p)
    earliest = rng.uniform(0.0, cfg.duration_s, n_req)
    party = rng.choice(PARTY_SIZES, size=n_req, p=PARTY_PROBS)
    u_share = rng.random(n_req)
    u_adv = rng.random(n_req)

    max_wait, max_delay = LOS_TIERS[cfg.los_tier]
    order = np.argsort(earliest, kind="stable")
    requests = []
    for rid, i in enumerate(order):
        o, d, e = int(origins[i]), int(dests[i]), float(earliest[i])
        advance = bool(u_adv[i] < cfg.arf)
        placed = max(0.0, e - cfg.horizon_s) if advance else e
        requests.append(Request(
            id=rid, origin=o, dest=d, earliest_pickup=e,
            latest_pickup=e + max_wait, party_size=int(party[i]),
            willing_to_share=bool(u_share[i] < cfg.wsf), advance=advance,
            placed_at=placed, direct_time=float(matrix.tau[o, d]),
            direct_dist=float(matrix.dist[o, d]), max_delay=max_delay,
            visible_from=placed))
    return requests


def load_requests(path: str, cfg: ScenarioConfig, graph, matrix):
    """Requests from CSV; endpoints by node id or by coordinate snapping."""
    max_wait, max_delay = LOS_TIERS[cfg.los_tier]
    requests = []
    seen = set()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        cols = set(reader.fieldnames or ())
        by_node = {"origin_node", "dest_node"} <= cols
        by_xy = {"origin_x_m", "origin_y_m", "dest_x_m", "dest_y_m"} <= cols
        need = {"id", "placed_at_s", "earliest_pickup_s", "party_size",
                "willing_to_share", "advance"}
        missing = sorted(need - cols)
        if missing or not (by_node or by_xy):
            raise ScenarioError(
                f"{path}: missing columns {missing or ['origin/dest']}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rid = int(row["id"])
                placed = float(row["placed_at_s"])
                e = float(row["earliest_pickup_s"])
                q = int(row["party_size"])
                share = int(row["willing_to_share"])
                advance = int(row["advance"])
                if by_node:
                    o = graph.id_index[int(row["origin_node"])]
                    d = graph.id_index[int(row["dest_node"])]
                else:
                    o = nearest_node(graph, float(row["origin_x_m"]),
                                     float(row["origin_y_m"]))
                    d = nearest_node(graph, float(row["dest_x_m"]),
                                     float(row["dest_y_m"]))
            except KeyError as exc:
                raise ScenarioError(f"{path}:{lineno}: unknown node id {exc}")
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{path}:{lineno}: bad request row: {exc}")
            if rid in seen:
                raise ScenarioError(f"{path}:{lineno}: duplicate request id {rid}")
            seen.add(rid)
            if q < 1:
                raise ScenarioError(f"{path}:{lineno}: party_size must be >= 1")
            if share not in (0, 1) or advance not in (0, 1):
                raise ScenarioError(
                    f"{path}:{lineno}: willing_to_share and advance take 0 or 1")
            if placed > e:
                raise ScenarioError(
                    f"{path}:{lineno}: placed_at_s is after earliest_pickup_s")
            if o == d:
                raise ScenarioError(f"{path}:{lineno}: origin equals destination")
            visible = max(placed, e - cfg.horizon_s) if advance else placed
            requests.append(Request(
                id=rid, origin=o, dest=d, earliest_pickup=e,
                latest_pickup=e + max_wait, party_size=q,
                willing_to_share=bool(share), advance=bool(advance),
                placed_at=placed, direct_time=float(matrix.tau[o, d]),
                direct_dist=float(matrix.dist[o, d]), max_delay=max_delay,
                visible_from=visible))
    requests.sort(key=lambda r: (r.visible_from, r.id))
    return requests


def load_rates(path: str, zones, cfg: ScenarioConfig) -> np.ndarray:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        need = ["zone_row", "zone_col", "interval_index", "rate"]
        missing = [c for c in need if c not in (reader.fieldnames or ())]
        if missing:
            raise ScenarioError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                zr, zc = int(row["zone_row"]), int(row["zone_col"])
                it, rate = int(row["interval_index"]), float(row["rate"])
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{path}:{lineno}: bad rate row: {exc}")
            if not (0 <= zr < zones.rows and 0 <= zc < zones.cols):
                raise ScenarioError(f"{path}:{lineno}: zone ({zr},{zc}) outside "
                                    f"the {zones.rows}x{zones.cols} partition")
            if it < 0 or rate < 0:
                raise ScenarioError(f"{path}:{lineno}: negative interval or rate")
            rows.append((zr * zones.cols + zc, it, rate))
    if not rows:
        raise ScenarioError(f"{path}: no rate rows")
    n_intervals = max(it for _, it, _ in rows) + 1
    rates = np.zeros((zones.rows * zones.cols, n_intervals))
    for z, it, rate in rows:
        rates[z, it] = rate
    return rates


# -------------------------------------------------------------------- fleet

def init_fleet(cfg: ScenarioConfig, graph, matrix, zones,
               rates: np.ndarray) -> Fleet:
    """Seed vehicles across zones proportionally to demand, uniform within."""
    rng = np.random.default_rng([cfg.seed, 1])
    n_zones = zones.rows * zones.cols
    zone_nodes = [np.nonzero(zones.node_zone == z)[0] for z in range(n_zones)]
    weights = rates.sum(axis=1).astype(np.float64)
    for z in range(n_zones):
        if len(zone_nodes[z]) == 0:
            weights[z] = 0.0     # zones off the network take no vehicles
    if weights.sum() <= 0:
        weights = np.array([float(len(zone_nodes[z]) > 0)
                            for z in range(n_zones)])
    share = cfg.fleet_size * weights / weights.sum()
    counts = np.floor(share).astype(np.int64)
    rest = cfg.fleet_size - int(counts.sum())
    by_frac = sorted(range(n_zones), key=lambda z: (-(share[z] - counts[z]), z))
    for z in by_frac[:rest]:
        counts[z] += 1
    starts = []
    for z in range(n_zones):
        if counts[z] > 0:
            starts.extend(int(n) for n in
                          rng.choice(zone_nodes[z], size=int(counts[z])))
    return Fleet(starts, cfg.capacity, cfg.vehicle_wait_s,
                 matrix.tau, matrix.dist, t0=0.0)


# --------------------------------------------------------------------- runs

def _loop_params(cfg: ScenarioConfig) -> LoopParams:
    return LoopParams(
        dt=cfg.dt_s, duration=cfg.duration_s, epsilon=cfg.epsilon_m,
        strategy=cfg.strategy, psi=cfg.psi_s, phi=cfg.phi_m,
        lookahead=cfg.lookahead_s, rate_interval=cfg.rate_interval_s,
        rebalancing=cfg.rebalancing, drain_limit=cfg.drain_limit_s)


def identity_row(cfg: ScenarioConfig) -> dict:
    return {
        "scenario_id": cfg.scenario_id, "fleet_size": cfg.fleet_size,
        "capacity": cfg.capacity, "horizon_s": cfg.horizon_s,
        "wsf": cfg.wsf, "arf": cfg.arf, "los_tier": cfg.los_tier,
        "traffic_tier": cfg.traffic_tier, "seed": cfg.seed,
    }


def run_scenario(cfg: ScenarioConfig, world=None, trace: list | None = None):
    """One full run; returns (metrics row, SimResult)."""
    validate_config(cfg)
    graph, matrix0, zones = world if world is not None else build_world(cfg)
    matrix = scale_travel_times(matrix0, TRAFFIC_SCALE[cfg.traffic_tier])
    rates = (load_rates(cfg.rates_csv, zones, cfg) if cfg.rates_csv
             else default_rates(graph, zones, cfg))
    requests = (load_requests(cfg.requests_csv, cfg, graph, matrix)
                if cfg.requests_csv
                else synthesize_demand(cfg, graph, matrix, zones))
    fleet = init_fleet(cfg, graph, matrix, zones, rates)
    result = run_simulation(requests, fleet, matrix, graph, zones, rates,
                            _loop_params(cfg), trace)
    row = identity_row(cfg)
    row.update(mx.compute_metrics(requests, fleet))
    row["error"] = ""
    return row, result


# -------------------------------------------------------------------- sweep

def sweep_grid(base: ScenarioConfig):
    """Every cell of the factorial sweep, in fixed grid order."""
    cells = []
    for cap in SWEEP_CAPACITIES:
        for h in SWEEP_HORIZONS:
            for wi, wsf in enumerate(SWEEP_FRACTIONS):
                for ai, arf in enumerate(SWEEP_FRACTIONS):
                    for los in SWEEP_LOS:
                        for traffic in SWEEP_TRAFFIC:
                            cells.append(dataclasses.replace(
                                base, capacity=cap, horizon_s=h, wsf=wsf,
                                arf=arf, los_tier=los, traffic_tier=traffic,
                                scenario_id=(f"cap{cap}-h{int(h)}-wsf{wi}"
                                             f"-arf{ai}-{los}-{traffic}")))
    return cells


_WORLD_CACHE: dict = {}


def _world_for(cfg: ScenarioConfig):
    key = (cfg.width_m, cfg.height_m, cfg.spacing_m, cfg.speed_mps,
           cfg.zone_size_m, cfg.nodes_csv, cfg.links_csv)
    if key not in _WORLD_CACHE:
        _WORLD_CACHE[key] = build_world(cfg)
    return _WORLD_CACHE[key]


def _run_cell(args):
    index, cfg, trace_dir = args
    row = identity_row(cfg)
    try:
        trace = [] if trace_dir else None
        full_row, _ = run_scenario(cfg, world=_world_for(cfg), trace=trace)
        if trace_dir:
            mx.write_trace_ndjson(
                os.path.join(trace_dir, f"trace-{cfg.scenario_id}.ndjson"),
                trace)
        return index, full_row
    except Exception as exc:   # cell failures become rows, not crashes
        for name in mx.METRIC_FIELDS:
            row[name] = ""
        row["error"] = f"{type(exc).__name__}: {exc}"
        return index, row


def run_sweep(base: ScenarioConfig, out_path: str, jobs: int = 1,
              trace_dir: str | None = None) -> int:
    """Run the grid and write rows in grid order; returns failed-cell count."""
    cells = sweep_grid(base)
    if trace_dir:
        os.makedirs(trace_dir, exist_ok=True)
    args = [(i, cfg, trace_dir) for i, cfg in enumerate(cells)]
    rows: list = [None] * len(cells)
    if jobs <= 1:
        for a in args:
            i, row = _run_cell(a)
            rows[i] = row
    else:
        _world_for(cells[0])   # build once; workers inherit it on fork
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, row in pool.map(_run_cell, args, chunksize=4):
                rows[i] = row
    mx.write_metrics_csv(out_path, rows)
    return sum(1 for r in rows if r["error"])
