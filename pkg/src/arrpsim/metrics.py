"""Run metrics and deterministic result writers.

Metrics come straight from terminal request/fleet state, not the trace, so
disabling tracing never changes the numbers. Writers emit bytes that depend
only on the rows passed in: floats go through repr (shortest round-trip) and
files land via write-then-rename so readers never see a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from arrpsim.state import Fleet, RequestState

OCC_BUCKETS = 10

METRIC_FIELDS = [
    "vmr_m", "vmr_service_m", "vmr_idle_m", "pct_shared", "pct_served",
    "avg_wait_s", "avg_delay_s", "active_vehicles", "total_vmt_m",
] + [f"occ_{k}" for k in range(1, OCC_BUCKETS + 1)]

CSV_COLUMNS = [
    "scenario_id", "fleet_size", "capacity", "horizon_s", "wsf", "arf",
    "los_tier", "traffic_tier", "seed",
] + METRIC_FIELDS + ["error"]


def compute_metrics(requests, fleet: Fleet) -> dict:
    """Aggregate one finished run into the standard metric fields."""
    served = [r for r in requests if r.state == RequestState.COMPLETED]
    n_served = len(served)
    n_total = len(requests)

    total_m = float(fleet.odometer.sum())
    service_m = float(fleet.odometer[:, 0].sum() + fleet.odometer[:, 1].sum())
    idle_m = float(fleet.odometer[:, 2].sum())

    def per_served(x):
        return x / n_served if n_served else 0.0

    out = {
        "vmr_m": per_served(total_m),
        "vmr_service_m": per_served(service_m),
        "vmr_idle_m": per_served(idle_m),
        "pct_shared": per_served(100.0 * sum(1 for r in served if r.was_shared)),
        "pct_served": 100.0 * n_served / n_total if n_total else 0.0,
        "avg_wait_s": per_served(sum(r.actual_pickup - r.earliest_pickup
                                     for r in served)),
        "avg_delay_s": per_served(sum((r.actual_dropoff - r.actual_pickup)
                                      - r.direct_time for r in served)),
        "active_vehicles": int((fleet.served > 0).sum()),
        "total_vmt_m": total_m,
    }
    occ = np.minimum(fleet.max_occ, OCC_BUCKETS)
    for k in range(1, OCC_BUCKETS + 1):
        out[f"occ_{k}"] = int((occ == k).sum())
    return out


def _atomic_write(path: str, payload: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as f:
        f.write(payload)
    os.replace(tmp, path)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(path: str, rows) -> None:
    """Rows are dicts keyed by CSV_COLUMNS; missing cells become empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in CSV_COLUMNS])
    _atomic_write(path, buf.getvalue())


def write_trace_ndjson(path: str, events) -> None:
    lines = [json.dumps(ev, separators=(",", ":")) for ev in events]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def read_metrics_csv(path: str):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
