"""CSV export/import of simulation results.

Floats are written with 17 significant digits so files round-trip exactly.
Agent indices in files are 1-based.
"""
import csv
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def trajectory_columns(order):
    return (["t", "agent"] + [f"x{k}" for k in range(1, order + 1)]
            + [f"xf{k}" for k in range(1, order + 1)] + ["u", "v", "e"])


def write_trajectories(path, result):
    K1, N, n = result.x.shape
    rows = np.empty((K1 * N, 2 * n + 5))
    rows[:, 0] = np.repeat(result.t, N)
    rows[:, 1] = np.tile(np.arange(1, N + 1), K1)
    rows[:, 2:2 + n] = result.x.reshape(-1, n)
    rows[:, 2 + n:2 + 2 * n] = result.xf.reshape(-1, n)
    rows[:, 2 + 2 * n] = result.u.reshape(-1)
    rows[:, 3 + 2 * n] = result.v.reshape(-1)
    rows[:, 4 + 2 * n] = result.e.reshape(-1)
    fmt = [FLOAT_FMT, "%d"] + [FLOAT_FMT] * (2 * n + 3)
    with open(path, "w", newline="") as fh:
        np.savetxt(fh, rows, fmt=fmt, delimiter=",", header=",".join(trajectory_columns(n)), comments="")


def read_trajectories(path):
    """Inverse of write_trajectories: dict of arrays shaped like SimResult fields."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (len(header) - 5) // 2
    N = int(data[:, 1].max())
    K1 = data.shape[0] // N
    out = {"t": data[::N, 0].copy(), "agent": data[:N, 1].astype(int)}
    out["x"] = data[:, 2:2 + n].reshape(K1, N, n)
    out["xf"] = data[:, 2 + n:2 + 2 * n].reshape(K1, N, n)
    for j, name in enumerate(("u", "v", "e")):
        out[name] = data[:, 2 + 2 * n + j].reshape(K1, N)
    return out


EVENT_COLUMNS = ["t", "agent", "kind", "level", "value"]


def write_events(path, channels):
    events = []
    for order, ch in enumerate(channels):
        lab = ch.label
        for t, val in zip(ch.event_times, ch.event_values):
            events.append((t, order, lab.agent + 1, lab.kind, lab.level, val))
    events.sort(key=lambda e: (e[0], e[1]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for t, _, agent, kind, level, val in events:
            w.writerow([FLOAT_FMT % t, agent, kind, level, FLOAT_FMT % val])


def read_events(path):
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        return [{"t": float(row["t"]), "agent": int(row["agent"]), "kind": row["kind"],
                 "level": int(row["level"]), "value": float(row["value"])} for row in r]


COMPARISON_KINDS = ("state", "neighbor", "input")


def write_comparison(path, rows):
    level_keys = sorted({k for row in rows for k in row["event_counts_by_level"]})
    header = (["set", "dx_self", "dx_neighbor", "du"] + [f"events_{k}" for k in COMPARISON_KINDS]
              + [f"events_{k}" for k in level_keys] + ["tail_max_abs_e"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for idx, row in enumerate(rows, start=1):
            w.writerow([idx, FLOAT_FMT % row["dx_self"], FLOAT_FMT % row["dx_neighbor"], FLOAT_FMT % row["du"]]
                       + [row["event_counts"].get(k, 0) for k in COMPARISON_KINDS]
                       + [row["event_counts_by_level"].get(k, 0) for k in level_keys]
                       + [FLOAT_FMT % row["tail_max_abs_e"]])


def ensure_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
