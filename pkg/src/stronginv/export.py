"""CSV and JSON serialization of trajectories, certificates and reports.

Trajectory CSV layout::

    # stronginv-trajectory v1
    # key: value            (header block; values are JSON)
    t,x1,..,xn,v1,..,vn,psi
    ...

Floats use 17 significant digits, so a write/read cycle is bit-exact. The
velocity columns of the last row are ``nan`` (an arc with N+1 nodes has N
velocities) and ``psi`` is ``nan`` when no verification function was given.
"""

import csv
import hashlib
import io
import json
import math
from importlib import metadata

import numpy as np

from .euler import Trajectory

TRAJECTORY_MAGIC = "# stronginv-trajectory v1"
PLOT_SCHEMA = "stronginv.plot"
SCHEMA_VERSION = 1


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else fmt(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config):
    return hashlib.sha256(json.dumps(_jsonable(config), sort_keys=True).encode()).hexdigest()[:16]


def trajectory_to_csv(traj, header=None):
    n = traj.dim
    out = io.StringIO()
    out.write(TRAJECTORY_MAGIC + "\n")
    header = dict(header or {}, classification=traj.classification)
    for key in sorted(header):
        out.write("# %s: %s\n" % (key, json.dumps(_jsonable(header[key]), sort_keys=True)))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t"] + ["x%d" % (j + 1) for j in range(n)] + ["v%d" % (j + 1) for j in range(n)]
               + ["psi"])
    psi = traj.psi_values
    for i, t in enumerate(traj.times):
        v = traj.velocities[i] if i < len(traj.velocities) else np.full(n, np.nan)
        p = psi[i] if psi is not None else np.nan
        w.writerow([fmt(t)] + [fmt(c) for c in traj.points[i]] + [fmt(c) for c in v] + [fmt(p)])
    return out.getvalue()


def csv_to_trajectory(text):
    """Inverse of trajectory_to_csv; returns (Trajectory, header dict)."""
    lines = text.splitlines()
    if not lines or lines[0] != TRAJECTORY_MAGIC:
        raise ValueError("not a stronginv trajectory CSV")
    header = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, val = lines[i][2:].partition(": ")
        header[key] = json.loads(val)
        i += 1
    rows = list(csv.reader(lines[i:]))
    cols = rows[0]
    n = (len(cols) - 2) // 2
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(cols))
    psi = data[:, -1]
    psi = None if np.all(np.isnan(psi)) else psi
    traj = Trajectory(data[:, 0], data[:, 1:1 + n], data[:-1, 1 + n:1 + 2 * n], psi,
                      classification=header.get("classification", "horizon-reached"))
    return traj, header


def write_trajectory(traj, path, header=None):
    with open(path, "w", newline="") as fh:
        fh.write(trajectory_to_csv(traj, header))


def read_trajectory(path):
    with open(path) as fh:
        return csv_to_trajectory(fh.read())


def write_json(obj, path):
    """Write a report (anything with to_dict, or a plain dict) as canonical JSON."""
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    with open(path, "w") as fh:
        fh.write(dumps(data))


def plot_rows(artifact):
    """Long-format (series, t, value) rows for a Trajectory or Certificate."""
    rows = []
    if isinstance(artifact, Trajectory):
        for j in range(artifact.dim):
            rows += [("x%d" % (j + 1), t, v) for t, v in zip(artifact.times, artifact.points[:, j])]
        if artifact.psi_values is not None:
            rows += [("psi", t, v) for t, v in zip(artifact.times, artifact.psi_values)]
        return rows
    if hasattr(artifact, "witnesses"):
        # margins indexed by the first coordinate of the sampled point
        return [("margin", w.x[0], w.margin) for w in artifact.witnesses]
    raise TypeError("no plot data for %r" % type(artifact).__name__)


def emit_plot_data(artifact, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "t", "value"])
        for s, t, v in plot_rows(artifact):
            w.writerow([s, fmt(t), fmt(v)])
