"""CSV and JSON writers with byte-stable output.

Floats are written with 17 significant digits so they round-trip exactly;
non-finite values become the strings ``inf``, ``-inf`` and ``nan``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def ensemble_rows(ens):
    """One row per (path_id, recorded node): t, tau, s1, c, m, s2, stopped."""
    t, tau = ens.t, ens.tau
    stopped = ens.stopped
    for i, pid in enumerate(ens.path_ids):
        for j in range(ens.nodes.shape[0]):
            yield (pid, ens.nodes[j], t[j], tau[j], ens.s1[i, j], ens.c[i, j], ens.m[i, j], ens.s2[i, j], stopped[i])


ENSEMBLE_HEADER = ("path_id", "node", "t", "tau", "s1", "c", "m", "s2", "stopped")
PATHS_HEADER = ("path_id", "stop_index", "stopped", "d")


def write_ensemble_csv(ens, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    p1 = write_csv(out_dir / "ensemble.csv", ENSEMBLE_HEADER, ensemble_rows(ens))
    rows = ((pid, ens.stop_index[i], ens.stopped[i], ens.d[i]) for i, pid in enumerate(ens.path_ids))
    p2 = write_csv(out_dir / "paths.csv", PATHS_HEADER, rows)
    return [p1, p2]


EXACT_HEADER = ("path_id", "hitting_time", "pre_hit_minimum", "m_terminal", "s1_terminal", "d", "s2_terminal")


def write_exact_csv(ex, out_dir) -> list[Path]:
    rows = (
        (i, ex.hitting_time[i], ex.minimum[i], ex.m_terminal[i], ex.s1_terminal[i], ex.d[i], ex.s2_terminal[i])
        for i in range(ex.n_paths)
    )
    return [write_csv(Path(out_dir) / "exact_law.csv", EXACT_HEADER, rows)]


WEALTH_HEADER = ("path_id", "node", "wealth", "running_min")


def write_wealth_csv(path, wealth, path_ids=None) -> Path:
    ids = np.arange(wealth.n_paths) if path_ids is None else path_ids
    rows = ((ids[i], j, wealth.w[i, j], wealth.running_min[i, j]) for i in range(wealth.n_paths) for j in range(wealth.w.shape[1]))
    return write_csv(path, WEALTH_HEADER, rows)


def verdict_dict(notion, statistic, ci, alpha, n, verdict) -> dict:
    """Admissibility verdict record: notion, statistic, CI, alpha, n, verdict."""
    return {"notion": notion, "statistic": statistic, "ci": list(ci), "alpha": alpha, "n": int(n), "verdict": verdict}


REPORT_HEADER = ("name", "estimate", "stderr", "oracle", "z", "alpha", "n", "verdict", "tolerance", "detail")


def write_reports_csv(path, reports) -> Path:
    rows = []
    for r in reports:
        d = r.to_dict()
        rows.append([d[k] for k in REPORT_HEADER])
    return write_csv(path, REPORT_HEADER, rows)
