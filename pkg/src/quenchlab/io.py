"""CSV/JSON persistence for run artifacts."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .analysis import BoundsReport, ConvergenceReport, RateFit
from .integrate import QuenchReport, RunRecord

TRAJECTORY_HEADER = "t,u_left,u_right,tau,mass,flux_balance"
LOGLOG_HEADER = "log_T_minus_t,log_y"


def _fmt(x):
    # shortest round-trip representation
    return repr(float(x))


def _atomic_write(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv(path, header, columns):
    rows = [header]
    for values in zip(*columns):
        rows.append(",".join(_fmt(v) for v in values))
    _atomic_write(path, "\n".join(rows) + "\n")


def read_csv(path, header):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first != header:
        raise ValueError(f"{path}: expected header {header!r}, found {first!r}")
    n = len(header.split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.reshape(-1, n)


def write_trajectory(rec: RunRecord, path):
    write_csv(path, TRAJECTORY_HEADER, [rec.t, rec.u_left, rec.u_right, rec.tau, rec.mass, rec.flux_balance])


def read_trajectory(path, termination="quenched", step_count=None) -> RunRecord:
    data = read_csv(path, TRAJECTORY_HEADER)
    cols = [data[:, j].copy() for j in range(data.shape[1])]
    return RunRecord(*cols, step_count=len(cols[0]) if step_count is None else step_count,
                     termination=termination)


def write_loglog(rec: RunRecord, quench: QuenchReport, mask, path):
    s = quench.T_est - rec.t[mask]
    y = 1.0 - rec.u_right[mask] if quench.side == "right" else rec.u_left[mask]
    write_csv(path, LOGLOG_HEADER, [np.log(s), np.log(y)])


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def write_json(path, payload):
    _atomic_write(path, json.dumps(_clean(payload), indent=2, sort_keys=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _nan(x):
    return math.nan if x is None else float(x)


def quench_from_dict(d) -> QuenchReport:
    return QuenchReport(d["side"], _nan(d["T_est"]), float(d["epsilon"]),
                        _nan(d["wall_value_at_stop"]), _nan(d["blowup_indicator"]))


def bounds_from_dict(d) -> BoundsReport:
    return BoundsReport(d["side"], float(d["T_lower"]), float(d["C_envelope"]), float(d["rate_theory"]))


def ratefit_from_dict(d) -> RateFit:
    return RateFit(float(d["slope"]), float(d["intercept"]), float(d["residual_rms"]),
                   tuple(float(v) for v in d["window"]), int(d["n_points"]))


def convergence_from_dict(d) -> ConvergenceReport:
    return ConvergenceReport(np.array(d["per_node_order"], dtype=float), float(d["median_order"]),
                             np.array(d["nodes_used"], dtype=np.int64))
