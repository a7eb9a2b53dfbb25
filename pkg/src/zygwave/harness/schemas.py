"""Fixed CSV column layouts and the writer shared by every suite."""

from __future__ import annotations

import csv
import math
import os

SCHEMAS = {
    "checks": ("suite", "check", "value", "bound", "passed", "gated"),
    "energy_trace": ("t", "E", "Hhalf_u", "Hneghalf_dtu", "Hneghalf_Lu"),
    "lp_residuals": ("trial", "mode", "recon_residual", "orth_residual"),
    "bernstein": ("j", "mean_ratio", "min_ratio", "max_ratio"),
    "norm_ratios": ("s", "alpha", "gamma", "min_ratio", "max_ratio"),
    "mollification": ("phase_seed", "eps", "sup_diff", "sup_dt1", "sup_dt2"),
    "mollification_fits": (
        "phase_seed", "diff_slope", "dt2_slope", "dt1_power", "dt1_power_residual",
        "dt1_log_slope", "dt1_log_residual", "min_value", "max_value",
    ),
    "order_fits": ("operator", "m_hat", "delta_hat", "m_joint", "residual", "reference"),
    "positivity": ("family", "eps", "gamma", "sampled_min", "power_min", "eigen_min", "cleared"),
    "garding": ("symbol", "m", "gamma", "c1", "c2", "ratio"),
    "noloss": ("n", "depth", "s", "ratio"),
    "gronwall": ("n", "depth", "sigma", "C", "lam", "found"),
    "sanity": ("check", "value", "bound"),
}


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(float(v))
    if v is None:
        return ""
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def emit_csv(rows, schema_id, path):
    """Write ``rows`` (sequences or dicts) under the fixed header of ``schema_id``."""
    if schema_id not in SCHEMAS:
        raise KeyError(f"unknown schema {schema_id!r}")
    cols = SCHEMAS[schema_id]
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise OSError(f"directory {parent} does not exist")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            if isinstance(row, dict):
                row = [row[c] for c in cols]
            if len(row) != len(cols):
                raise ValueError(f"row of length {len(row)} does not fit schema {schema_id}")
            writer.writerow([_cell(v) for v in row])
    return path
