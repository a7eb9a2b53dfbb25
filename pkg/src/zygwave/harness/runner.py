"""Run one configured experiment and write its artifacts."""

from __future__ import annotations

import os

from .. import __version__
from ..fieldio import write_fields
from .schemas import emit_csv
from .suites import SUITES

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def format_report(cfg, result):
    lines = [
        f"zygwave {__version__}  experiment={cfg.experiment}  seed={cfg.seed}",
        "",
    ]
    width = max((len(c.name) for c in result.checks), default=10)
    for c in result.checks:
        status = "PASS" if c.passed else "FAIL"
        kind = "" if c.gated else "  (reported)"
        lines.append(f"{status}  {c.name:<{width}}  value={c.value!r}  bound={c.bound!r}{kind}")
    if result.notes:
        lines.append("")
        lines.extend(f"note: {n}" for n in result.notes)
    lines.append("")
    gated = [c for c in result.checks if c.gated]
    failed = sum(not c.passed for c in gated)
    lines.append(f"{len(gated) - failed}/{len(gated)} gated checks passed")
    return "\n".join(lines) + "\n"


def write_artifacts(cfg, result, out):
    os.makedirs(out, exist_ok=True)
    rows = [(cfg.experiment, c.name, c.value, c.bound, c.passed, c.gated) for c in result.checks]
    emit_csv(rows, "checks", os.path.join(out, "checks.csv"))
    for name in sorted(result.tables):
        schema, table = result.tables[name]
        emit_csv(table, schema, os.path.join(out, name))
    if result.fields:
        os.makedirs(os.path.join(out, "fields"), exist_ok=True)
        for name in sorted(result.fields):
            data, t0, dt = result.fields[name]
            write_fields(os.path.join(out, "fields", name), data, t0, dt)
    report = format_report(cfg, result)
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report)
    return report


def run(cfg, threads=1, out=None):
    """Execute ``cfg`` and return ``(exit code, result, report text)``."""
    result = SUITES[cfg.experiment](cfg, max(1, int(threads)))
    report = write_artifacts(cfg, result, out or cfg.out)
    return (EXIT_OK if result.passed else EXIT_FAILED), result, report
