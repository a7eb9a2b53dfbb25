import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zygwave.fieldio import read_fields
from zygwave.harness.cli import main
from zygwave.harness.config import (
    EXPERIMENTS,
    ConfigError,
    config_from_dict,
    load_config,
)
from zygwave.harness.schemas import SCHEMAS, emit_csv
from zygwave.harness.suites import DESCRIPTIONS, SUITES

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")

QUICK_LP = """experiment = "lp-suite"
[grid]
n = 64
[suite]
trials = 5
"""


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# CSV writer

def test_emit_csv_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_csv([], "energy_trace", path)
    assert path.read_bytes() == b"t,E,Hhalf_u,Hneghalf_dtu,Hneghalf_Lu\n"


@given(rows=st.lists(st.tuples(st.floats(allow_nan=False), st.floats(allow_nan=False),
                               st.floats(allow_nan=False)), max_size=10))
def test_emit_csv_is_deterministic_and_lossless(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("csv")
    rows = [(1.0, 2.0, a, b, c) for a, b, c in rows]
    emit_csv(rows, "energy_trace", d / "a.csv")
    emit_csv(rows, "energy_trace", d / "b.csv")
    raw = (d / "a.csv").read_bytes()
    assert raw == (d / "b.csv").read_bytes()
    lines = raw.decode().splitlines()[1:]
    back = [tuple(float(x) for x in line.split(",")) for line in lines]
    assert back == [tuple(r) for r in rows]


def test_emit_csv_errors(tmp_path):
    with pytest.raises(KeyError):
        emit_csv([], "nope", tmp_path / "x.csv")
    with pytest.raises(ValueError):
        emit_csv([(1, 2)], "sanity", tmp_path / "x.csv")
    with pytest.raises(OSError):
        emit_csv([], "sanity", tmp_path / "missing" / "x.csv")


def test_emit_csv_cells(tmp_path):
    emit_csv([("a", True, None), {"check": "b", "value": np.float64(0.1), "bound": False}], "sanity",
             tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == "check,value,bound\na,true,\nb,0.1,false\n"


# configuration

def test_every_experiment_has_config_and_suite():
    for name in EXPERIMENTS:
        cfg = load_config(os.path.join(CONFIGS, f"{name}.toml"))
        assert cfg.experiment == name and name in SUITES and DESCRIPTIONS[name]


@pytest.mark.parametrize("raw, match", [
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "lp-suite", "grid": {"n": 100}}, "grid/n"),
    ({"experiment": "lp-suite", "extra": 1}, "Additional"),
    ({"experiment": "lp-suite", "coefficients": {"lam0": 3.0, "Lam0": 2.0}}, "lam0"),
    ({"experiment": "lp-suite", "seed": -1}, "seed"),
    ({"experiment": "sigma-smooth", "suite": {"sigmas": [-0.5]}}, "sigmas"),
])
def test_config_rejections(raw, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(raw)


def test_seed_streams_are_reproducible_and_distinct():
    cfg = config_from_dict({"experiment": "lp-suite"}, seed=7)
    assert cfg.seed == 7 and cfg.out == "results/lp-suite"
    a = cfg.rng("x").standard_normal(4)
    assert np.array_equal(a, cfg.rng("x").standard_normal(4))
    assert not np.array_equal(a, cfg.rng("y").standard_normal(4))
    assert cfg.child_seed("x") == config_from_dict({"experiment": "lp-suite"}, seed=7).child_seed("x")


# command line

def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in EXPERIMENTS)


def test_usage_and_config_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["run", "--config", _write(tmp_path, "experiment = ")]) == 2
    assert main(["run", "--config", _write(tmp_path, 'experiment = "lp-suite"\nbogus = 1\n')]) == 2
    assert main(["run", "--config", _write(tmp_path, QUICK_LP), "--seed", str(2**64)]) == 2
    assert main(["run", "--config", _write(tmp_path, QUICK_LP), "--threads", "0"]) == 2
    assert "config error" in capsys.readouterr().err


def test_quick_run_is_deterministic(tmp_path):
    cfg = _write(tmp_path, QUICK_LP)
    outs = []
    for i, threads in enumerate(("1", "3")):
        out = tmp_path / f"run{i}"
        assert main(["run", "--config", cfg, "--out", str(out), "--threads", threads, "--quiet"]) == 0
        outs.append(out)
    names = sorted(os.listdir(outs[0]))
    assert "checks.csv" in names and "report.txt" in names
    for name in names:
        if name.endswith(".csv") or name.endswith(".txt"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    header = (outs[0] / "checks.csv").read_text().splitlines()[0]
    assert header == ",".join(SCHEMAS["checks"])


def test_seed_override_changes_samples(tmp_path):
    cfg = _write(tmp_path, QUICK_LP)
    main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1", "--quiet"])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "0x2", "--quiet"])
    a = (tmp_path / "a" / "report.txt").read_text()
    b = (tmp_path / "b" / "report.txt").read_text()
    assert "seed=1" in a and "seed=2" in b and a != b


def test_failed_gate_exits_one(tmp_path, capsys):
    cfg = _write(tmp_path, QUICK_LP + "[tolerances]\nlp_residual = 1e-30\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "f")]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_field_dump(tmp_path):
    cfg = _write(tmp_path, """experiment = "s-comparison"
[grid]
ns = [64]
[time]
T = 0.25
[coefficients]
depths = [3]
[data]
kmax = 8
[suite]
s_values = [0.5]
dump_fields = true
""")
    out = tmp_path / "s"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    files = sorted(os.listdir(out / "fields"))
    assert files and all(f.endswith(".zwf") for f in files)
    ff = read_fields(out / "fields" / files[0])
    assert ff.n == 64 and ff.data.shape[0] >= 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "zygwave.harness.cli", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "noloss-main" in r.stdout
