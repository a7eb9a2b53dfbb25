import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zygwave.coefficients import weierstrass_zygmund
from zygwave.fieldio import read_fields, save_coefficient, save_trajectory, write_fields
from zygwave.solver import manufactured_problem, solve
from zygwave.spectral_core import PeriodicGrid

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(data=arrays(np.complex128, st.tuples(st.integers(1, 4), st.sampled_from([4, 8])),
                   elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False)),
       t0=finite, dt=st.floats(0, 1))
def test_round_trip_complex(tmp_path_factory, data, t0, dt):
    path = tmp_path_factory.mktemp("f") / "a.zwf"
    write_fields(path, data, t0, dt)
    back = read_fields(path)
    assert back.dim == 1 and back.n == data.shape[1]
    assert np.array_equal(back.data, data) and back.t0 == t0 and back.dt == dt


def test_round_trip_real_2d(tmp_path, rng):
    data = rng.standard_normal((2, 4, 4))
    write_fields(tmp_path / "b.zwf", data, 0.5, 0.25)
    back = read_fields(tmp_path / "b.zwf")
    assert back.data.dtype == np.float64 and back.dim == 2
    assert np.array_equal(back.data, data) and np.allclose(back.times, [0.5, 0.75])


def test_exact_bytes(tmp_path):
    data = np.array([[1 + 2j, -0.5j]])
    path = tmp_path / "c.zwf"
    write_fields(path, data, 1.0, 0.0)
    raw = path.read_bytes()
    header = (
        b"ZWFD" + struct.pack("<H", 1) + struct.pack("<H", 1) + struct.pack("<I", 2)
        + struct.pack("<H", 1) + b"\x00\x00" + struct.pack("<I", 1)
        + struct.pack("<d", 1.0) + struct.pack("<d", 0.0)
    )
    body = struct.pack("<4d", 1.0, 2.0, -0.0, -0.5)
    assert len(header) == 36
    assert raw == header + body


def test_rejects_corruption(tmp_path):
    path = tmp_path / "d.zwf"
    write_fields(path, np.zeros((1, 4)), 0.0, 0.0)
    raw = path.read_bytes()
    (tmp_path / "bad.zwf").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        read_fields(tmp_path / "bad.zwf")
    (tmp_path / "short.zwf").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_fields(tmp_path / "short.zwf")
    (tmp_path / "tiny.zwf").write_bytes(raw[:10])
    with pytest.raises(ValueError):
        read_fields(tmp_path / "tiny.zwf")
    with pytest.raises(ValueError):
        write_fields(path, np.zeros(4))


def test_trajectory_and_coefficient_dumps(tmp_path):
    g = PeriodicGrid(16)
    problem, _ = manufactured_problem(g, T=0.25)
    traj = solve(problem)
    save_trajectory(tmp_path / "u.zwf", traj)
    back = read_fields(tmp_path / "u.zwf")
    assert np.array_equal(back.data, traj.u) and np.allclose(back.times, traj.times)
    a = weierstrass_zygmund(3, 0, "tx", grid=g, T=0.25, dt=2.0**-6)
    save_coefficient(tmp_path / "a.zwf", a)
    back = read_fields(tmp_path / "a.zwf")
    assert np.array_equal(back.data, a.values) and back.data.dtype == np.float64
    with pytest.raises(ValueError):
        save_trajectory(tmp_path / "x.zwf", traj, "w")
