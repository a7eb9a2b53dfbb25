"""Binary field files: a 36-byte little-endian header followed by row-major samples.

Header layout (offsets in bytes)::

    0   4s   magic  b"ZWFD"
    4   u16  version (1)
    6   u16  dim (1 or 2)
    8   u32  n, points per axis
    12  u16  dtype code (1 = complex128, 2 = float64)
    14  u16  reserved, 0
    16  u32  count, number of records
    20  f64  t0, time of the first record
    28  f64  dt, spacing between records (0 for a single record)

Then ``count * n**dim`` samples, record after record, each record in C order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"ZWFD"
VERSION = 1
HEADER = struct.Struct("<4sHHIHHIdd")
DTYPES = {1: np.dtype("<c16"), 2: np.dtype("<f8")}
CODES = {np.dtype("complex128"): 1, np.dtype("float64"): 2}


@dataclass
class FieldFile:
    n: int
    dim: int
    t0: float
    dt: float
    data: np.ndarray

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.data.shape[0])


def write_fields(path, records, t0=0.0, dt=0.0):
    """Write ``records`` of shape ``(count, n)`` or ``(count, n, n)``."""
    data = np.asarray(records)
    if data.ndim not in (2, 3):
        raise ValueError("records must have shape (count, n) or (count, n, n)")
    dim = data.ndim - 1
    n = data.shape[1]
    if dim == 2 and data.shape[2] != n:
        raise ValueError("2D records must be square")
    dtype = np.dtype("complex128") if np.iscomplexobj(data) else np.dtype("float64")
    header = HEADER.pack(MAGIC, VERSION, dim, n, CODES[dtype], 0, data.shape[0], float(t0), float(dt))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data, dtype=DTYPES[CODES[dtype]]).tobytes())


def read_fields(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ValueError("file too short for a field header")
    magic, version, dim, n, code, _, count, t0, dt = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    if code not in DTYPES or dim not in (1, 2):
        raise ValueError("corrupt header")
    shape = (count,) + (n,) * dim
    expected = HEADER.size + int(np.prod(shape)) * DTYPES[code].itemsize
    if len(raw) != expected:
        raise ValueError(f"expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype=DTYPES[code], offset=HEADER.size).reshape(shape).copy()
    return FieldFile(n, dim, t0, dt, data)


def save_trajectory(path, traj, which="u"):
    if which not in ("u", "dtu"):
        raise ValueError("which must be 'u' or 'dtu'")
    times = traj.times
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    write_fields(path, getattr(traj, which), float(times[0]), dt)


def save_coefficient(path, field):
    write_fields(path, field.values, float(field.times[0]), field.dt)
