"""Experiment configuration: TOML files validated against a JSON schema."""

from __future__ import annotations

import copy
import sys
import zlib
from dataclasses import dataclass, field

import jsonschema
import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = (
    "lp-suite",
    "norms-suite",
    "mollify-suite",
    "symb-calc-suite",
    "positivity-suite",
    "q-cancel-suite",
    "noloss-main",
    "sigma-smooth",
    "s-comparison",
)

_POW2 = [2**k for k in range(4, 13)]
_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_list = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_num_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out": {"type": "string"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"enum": _POW2},
                "ns": {"type": "array", "items": {"enum": _POW2}, "minItems": 1},
                "dim": {"enum": [1]},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0, "maximum": 16},
                "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.0625},
            },
        },
        "coefficients": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["weierstrass", "banded", "constant"]},
                "depth": {"type": "integer", "minimum": 1, "maximum": 16},
                "depths": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 16}, "minItems": 1},
                "axis": {"enum": ["t", "x", "tx"]},
                "lam0": _pos,
                "Lam0": _pos,
                "phase_seeds": {"type": "integer", "minimum": 1, "maximum": 64},
            },
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kmax": {"type": "integer", "minimum": 1, "maximum": 2048},
                "profile": {"enum": ["hhalf", "flat"]},
            },
        },
        "suite": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trials": {"type": "integer", "minimum": 1, "maximum": 1000},
                "gamma": {"type": "number", "minimum": 1},
                "gammas": _num_list,
                "s_values": _num_list,
                "alphas": _num_list,
                "sigmas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": -0.5}, "minItems": 1},
                "ladder": _int_list,
                "samples": {"type": "integer", "minimum": 100, "maximum": 10000},
                "weight_sigma": _pos,
                "energy": {"type": "boolean"},
                "sanity": {"type": "boolean"},
                "dump_fields": {"type": "boolean"},
                "trace_samples": {"type": "integer", "minimum": 2, "maximum": 513},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": _num,
        },
    },
}

# values used when a config leaves a key out; suites read everything from here
DEFAULTS = {
    "lp-suite": {"grid": {"n": 256}, "suite": {"trials": 100}},
    "norms-suite": {
        "grid": {"n": 512},
        "suite": {"trials": 20, "s_values": [-0.5, 0.0, 0.5], "alphas": [-1, 0, 1], "gammas": [1, 8, 64]},
    },
    "mollify-suite": {
        "grid": {"n": 16},
        "time": {"T": 4.0, "dt": 2.0**-15},
        "coefficients": {"family": "weierstrass", "depth": 12, "axis": "t", "phase_seeds": 4},
        "suite": {"ladder": [2, 3, 4, 5, 6]},
    },
    "symb-calc-suite": {
        "grid": {"n": 512},
        "coefficients": {"family": "weierstrass", "depth": 8, "axis": "tx"},
        "suite": {"trials": 20, "gamma": 1.0},
    },
    "q-cancel-suite": {
        "grid": {"n": 512},
        "coefficients": {"family": "weierstrass", "depth": 8, "axis": "tx"},
        "suite": {"trials": 20, "gamma": 1.0, "weight_sigma": 0.5},
    },
    "positivity-suite": {
        "grid": {"n": 256},
        # gamma up to 2^10 reaches eps = 2^-10, which needs dt <= 2^-13
        "time": {"T": 1.0, "dt": 2.0**-14},
        "coefficients": {"family": "weierstrass", "depth": 6, "axis": "tx"},
        "suite": {"samples": 128, "ladder": [2, 3, 4, 5, 6]},
    },
    "noloss-main": {
        "grid": {"ns": [512, 1024]},
        "time": {"T": 1.0},
        "coefficients": {"family": "weierstrass", "depths": [4, 6, 8], "axis": "tx"},
        "data": {"kmax": 32, "profile": "hhalf"},
        "suite": {"s_values": [0.0, 0.5, 1.0], "energy": True, "sanity": True, "trace_samples": 17},
    },
    "sigma-smooth": {
        "grid": {"ns": [512]},
        "time": {"T": 1.0},
        "coefficients": {"family": "banded", "depths": [4, 6, 8]},
        "data": {"kmax": 32, "profile": "hhalf"},
        "suite": {"sigmas": [0.0, 1.0, 2.0], "energy": True, "trace_samples": 9},
    },
    "s-comparison": {
        "grid": {"ns": [512]},
        "time": {"T": 1.0},
        "coefficients": {"family": "weierstrass", "depths": [4, 6, 8], "axis": "tx"},
        "data": {"kmax": 32, "profile": "hhalf"},
        "suite": {"s_values": [0.0, 0.25, 0.5, 0.75, 1.0]},
    },
}
COMMON = {
    "seed": 20240601,
    "coefficients": {"lam0": 0.5, "Lam0": 2.0},
    "time": {"T": 1.0, "dt": 2.0**-12},
}


class ConfigError(ValueError):
    """Raised for unreadable, malformed or out-of-range configurations."""


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out: str
    grid: dict = field(default_factory=dict)
    time: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    suite: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))

    def rng(self, label):
        return np.random.default_rng(self.seed_sequence(label))

    def seed_sequence(self, label):
        """Child stream for ``label``: ``SeedSequence(seed, spawn_key=(crc32(label),))``."""
        return np.random.SeedSequence(self.seed, spawn_key=(zlib.crc32(label.encode()),))

    def child_seed(self, label):
        return int(self.seed_sequence(label).generate_state(1, np.uint32)[0])


def config_from_dict(raw, seed=None, out=None):
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    merged = _merge(_merge(COMMON, DEFAULTS[raw["experiment"]]), raw)
    c = merged["coefficients"]
    if c["lam0"] > c["Lam0"]:
        raise ConfigError("coefficients: lam0 must not exceed Lam0")
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        merged["seed"] = seed
    merged["out"] = out or merged.get("out") or f"results/{merged['experiment']}"
    return ExperimentConfig(
        merged["experiment"], int(merged["seed"]), merged["out"],
        merged.get("grid", {}), merged.get("time", {}), merged.get("coefficients", {}),
        merged.get("data", {}), merged.get("suite", {}), merged.get("tolerances", {}),
    )


def load_config(path, seed=None, out=None):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw, seed, out)
