"""Experiment and estimator configuration files.

Both files are JSON objects validated against the schemas below; unknown
keys are rejected. See ``docs/config.md`` for a walk-through.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .estimator import EstimatorConfig
from .noise import NoiseModel, noise_from_dict


class ConfigError(ValueError):
    pass


_LAMBDA = {"oneOf": [{"type": "number", "minimum": 0}, {"const": "min"}]}

ESTIMATOR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lambda_p": _LAMBDA,
        "lambda_q": _LAMBDA,
        "max_outer_iters": {"type": "integer", "minimum": 1},
        "step_rule": {"enum": ["backtracking", "fixed"]},
        "step_size": {"type": "number", "exclusiveMinimum": 0},
        "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "max_tries": {"type": "integer", "minimum": 1},
        "tol_objective": {"type": "number", "exclusiveMinimum": 0},
        "init": {"enum": ["random", "spectral", "provided"]},
        "init_scale": {"type": "number", "exclusiveMinimum": 0},
        "P0": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "Q0": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "enforce_x_max": {"enum": ["none", "rescale"]},
        "project_to_grid": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
    },
}

NOISE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "sigma2"],
    "properties": {"kind": {"const": "gaussian"}, "sigma2": {"type": "number", "exclusiveMinimum": 0}},
}

_POS_INT = {"type": "integer", "minimum": 1}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

_SPARSITY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p0", "q0"],
    "properties": {"p0": _NONNEG_INT, "q0": _NONNEG_INT},
}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dims", "sparsity", "bounds", "noise", "m_grid"],
    "properties": {
        "dims": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n1", "n2", "r", "r1", "r2"],
            "properties": {k: _POS_INT for k in ("n1", "n2", "r", "r1", "r2")},
        },
        "sparsity": {"oneOf": [_SPARSITY, {"type": "array", "items": _SPARSITY, "minItems": 1}]},
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x_max", "q_max", "a_max", "b_max"],
            "properties": {k: _POS_NUM for k in ("x_max", "q_max", "a_max", "b_max")},
        },
        "noise": NOISE_SCHEMA,
        "m_grid": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1},
        "trials_per_cell": _NONNEG_INT,
        "solver": {"enum": ["oracle", "alt_min"]},
        "estimator": ESTIMATOR_SCHEMA,
        "n_starts": _POS_INT,
        "l_lev": {"type": ["integer", "null"], "minimum": 2},
        "cap": _POS_INT,
        "fixed_truth": {"type": "boolean"},
        "record_wall_time": {"type": "boolean"},
        "master_seed": _NONNEG_INT,
    },
}

FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["noise"],
    "properties": {
        "noise": NOISE_SCHEMA,
        "solver": {"enum": ["oracle", "alt_min"]},
        "r": _POS_INT,
        "estimator": ESTIMATOR_SCHEMA,
        "n_starts": _POS_INT,
        "l_lev": {"type": ["integer", "null"], "minimum": 2},
        "beta": {"type": ["number", "null"], "minimum": 1},
        "cap": _POS_INT,
    },
}


@dataclass
class Dims:
    n1: int
    n2: int
    r: int
    r1: int
    r2: int


@dataclass
class Sparsity:
    p0: int
    q0: int


@dataclass
class BoundConstants:
    x_max: float = 1.0
    q_max: float = 1.0
    a_max: float = 1.0
    b_max: float = 1.0


@dataclass
class ExperimentConfig:
    dims: Dims
    sparsity: list[Sparsity]
    bounds: BoundConstants
    noise: NoiseModel
    m_grid: list[int]
    trials_per_cell: int = 1
    solver: str = "alt_min"
    estimator: dict = field(default_factory=dict)  # EstimatorConfig kwargs, lambdas may be "min"
    n_starts: int = 1
    l_lev: int | None = None
    cap: int = 10**6
    fixed_truth: bool = False
    record_wall_time: bool = False
    master_seed: int = 0

    def __post_init__(self):
        d = self.dims
        for m in self.m_grid:
            if not 4 <= m <= d.n1 * d.n2:
                raise ConfigError(f"m={m} outside [4, n1*n2={d.n1 * d.n2}]")
        for s in self.sparsity:
            if s.p0 > d.r1 * d.r or s.q0 > d.r * d.r2:
                raise ConfigError(f"sparsity {s} exceeds factor sizes")
        if d.r > min(d.r1, d.r2):
            raise ConfigError("rank r must not exceed min(r1, r2)")
        try:
            EstimatorConfig(**{k: (0.0 if v == "min" else v) for k, v in self.estimator.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad estimator settings: {exc}") from exc


def _validate(data, schema, what):
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {path}: {exc.message}") from None


def experiment_from_dict(data: dict) -> ExperimentConfig:
    _validate(data, EXPERIMENT_SCHEMA, "experiment config")
    sp = data["sparsity"]
    sp = [sp] if isinstance(sp, dict) else sp
    kwargs = {k: v for k, v in data.items() if k not in ("dims", "sparsity", "bounds", "noise")}
    return ExperimentConfig(
        dims=Dims(**data["dims"]),
        sparsity=[Sparsity(**s) for s in sp],
        bounds=BoundConstants(**data["bounds"]),
        noise=noise_from_dict(data["noise"]),
        **kwargs,
    )


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def load_experiment(path) -> ExperimentConfig:
    return experiment_from_dict(_read_json(path))


def load_fit_config(path) -> dict:
    data = _read_json(path)
    _validate(data, FIT_SCHEMA, "fit config")
    return data
