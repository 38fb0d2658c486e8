"""JSON run configurations: schemas and builders for grids, fields, coefficients."""
from __future__ import annotations

import copy
import os
from pathlib import Path

import jsonschema
import numpy as np

from .expression import Expression
from .formats import load_bundle, load_field
from .nonlinearity import Nonlinearity, build
from .roughfield import (
    RoughCoefficient,
    constant_coefficient,
    fractional_gaussian_field,
    generate_rough,
    smooth_coefficient,
    zero_coefficient,
)
from .spectral import Grid, SpectralField

OUTPUT_ENV = "SINGULARPDE_OUTPUT"
DEFAULT_OUTPUT_ROOT = "singularpde-output"


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}

GRID = {
    "type": "object",
    "properties": {"d": {"enum": [1, 2]}, "N": {"type": "integer", "minimum": 8}, "L": _pos},
    "required": ["N"],
    "additionalProperties": False,
}

B_SPEC = {
    "oneOf": [
        {"type": "object", "properties": {
            "kind": {"const": "rough"}, "beta": _num, "seed": {"type": "integer", "minimum": 0},
            "n_slices": {"type": "integer", "minimum": 1}, "amplitude": _num},
         "required": ["kind", "seed"], "additionalProperties": False},
        {"type": "object", "properties": {
            "kind": {"const": "smooth"}, "expression": {"type": "string"},
            "n_slices": {"type": "integer", "minimum": 1}},
         "required": ["kind", "expression"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "constant"}, "value": _num},
         "required": ["kind", "value"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "zero"}},
         "required": ["kind"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "bundle"}, "path": {"type": "string"}},
         "required": ["kind", "path"], "additionalProperties": False},
    ]
}

FIELD_SPEC = {
    "oneOf": [
        {"type": "object", "properties": {"kind": {"const": "expression"}, "expression": {"type": "string"}},
         "required": ["kind", "expression"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "file"}, "path": {"type": "string"}},
         "required": ["kind", "path"], "additionalProperties": False},
        {"type": "object", "properties": {
            "kind": {"const": "random"}, "regularity": _num, "seed": {"type": "integer", "minimum": 0},
            "amplitude": _num},
         "required": ["kind", "regularity", "seed"], "additionalProperties": False},
    ]
}

NONLINEARITY = {
    "oneOf": [
        {"enum": ["quadratic", "softabs", "sine"]},
        {"type": "object", "properties": {"name": {"enum": ["quadratic", "sine"]}},
         "required": ["name"], "additionalProperties": False},
        {"type": "object", "properties": {"name": {"const": "softabs"}, "d": {"enum": [1, 2]}},
         "required": ["name"], "additionalProperties": False},
        {"type": "object", "properties": {
            "name": {"const": "expression"}, "expression": {"type": "string"}, "d": {"enum": [1, 2]},
            "lip_grad": _pos, "lin_growth": _pos, "global_lip": _pos, "sublin": _pos},
         "required": ["name", "expression", "lip_grad", "lin_growth"], "additionalProperties": False},
    ]
}

SOLVER = {
    "type": "object",
    "properties": {
        "rho": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "auto"}]},
        "picard_tol": _pos, "max_picard_iters": {"type": "integer", "minimum": 1},
        "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "norm_ceiling": _pos, "stall_patience": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

GENERATE_SCHEMA = {
    "type": "object",
    "properties": {"grid": GRID, "T": _pos, "alpha": _num, "b": B_SPEC, "output": {"type": "string"}},
    "required": ["grid", "b"],
    "additionalProperties": False,
}

SOLVE_SCHEMA = {
    "type": "object",
    "properties": {
        "grid": GRID, "alpha": _num, "beta": _num, "T": _pos,
        "n_time_steps": {"type": "integer", "minimum": 4},
        "nonlinearity": NONLINEARITY, "b": B_SPEC, "u0": FIELD_SPEC, "solver": SOLVER,
        "output": {"type": "string"},
    },
    "required": ["grid", "alpha", "beta", "T", "n_time_steps", "nonlinearity", "b", "u0"],
    "additionalProperties": False,
}

BSDE_SCHEMA = {
    "type": "object",
    "properties": {
        "grid": GRID, "alpha": _num, "beta": _num, "T": _pos,
        "t": {"type": "number", "minimum": 0}, "x": _num,
        "n_time_steps": {"type": "integer", "minimum": 4},
        "nonlinearity": NONLINEARITY, "b": B_SPEC, "phi": FIELD_SPEC, "solver": SOLVER,
        "paths": {"type": "integer", "minimum": 2}, "seed": {"type": "integer", "minimum": 0},
        "k": _pos, "raw_paths": {"type": "boolean"}, "output": {"type": "string"},
    },
    "required": ["grid", "alpha", "beta", "T", "x", "n_time_steps", "b", "phi", "paths", "seed"],
    "additionalProperties": False,
}

SCHEMAS = {"generate": GENERATE_SCHEMA, "solve": SOLVE_SCHEMA, "bsde": BSDE_SCHEMA}


def validate(config: dict, command: str) -> dict:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {command} config at {where}: {exc.message}") from None
    return config


def resolve(config: dict, command: str, base_dir: Path) -> dict:
    """Fill defaults and absolutise file paths; the result is what manifests embed."""
    cfg = copy.deepcopy(config)
    cfg["grid"] = {"d": 1, "L": 1.0, **cfg["grid"]}
    cfg.setdefault("T", 1.0)
    b = cfg["b"]
    if b["kind"] == "rough":
        b.setdefault("n_slices", 1)
        b.setdefault("amplitude", 1.0)
        if "beta" not in b:
            if "beta" not in cfg:
                raise ConfigError("rough b needs a beta (in the b spec or at top level)")
            b["beta"] = cfg["beta"]
    elif b["kind"] == "smooth":
        b.setdefault("n_slices", 1)
    elif b["kind"] == "bundle":
        b["path"] = str((base_dir / b["path"]).resolve())
    for key in ("u0", "phi"):
        if key in cfg and cfg[key]["kind"] == "file":
            cfg[key]["path"] = str((base_dir / cfg[key]["path"]).resolve())
        if key in cfg and cfg[key]["kind"] == "random":
            cfg[key].setdefault("amplitude", 1.0)
    if command in ("solve", "bsde"):
        cfg.setdefault("nonlinearity", "quadratic")
        solver = {"rho": "auto", "picard_tol": 1e-10, "max_picard_iters": 200, "damping": 1.0,
                  "norm_ceiling": 1e8, "stall_patience": 3}
        solver.update(cfg.get("solver", {}))
        cfg["solver"] = solver
    if command == "bsde":
        cfg.setdefault("t", 0.0)
        cfg.setdefault("k", 4.0)
        cfg.setdefault("raw_paths", False)
    return cfg


def output_dir(cfg: dict, command: str, override: str | None) -> Path:
    if override:
        return Path(override)
    root = Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT_ROOT))
    return root / cfg.get("output", command)


def build_grid(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid(int(g["d"]), int(g["N"]), float(g["L"]))


def build_coefficient(spec: dict, grid: Grid, T: float) -> RoughCoefficient:
    kind = spec["kind"]
    if kind == "rough":
        return generate_rough(float(spec["beta"]), grid, int(spec["seed"]), int(spec["n_slices"]), T,
                              float(spec["amplitude"]))
    if kind == "smooth":
        return smooth_coefficient(spec["expression"], grid, int(spec["n_slices"]), T)
    if kind == "constant":
        return constant_coefficient(grid, float(spec["value"]), T)
    if kind == "zero":
        return zero_coefficient(grid, T)
    b = load_bundle(spec["path"])
    if b.grid != grid:
        raise ConfigError(f"bundle grid {b.grid} differs from the configured grid {grid}")
    if abs(b.T - T) > 1e-12 * max(1.0, T):
        raise ConfigError(f"bundle horizon T={b.T} differs from the configured T={T}")
    return b


def build_field(spec: dict, grid: Grid) -> SpectralField:
    kind = spec["kind"]
    if kind == "expression":
        names = ("x",) if grid.d == 1 else ("x", "y")
        expr = Expression(spec["expression"], names, {"L": grid.L})
        vals = expr(*grid.coords)
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"expression {spec['expression']!r} is not finite on the grid")
        return SpectralField.from_values(grid, vals)
    if kind == "file":
        f = load_field(spec["path"])
        if f.grid != grid:
            raise ConfigError(f"field file grid {f.grid} differs from the configured grid {grid}")
        return f
    return fractional_gaussian_field(float(spec["regularity"]), grid, int(spec["seed"]), 0,
                                     float(spec["amplitude"]))


def build_nonlinearity(spec, grid: Grid) -> Nonlinearity:
    spec = {"name": spec} if isinstance(spec, str) else dict(spec)
    if spec["name"] in ("softabs", "expression"):
        spec.setdefault("d", grid.d)
    nl = build(spec)
    if nl.d != grid.d:
        raise ConfigError(f"nonlinearity {nl.name} acts on R^{nl.d} but the grid has d={grid.d}")
    return nl
