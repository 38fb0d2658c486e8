"""Input validation helpers shared by the functional API and the estimators."""
from __future__ import annotations

import numbers

import numpy as np


def check_field(f, name: str = "field"):
    from .spectral import SpectralField

    if not isinstance(f, SpectralField):
        raise TypeError(f"{name} must be a SpectralField, got {type(f).__name__}")
    if not np.all(np.isfinite(f.coeffs)):
        raise ValueError(f"{name} has non-finite coefficients")
    return f


def check_same_grid(*fields) -> None:
    for f in fields:
        check_field(f)
    grids = {f.grid for f in fields}
    if len(grids) > 1:
        raise ValueError(f"fields live on different grids: {sorted(map(str, grids))}")


def check_scalar(value, name: str, *, low=None, high=None, low_open=False,
                 high_open=False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (low_open and value == low)):
        raise ValueError(f"{name}={value} must be {'>' if low_open else '>='} {low}")
    if high is not None and (value > high or (high_open and value == high)):
        raise ValueError(f"{name}={value} must be {'<' if high_open else '<='} {high}")
    return value


def check_int(value, name: str, *, low=None) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if low is not None and value < low:
        raise ValueError(f"{name}={value} must be >= {low}")
    return int(value)


def check_time_grid(ts, name: str = "t_grid") -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d sequence")
    if np.any(np.diff(ts) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return ts
