"""Seeded synthetic coefficients b in L^inf([0, T]; C^beta), beta in (-1/2, 0).

Each time slice is a fractional Gaussian Fourier series

    b(x) = sum_{k != 0} |k|^{-(beta + d/2)} (X_k + i Y_k) / sqrt(2) e^{2 pi i k.x / L}

with X_k, Y_k i.i.d. standard normal. Pairs are drawn from a Philox (counter
based) stream keyed by ``(seed, slice)`` in a fixed shell order: modes with
max|k_i| = 1 first, then 2, and so on. Hence the field at resolution 2N
contains the field at resolution N exactly, plus new high modes, which is
what makes resolution-doubling comparisons meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expression import Expression
from .spectral import Grid, SpectralField, besov_norm

GENERATOR_ID = "philox4x64/fgf-shell-ordered/v1"


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


@lru_cache(maxsize=None)
def _shell_order(d: int, N: int) -> tuple[np.ndarray, ...]:
    """Half-space modes in shell order; returns per-axis index arrays."""
    half = N // 2
    if d == 1:
        k = np.arange(1, half)
        return (k,)
    modes = []
    for s in range(1, half):
        for kx in range(-s, s + 1):
            for ky in range(-s, s + 1):
                if max(abs(kx), abs(ky)) != s:
                    continue
                if kx > 0 or (kx == 0 and ky > 0):
                    modes.append((kx, ky))
    arr = np.array(modes)
    return arr[:, 0], arr[:, 1]


def fractional_gaussian_field(regularity: float, grid: Grid, seed: int, stream: int = 0,
                              amplitude: float = 1.0) -> SpectralField:
    """Mean-zero Gaussian field with spectral decay |k|^{-(regularity + d/2)}."""
    modes = _shell_order(grid.d, grid.N)
    n = modes[0].size
    z = _rng(seed, stream).standard_normal((n, 2))
    kmag = np.sqrt(sum(m.astype(float) ** 2 for m in modes))
    c_half = amplitude * kmag ** (-(regularity + grid.d / 2)) * (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    pos = tuple(np.mod(m, grid.N) for m in modes)
    neg = tuple(np.mod(-m, grid.N) for m in modes)
    coeffs[pos] = c_half
    coeffs[neg] = np.conj(c_half)
    return SpectralField(grid, coeffs)


@dataclass(frozen=True, eq=False)
class RoughCoefficient:
    """Piecewise-constant-in-time family of fields; slice i is active on (t_i, t_{i+1}]."""

    times: tuple[float, ...]
    slices: tuple[SpectralField, ...]
    T: float
    beta: float = math.nan
    seed: int | None = None
    generator_id: str = GENERATOR_ID
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) != len(self.slices) or not times:
            raise ValueError("need one time stamp per slice")
        if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("time stamps must start at 0 and increase strictly")
        if times[-1] >= self.T and len(times) > 1:
            raise ValueError("last slice must start before T")
        grids = {s.grid for s in self.slices}
        if len(grids) != 1:
            raise ValueError("all slices must share one grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "slices", tuple(self.slices))

    @property
    def grid(self) -> Grid:
        return self.slices[0].grid

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    def index_at(self, t: float) -> int:
        """Left-continuous lookup: slice i for t in (t_i, t_{i+1}], slice 0 at t = 0."""
        i = int(np.searchsorted(self.times, t, side="left")) - 1
        return min(max(i, 0), self.n_slices - 1)

    def at(self, t: float) -> SpectralField:
        return self.slices[self.index_at(t)]

    def on_interval(self, a: float, b: float) -> SpectralField:
        """Slice active on the open interval (a, b), looked up at its midpoint."""
        return self.slices[self.index_at(0.5 * (a + b))]

    def is_zero(self) -> bool:
        return all(not np.any(s.coeffs) for s in self.slices)

    def time_reversed(self) -> "RoughCoefficient":
        """The coefficient s -> b(T - s) on [0, T]."""
        ends = list(self.times[1:]) + [self.T]
        times = [self.T - e for e in reversed(ends)]
        return RoughCoefficient(tuple(times), tuple(reversed(self.slices)), self.T,
                                self.beta, self.seed, self.generator_id, dict(self.meta))

    def scaled(self, a: float) -> "RoughCoefficient":
        return RoughCoefficient(self.times, tuple(s * a for s in self.slices), self.T,
                                self.beta, self.seed, self.generator_id, dict(self.meta))

    def restricted(self, t0: float, t1: float) -> "RoughCoefficient":
        """The coefficient s -> b(t0 + s) on [0, t1 - t0]."""
        if not 0 <= t0 < t1:
            raise ValueError("need 0 <= t0 < t1")
        keep = [i for i, t in enumerate(self.times) if t0 < t < t1]
        first = self.index_at(np.nextafter(t0, np.inf))
        idx = [first] + [i for i in keep if i != first]
        times = [0.0] + [self.times[i] - t0 for i in idx[1:]]
        return RoughCoefficient(tuple(times), tuple(self.slices[i] for i in idx), t1 - t0,
                                self.beta, self.seed, self.generator_id, dict(self.meta))


def _slice_times(T: float, n_slices: int) -> tuple[float, ...]:
    return tuple(T * i / n_slices for i in range(n_slices))


def generate_rough(beta: float, grid: Grid, seed: int, n_slices: int = 1, T: float = 1.0,
                   amplitude: float = 1.0) -> RoughCoefficient:
    """Gaussian coefficient of nominal regularity ``beta`` (-1/2 < beta < 0)."""
    if not -0.5 < beta < 0:
        raise ValueError(
            f"beta={beta} is outside (-1/2, 0); the parameter window max(-alpha, alpha-1) < beta < 0 "
            "forces -1/2 < beta < 0"
        )
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    slices = tuple(fractional_gaussian_field(beta, grid, seed, i, amplitude) for i in range(n_slices))
    return RoughCoefficient(_slice_times(T, n_slices), slices, float(T), float(beta), int(seed),
                            GENERATOR_ID, {"amplitude": float(amplitude)})


def ess_sup_norm(b: RoughCoefficient, gamma: float) -> float:
    return max(besov_norm(s, gamma) for s in b.slices)


def smooth_coefficient(expr: str | Expression, grid: Grid, n_slices: int = 1,
                       T: float = 1.0) -> RoughCoefficient:
    """Coefficient sampled from a closed-form expression in x (, y) and t.

    Slice i samples the expression at its start time i T / n_slices.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    names = ("x", "t") if grid.d == 1 else ("x", "y", "t")
    if not isinstance(expr, Expression):
        expr = Expression(str(expr), names, {"L": grid.L})
    times = _slice_times(T, n_slices)
    coords = grid.coords
    slices = []
    for t in times:
        vals = expr(*coords, np.full(grid.shape, t))
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"expression {expr.source!r} is not finite on the grid at t={t}")
        slices.append(SpectralField.from_values(grid, vals))
    return RoughCoefficient(times, tuple(slices), float(T), math.inf, None,
                            f"expression:{expr.source}", {"expression": expr.source})


def constant_coefficient(grid: Grid, value: float, T: float = 1.0) -> RoughCoefficient:
    return RoughCoefficient((0.0,), (SpectralField.constant(grid, value),), float(T), math.inf,
                            None, f"constant:{value!r}", {"constant": float(value)})


def zero_coefficient(grid: Grid, T: float = 1.0) -> RoughCoefficient:
    return constant_coefficient(grid, 0.0, T)


def resolution_study(beta: float, gammas: Sequence[float], Ns: Sequence[int], seeds: Sequence[int],
                     d: int = 1, L: float = 1.0) -> dict[float, np.ndarray]:
    """Besov norms of generated fields, indexed ``[gamma][seed, N]``."""
    out = {g: np.zeros((len(seeds), len(Ns))) for g in gammas}
    for a, seed in enumerate(seeds):
        for c, N in enumerate(Ns):
            f = fractional_gaussian_field(beta, Grid(d, N, L), seed)
            for g in gammas:
                out[g][a, c] = besov_norm(f, g)
    return out
