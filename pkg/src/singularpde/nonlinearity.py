"""The pointwise map F acting on gradients, its constants, and numerical checks.

Built-ins cover one representative per regime:

* ``quadratic``  F(x) = x^2 (d = 1): gradient Lipschitz, not globally Lipschitz.
* ``softabs``    F(x) = sqrt(1 + |x|^2) - 1: globally Lipschitz, F(0) = 0.
* ``sine``       F(x) = sin(x) (d = 1): globally Lipschitz, F(0) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expression import Expression
from .roughfield import fractional_gaussian_field
from .spectral import (
    Grid,
    SpectralField,
    besov_norm,
    pad_coeffs,
    padded_size,
    to_coeffs,
    to_values,
    truncate_coeffs,
)
from .validation import check_same_grid

# constant c in |F(a) - F(b)| <= c sqrt(d) l |a - b| (1 + |a|^2 + |b|^2)^{1/2};
# follows from 1 + (|a| + |b|) / 2 <= sqrt(2) (1 + |a|^2 + |b|^2)^{1/2}
INCREMENT_CONSTANT = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """F: R^d -> R together with declared constants.

    ``eval`` takes an array of shape ``(d, ...)`` and returns shape ``(...)``;
    ``grad`` returns shape ``(d, ...)``.
    """

    name: str
    d: int
    eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grad: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lip_grad: float
    lin_growth: float
    global_lip: float | None = None
    sublin: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def f_of_zero(self) -> float:
        return float(self.eval(np.zeros((self.d, 1)))[0])

    @property
    def satisfies_a4(self) -> bool:
        return self.global_lip is not None and self.sublin is not None

    def __call__(self, x) -> np.ndarray:
        return self.eval(np.asarray(x, dtype=float))

    def spec(self) -> dict:
        return {"name": self.name, **self.params}


def quadratic() -> Nonlinearity:
    return Nonlinearity("quadratic", 1, lambda x: x[0] ** 2, lambda x: 2.0 * x,
                        lip_grad=2.0, lin_growth=2.0)


def softabs(d: int = 1) -> Nonlinearity:
    def ev(x):
        return np.sqrt(1.0 + np.sum(x**2, axis=0)) - 1.0

    def gr(x):
        return x / np.sqrt(1.0 + np.sum(x**2, axis=0))

    return Nonlinearity("softabs", d, ev, gr, lip_grad=1.0, lin_growth=1.0,
                        global_lip=1.0, sublin=1.0, params={"d": d})


def sine() -> Nonlinearity:
    return Nonlinearity("sine", 1, lambda x: np.sin(x[0]), lambda x: np.cos(x),
                        lip_grad=1.0, lin_growth=1.0, global_lip=1.0, sublin=1.0)


def from_expression(source: str, d: int = 1, *, lip_grad: float, lin_growth: float,
                    global_lip: float | None = None, sublin: float | None = None,
                    name: str | None = None) -> Nonlinearity:
    """Custom F written in the expression language over variables x1..xd.

    The constants are declarations; :func:`verify_a1` / :func:`verify_a4`
    check them on samples.
    """
    names = tuple(f"x{i + 1}" for i in range(d))
    expr = Expression(source, names)
    partials = [expr.diff(v) for v in names]

    def ev(x):
        return expr(*x)

    def gr(x):
        return np.stack([p(*x) for p in partials])

    return Nonlinearity(name or f"expr:{source}", d, ev, gr, float(lip_grad), float(lin_growth),
                        None if global_lip is None else float(global_lip),
                        None if sublin is None else float(sublin),
                        params={"expression": source, "d": d, "lip_grad": lip_grad,
                                "lin_growth": lin_growth, "global_lip": global_lip,
                                "sublin": sublin})


CATALOG = {"quadratic": quadratic, "softabs": softabs, "sine": sine}


def build(spec: dict | str) -> Nonlinearity:
    """Nonlinearity from a config entry: a catalog name or ``{"name": ..., ...}``."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    if name in CATALOG:
        return CATALOG[name](**spec)
    if name == "expression":
        return from_expression(spec.pop("expression"), **spec)
    raise ValueError(f"unknown nonlinearity {name!r}; choose from {sorted(CATALOG)} or 'expression'")


# --- operator F(f)(x) = F(f(x)) --------------------------------------------


def apply_F_array(nl: Nonlinearity, comps: np.ndarray, d: int) -> np.ndarray:
    """Composition on coefficient arrays of shape ``(nl.d, *batch, N, ..)``.

    Evaluated on the 3/2-padded grid and projected back to the band.
    """
    N = comps.shape[-1]
    M = padded_size(N)
    vals = to_values(pad_coeffs(comps, d, M), d)
    out = nl.eval(vals)
    return truncate_coeffs(to_coeffs(out, d), d, N)


def apply_F(nl: Nonlinearity, f: Sequence[SpectralField] | SpectralField) -> SpectralField:
    if isinstance(f, SpectralField):
        f = [f]
    f = list(f)
    if len(f) != nl.d:
        raise ValueError(f"{nl.name} acts on R^{nl.d}; got {len(f)} components")
    check_same_grid(*f)
    grid = f[0].grid
    comps = np.stack([c.coeffs for c in f])
    return SpectralField(grid, apply_F_array(nl, comps, grid.d))


def composition_ratio(nl: Nonlinearity, f: Sequence[SpectralField], g: Sequence[SpectralField],
                      alpha: float) -> float:
    """|F(f) - F(g)|_a / ((1 + |f|_a^2 + |g|_a^2)^{1/2} |f - g|_a), componentwise norms summed."""
    def vnorm(comps):
        return math.sqrt(sum(besov_norm(c, alpha) ** 2 for c in comps))

    diff = vnorm([a - b for a, b in zip(f, g)])
    if diff == 0.0:
        return math.nan
    num = besov_norm(apply_F(nl, f) - apply_F(nl, g), alpha)
    return num / (math.sqrt(1 + vnorm(f) ** 2 + vnorm(g) ** 2) * diff)


def composition_constant(nl: Nonlinearity, grid: Grid, alpha: float, n_pairs: int = 20,
                         seed: int = 0, amplitude: float = 1.0) -> float:
    """Empirical constant of the composition estimate over seeded field pairs."""
    best = 0.0
    for p in range(n_pairs):
        f = [fractional_gaussian_field(alpha + 0.3, grid, seed, 2 * p * nl.d + i, amplitude)
             for i in range(nl.d)]
        g = [fractional_gaussian_field(alpha + 0.3, grid, seed, (2 * p + 1) * nl.d + i, amplitude)
             for i in range(nl.d)]
        r = composition_ratio(nl, f, g, alpha)
        if np.isfinite(r):
            best = max(best, r)
    return best


# --- assumption checks ------------------------------------------------------


@dataclass
class AssumptionReport:
    name: str
    passed: bool
    ratios: dict[str, float]
    notes: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.passed


def _sample_box(nl: Nonlinearity, box: float | tuple[float, float], n: int, seed: int):
    lo, hi = (-box, box) if np.isscalar(box) else box
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, (nl.d, n)), rng.uniform(lo, hi, (nl.d, n))


def gradient_consistency(nl: Nonlinearity, pts: np.ndarray, h: float = 1e-6) -> float:
    """Worst relative error between ``grad`` and central differences of ``eval``."""
    g = nl.grad(pts)
    worst = 0.0
    for i in range(nl.d):
        e = np.zeros((nl.d, 1))
        e[i] = h
        fd = (nl.eval(pts + e) - nl.eval(pts - e)) / (2 * h)
        err = np.abs(fd - g[i]) / np.maximum(1.0, np.abs(g[i]))
        worst = max(worst, float(np.max(err)))
    return worst


def verify_a1(nl: Nonlinearity, box: float | tuple[float, float] = 10.0, n_samples: int = 2000,
              seed: int = 0, rtol: float = 1e-9) -> AssumptionReport:
    """Check gradient-Lipschitz, linear gradient growth and the increment bound on samples.

    Ratios are measured/declared; the report passes when all are <= 1 + rtol
    and the gradient matches finite differences to 1e-5.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    a, b = _sample_box(nl, box, n_samples, seed)
    ga, gb = nl.grad(a), nl.grad(b)
    dist = np.linalg.norm(a - b, axis=0)
    ok = dist > 0
    lip = np.max(np.abs(ga - gb)[:, ok] / dist[ok]) / nl.lip_grad
    growth = np.max(np.abs(ga) / (1 + np.linalg.norm(a, axis=0))) / nl.lin_growth
    bound = (INCREMENT_CONSTANT * math.sqrt(nl.d) * nl.lin_growth * dist
             * np.sqrt(1 + np.sum(a**2, axis=0) + np.sum(b**2, axis=0)))
    incr = np.max(np.abs(nl.eval(a) - nl.eval(b))[ok] / bound[ok])
    fd = gradient_consistency(nl, a)
    ratios = {"lip_grad": float(lip), "lin_growth": float(growth), "increment": float(incr),
              "gradient_fd_error": fd}
    notes = [f"{k} ratio {v:.3g} exceeds 1" for k, v in ratios.items()
             if k != "gradient_fd_error" and v > 1 + rtol]
    if fd > 1e-5:
        notes.append(f"gradient disagrees with finite differences ({fd:.2e})")
    return AssumptionReport("lipschitz-gradient", not notes, ratios, notes)


def verify_a4(nl: Nonlinearity, box: float | tuple[float, float] = 10.0, n_samples: int = 2000,
              seed: int = 0, global_lip: float | None = None, sublin: float | None = None,
              grid: Grid | None = None, alpha: float = 0.5, rtol: float = 1e-9) -> AssumptionReport:
    """Check global Lipschitz and sub-linear growth, pointwise and in the alpha-norm.

    The norm check scales a seeded test field by 1, 10, 100 and requires the
    ratio |F(f)|_a / (1 + |f|_a) at the largest amplitude to stay within twice
    its value at the smaller ones.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    glip = nl.global_lip if global_lip is None else global_lip
    slin = nl.sublin if sublin is None else sublin
    notes = []
    ratios: dict[str, float] = {}
    if glip is None or slin is None:
        notes.append("no global Lipschitz / sub-linear constant declared")
    a, b = _sample_box(nl, box, n_samples, seed)
    dist = np.linalg.norm(a - b, axis=0)
    ok = dist > 0
    measured_lip = float(np.max(np.abs(nl.eval(a) - nl.eval(b))[ok] / dist[ok]))
    measured_sub = float(np.max(np.abs(nl.eval(a)) / (1 + np.linalg.norm(a, axis=0))))
    ratios["measured_global_lip"] = measured_lip
    ratios["measured_sublin"] = measured_sub
    if glip is not None:
        ratios["global_lip"] = measured_lip / glip
        if ratios["global_lip"] > 1 + rtol:
            notes.append(f"global Lipschitz ratio {ratios['global_lip']:.3g} exceeds 1")
    if slin is not None:
        ratios["sublin"] = measured_sub / slin
        if ratios["sublin"] > 1 + rtol:
            notes.append(f"sub-linear growth ratio {ratios['sublin']:.3g} exceeds 1")
    if grid is None:
        grid = Grid(2, 64, 1.0) if nl.d == 2 else Grid(1, 128, 1.0)
    growth = []
    for amp in (1.0, 10.0, 100.0):
        comps = [fractional_gaussian_field(alpha + 0.3, grid, seed, i, amp) for i in range(nl.d)]
        fn = math.sqrt(sum(besov_norm(c, alpha) ** 2 for c in comps))
        growth.append(besov_norm(apply_F(nl, comps), alpha) / (1 + fn))
    ratios["norm_growth_constant"] = float(max(growth))
    ratios["norm_growth_drift"] = float(growth[-1] / max(max(growth[:-1]), 1e-300))
    if growth[-1] > 2 * max(growth[:-1]):
        notes.append("alpha-norm growth is not sub-linear on the test fields")
    return AssumptionReport("global-lipschitz-sublinear", not notes, ratios, notes)
