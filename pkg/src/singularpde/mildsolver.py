"""Mild solutions of du/dt = Lap u + F(grad u) b by Picard iteration.

The Duhamel operator is discretised by exponential product integration on a
uniform grid t_n = n h.  On (t_n, t_{n+1}] the integrand G = F(grad u) b is
frozen at the left node (b looked up at the midpoint, since b is only bounded
in time) and the heat kernel is integrated exactly::

    I_{n+1} = e^{-lam h} I_n + (1 - e^{-lam h}) / lam * G_n,   lam = |2 pi k / L|^2

This integrates the singular factor in closed form and is first order in h.
Because I_{n+1} depends on u only through u_0..u_n, the discrete fixed-point
map is lower triangular in time.
"""
from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .nonlinearity import Nonlinearity, apply_F_array
from .paraproduct import check_product_condition, fitted_product_constant, physical_product
from .roughfield import RoughCoefficient, ess_sup_norm, fractional_gaussian_field
from .spectral import (
    Grid,
    SpectralField,
    besov_norm,
    besov_norm_array,
    derivative_symbols,
    heat_multiplier,
    schauder_check,
)
from .validation import check_field, check_int, check_scalar

# exp(rho0 T0) <= 1 + 2/5
T0_FACTOR = 1.4
RHO_GRID = tuple(2.0**k for k in range(64))


class ParameterError(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, message: str, residuals: Sequence[float], partial: "MildSolution | None" = None):
        super().__init__(message)
        self.residuals = list(residuals)
        self.partial = partial


class NormExplosion(RuntimeError):
    def __init__(self, message: str, t: float, norm: float, residuals: Sequence[float] = ()):
        super().__init__(message)
        self.t = t
        self.norm = norm
        self.residuals = list(residuals)


# --- parameters --------------------------------------------------------------


@dataclass(frozen=True)
class ParameterCheck:
    passed: bool
    explanation: str

    def __bool__(self):
        return self.passed


def check_parameters(alpha: float, beta: float) -> ParameterCheck:
    """0 < alpha < 1 and max(-alpha, alpha - 1) < beta < 0."""
    if not 0 < alpha < 1:
        return ParameterCheck(False, f"alpha={alpha} must lie in (0, 1)")
    lower = max(-alpha, alpha - 1)
    if not lower < beta:
        return ParameterCheck(False, f"beta={beta} must exceed max(-alpha, alpha-1) = {lower}")
    if not beta < 0:
        return ParameterCheck(False, f"beta={beta} must be negative")
    return ParameterCheck(True, f"max(-alpha, alpha-1) = {lower} < beta = {beta} < 0")


def rate_exponent(alpha: float, beta: float) -> float:
    """(alpha - 1 - beta) / 2, negative inside the parameter window."""
    return (alpha - 1 - beta) / 2


def kernel_exponent(alpha: float, beta: float) -> float:
    """theta = (alpha + 1 - beta) / 2 in (1/2, 1): P_t maps C^beta to C^{alpha+1} at cost t^-theta."""
    return (alpha + 1 - beta) / 2


@dataclass(frozen=True)
class SolverParams:
    alpha: float
    beta: float
    T: float
    n_time_steps: int = 64
    rho: float = 1.0
    picard_tol: float = 1e-10
    max_picard_iters: int = 200
    damping: float = 1.0
    norm_ceiling: float = 1e8
    stall_patience: int = 3

    def __post_init__(self):
        check_scalar(self.alpha, "alpha")
        check_scalar(self.beta, "beta")
        gate = check_parameters(self.alpha, self.beta)
        if not gate:
            raise ParameterError(f"parameter window violated: {gate.explanation}")
        check_scalar(self.T, "T", low=0, low_open=True)
        check_int(self.n_time_steps, "n_time_steps", low=4)
        check_scalar(self.rho, "rho", low=1)
        check_scalar(self.picard_tol, "picard_tol", low=0, low_open=True)
        check_int(self.max_picard_iters, "max_picard_iters", low=1)
        check_scalar(self.damping, "damping", low=0, high=1, low_open=True)
        check_scalar(self.norm_ceiling, "norm_ceiling", low=0, low_open=True)
        check_int(self.stall_patience, "stall_patience", low=1)

    @property
    def gamma(self) -> float:
        """Spatial index alpha + 1 at which u is measured."""
        return self.alpha + 1

    @property
    def dt(self) -> float:
        return self.T / self.n_time_steps

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_time_steps + 1)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# --- time fields -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimeField:
    """Fields on a time grid, coefficients stacked along the leading axis."""

    grid: Grid
    times: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (times.size,) + self.grid.shape:
            raise ValueError(f"coefficient stack {coeffs.shape} does not match "
                             f"{times.size} times on grid {self.grid.shape}")
        times.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_fields(cls, times, fields: Sequence[SpectralField]) -> "TimeField":
        return cls(fields[0].grid, times, np.stack([f.coeffs for f in fields]))

    @classmethod
    def constant(cls, f: SpectralField, times) -> "TimeField":
        times = np.asarray(times, dtype=float)
        return cls(f.grid, times, np.broadcast_to(f.coeffs, (times.size,) + f.grid.shape).copy())

    def __len__(self):
        return self.times.size

    def at(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    @property
    def fields(self) -> list[SpectralField]:
        return [self.at(i) for i in range(len(self))]

    @property
    def values(self) -> np.ndarray:
        axes = tuple(range(1, self.grid.d + 1))
        return np.real(np.fft.ifftn(self.coeffs, axes=axes)) * self.grid.N**self.grid.d

    def norms(self, gamma: float) -> np.ndarray:
        return besov_norm_array(self.coeffs, self.grid.d, gamma)

    def _check(self, other: "TimeField"):
        if self.grid != other.grid or not np.array_equal(self.times, other.times):
            raise ValueError("time fields live on different grids")

    def __add__(self, other: "TimeField") -> "TimeField":
        self._check(other)
        return TimeField(self.grid, self.times, self.coeffs + other.coeffs)

    def __sub__(self, other: "TimeField") -> "TimeField":
        self._check(other)
        return TimeField(self.grid, self.times, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "TimeField":
        return TimeField(self.grid, self.times, self.coeffs * float(a))

    __rmul__ = __mul__


def weighted_norm(u: TimeField, rho: float, gamma: float) -> float:
    """max_n e^{-rho t_n} |u(t_n)|_gamma."""
    check_scalar(rho, "rho", low=0)
    return float(np.max(np.exp(-rho * u.times) * u.norms(gamma)))


def heat_flow(u0: SpectralField, times) -> TimeField:
    times = np.asarray(times, dtype=float)
    return TimeField(u0.grid, times, u0.coeffs * heat_multiplier(u0.grid, times))


# --- Duhamel operators ------------------------------------------------------


def _check_uniform(times: np.ndarray) -> float:
    h = np.diff(times)
    if times[0] != 0.0 or h.size == 0 or np.any(h <= 0) or np.ptp(h) > 1e-9 * h[0]:
        raise ValueError("time grid must be uniform and start at 0")
    return float(h[0])


def _b_stack(b: RoughCoefficient, times: np.ndarray) -> np.ndarray:
    """Coefficient of b on each interval (t_n, t_{n+1}]."""
    return np.stack([b.on_interval(a, c).coeffs for a, c in zip(times[:-1], times[1:])])


def integrand(u: TimeField, b: RoughCoefficient, nl: Nonlinearity) -> np.ndarray:
    """Coefficients of G_n = F(grad u(t_n)) b on (t_n, t_{n+1}], n = 0..M-1."""
    grid = u.grid
    if b.grid != grid:
        raise ValueError(f"b lives on {b.grid}, u on {grid}")
    if nl.d != grid.d:
        raise ValueError(f"{nl.name} acts on R^{nl.d} but the grid has d={grid.d}")
    left = u.coeffs[:-1]
    grads = np.stack([s * left for s in derivative_symbols(grid)])
    Fu = apply_F_array(nl, grads, grid.d)
    return physical_product(Fu, _b_stack(b, u.times), grid.d)


def duhamel(G: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """Exponential product integration of a left-frozen integrand; returns I_0..I_M."""
    lam = grid.laplacian_symbol
    decay = np.exp(-lam * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(lam > 0, -np.expm1(-lam * h) / lam, h)
    out = np.zeros((G.shape[0] + 1,) + grid.shape, dtype=np.complex128)
    for n in range(G.shape[0]):
        out[n + 1] = decay * out[n] + weight * G[n]
    return out


def apply_I(u: TimeField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams) -> TimeField:
    """The Duhamel term t -> int_0^t P_{t-s}(F(grad u(s)) b(s)) ds on u's time grid."""
    check_product_condition(p.alpha, p.beta)
    h = _check_uniform(u.times)
    if b.is_zero():
        return TimeField(u.grid, u.times, np.zeros_like(u.coeffs))
    return TimeField(u.grid, u.times, duhamel(integrand(u, b, nl), u.grid, h))


def apply_J(u: TimeField, u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity,
            p: SolverParams) -> TimeField:
    return heat_flow(u0, u.times) + apply_I(u, b, nl, p)


# --- contraction parameters ---------------------------------------------------


@dataclass(frozen=True)
class RegimeConstant:
    """C = (fitted product constant) x (fitted Schauder constant) x ess sup |b|_beta."""

    bony: float
    schauder: float
    b_norm: float

    @property
    def C(self) -> float:
        return self.bony * self.schauder * self.b_norm

    def to_dict(self) -> dict:
        return {"bony": self.bony, "schauder": self.schauder, "b_norm": self.b_norm, "C": self.C}


def estimate_regime_constant(b: RoughCoefficient, alpha: float, beta: float, n_pairs: int = 5,
                             seed: int = 0, T: float | None = None) -> RegimeConstant:
    """Fit the constants of the product and smoothing estimates against this b."""
    grid = b.grid
    b_norm = ess_sup_norm(b, beta)
    if b_norm == 0.0:
        return RegimeConstant(0.0, 0.0, 0.0)
    tests = [fractional_gaussian_field(alpha, grid, seed, 10_000 + i) for i in range(n_pairs)]
    pairs = [(f, b.slices[i % b.n_slices]) for i, f in enumerate(tests)]
    bony = fitted_product_constant(pairs, alpha, beta)
    T = b.T if T is None else T
    theta = kernel_exponent(alpha, beta)
    ts = np.geomspace(T * 1e-6, T, 25)
    schauder = max(schauder_check(s, beta, theta, ts).smoothing_constant
                   for s in b.slices if np.any(s.coeffs))
    bony = bony if np.isfinite(bony) else 0.0
    return RegimeConstant(float(bony), float(schauder), float(b_norm))


@dataclass(frozen=True)
class ContractionParams:
    R0: float
    rho0: float
    T0: float
    C: float

    def to_dict(self) -> dict:
        return {"R0": self.R0, "rho0": self.rho0, "T0": self.T0, "C": self.C}


def contraction_bounds(R0: float, C: float, rho: float, alpha: float, beta: float) -> tuple[float, float, float]:
    """Left-hand sides of the three constraints on rho (limits 1/4, 1/4, 1)."""
    r = rho ** rate_exponent(alpha, beta)
    return (2 * C * r * math.sqrt(1 + 4 * R0**2),
            (C / R0) * r if R0 > 0 else (math.inf if C > 0 else 0.0),
            C * r * math.sqrt(1 + 8 * R0**2))


def select_rho_T(R0: float, C: float, alpha: float, beta: float) -> ContractionParams:
    """Smallest rho0 in {1, 2, 4, ...} meeting the three constraints; T0 = ln(7/5) / rho0."""
    gate = check_parameters(alpha, beta)
    if not gate:
        raise ParameterError(gate.explanation)
    check_scalar(C, "C", low=0)
    check_scalar(R0, "R0", low=0, low_open=True)
    for rho in RHO_GRID:
        b1, b2, b3 = contraction_bounds(R0, C, rho, alpha, beta)
        if b1 <= 0.25 and b2 <= 0.25 and b3 < 1:
            return ContractionParams(float(R0), rho, math.log(T0_FACTOR) / rho, float(C))
    raise ParameterError(f"no rho <= {RHO_GRID[-1]:g} satisfies the contraction constraints "
                         f"(C={C}, R0={R0})")


def best_radius(C: float, alpha: float, beta: float) -> float:
    """Smallest radius whose contraction window is longest.

    The rho-constraints loosen in R through the C / R term and tighten through
    the sqrt(1 + R^2) terms, so rho0(R) is nonincreasing up to this radius and
    nondecreasing after it. Any radius above |u0| is admissible for the local
    theory, so restarts use max(|u(t_k)|, best_radius).
    """
    if C == 0:
        return 1.0
    best_R, best_rho = math.nan, math.inf
    for R in np.geomspace(1e-6, 1e6, 241):
        try:
            rho = select_rho_T(float(R), C, alpha, beta).rho0
        except ParameterError:
            continue
        if rho < best_rho:
            best_R, best_rho = float(R), rho
    return best_R


def small_data_radius(T: float, C: float, alpha: float, beta: float,
                      nl: Nonlinearity | None = None) -> tuple[float, float]:
    """(rho0, delta): initial data with |u0|_{alpha+1} <= delta have a solution on [0, T]."""
    if nl is not None and nl.f_of_zero != 0.0:
        raise ParameterError(f"small-data existence needs F(0) = 0; {nl.name} has F(0) = {nl.f_of_zero}")
    gate = check_parameters(alpha, beta)
    if not gate:
        raise ParameterError(gate.explanation)
    check_scalar(T, "T", low=0, low_open=True)
    check_scalar(C, "C", low=0)
    e = rate_exponent(alpha, beta)
    for rho in RHO_GRID:
        r = rho**e
        if 0.5 + C * math.sqrt(5) * r <= 1 and 3 * C * r < 1:
            return rho, math.exp(-rho * T)
    raise ParameterError(f"no rho <= {RHO_GRID[-1]:g} satisfies the small-data constraints (C={C})")


# --- Picard iteration -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MildSolution:
    u: TimeField
    u0: SpectralField
    params: SolverParams
    residuals: tuple[float, ...]
    contraction_factors: tuple[float, ...]
    step_residuals: np.ndarray = field(repr=False)
    step_factors: np.ndarray = field(repr=False)
    converged: bool = True
    warnings: tuple[str, ...] = ()
    nonlinearity: str = ""

    @property
    def time_grid(self) -> np.ndarray:
        return self.u.times

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def norms(self) -> np.ndarray:
        return self.u.norms(self.params.gamma)

    def at(self, i: int) -> SpectralField:
        return self.u.at(i)

    @property
    def final(self) -> SpectralField:
        return self.u.at(len(self.u) - 1)

    def weighted_norm(self, rho: float | None = None) -> float:
        return weighted_norm(self.u, self.params.rho if rho is None else rho, self.params.gamma)

    def diagnostics_rows(self) -> list[dict]:
        norms = self.norms
        return [{"t": float(t), "norm": float(n), "residual": float(r), "contraction_factor": float(q)}
                for t, n, r, q in zip(self.time_grid, norms, self.step_residuals, self.step_factors)]

    def iteration_rows(self) -> list[dict]:
        qs = (math.nan,) + self.contraction_factors
        return [{"iteration": i + 1, "residual": r, "contraction_factor": q}
                for i, (r, q) in enumerate(zip(self.residuals, qs))]


def _regime_warnings(p: SolverParams, nl: Nonlinearity, u0: SpectralField,
                     regime: ContractionParams | None) -> list[str]:
    out = []
    if regime is None:
        return out
    if p.T > regime.T0 * (1 + 1e-12) and not nl.satisfies_a4:
        out.append(f"T={p.T:g} exceeds T0={regime.T0:.4g}: outside the proven local regime")
    r0 = besov_norm(u0, p.gamma)
    if r0 > regime.R0 * (1 + 1e-12):
        out.append(f"|u0|_(alpha+1) = {r0:.4g} exceeds R0 = {regime.R0:.4g}")
    return out


def picard_solve(u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams,
                 regime: ContractionParams | None = None, guess: TimeField | None = None) -> MildSolution:
    """Iterate u <- (1 - damping) u + damping J(u) from the heat flow of u0.

    Stops when the step size drops to ``picard_tol`` both in the weighted norm
    and without the weight, so large rho cannot hide late-time error. Raises
    :class:`NonConvergence` if the residual grows ``stall_patience`` times in
    a row, turns non-finite or the iteration budget runs out, and
    :class:`NormExplosion` when an iterate exceeds ``norm_ceiling``.
    """
    check_field(u0, "u0")
    if b.grid != u0.grid:
        raise ValueError(f"b lives on {b.grid}, u0 on {u0.grid}")
    times = p.time_grid()
    notes = _regime_warnings(p, nl, u0, regime)
    for msg in notes:
        _warnings.warn(msg, RuntimeWarning, stacklevel=2)
    heat = heat_flow(u0, times)
    u = heat if guess is None else guess
    weights = np.exp(-p.rho * times)
    residuals: list[float] = []
    factors: list[float] = []
    prev_step = np.full(times.size, np.nan)
    step_res = np.zeros(times.size)
    growth = 0
    for it in range(p.max_picard_iters):
        Ju = heat + apply_I(u, b, nl, p)
        new = Ju if p.damping == 1.0 else u * (1 - p.damping) + Ju * p.damping
        norms = new.norms(p.gamma)
        if not np.all(np.isfinite(norms)) or np.max(norms) > p.norm_ceiling:
            bad = int(np.argmax(~np.isfinite(norms) | (norms > p.norm_ceiling)))
            raise NormExplosion(f"iterate {it + 1} exceeds the norm ceiling {p.norm_ceiling:g} "
                                f"at t={times[bad]:.4g}", float(times[bad]), float(norms[bad]), residuals)
        raw_steps = (new - u).norms(p.gamma)
        step_norms = raw_steps * weights
        res = float(np.max(step_norms))
        if residuals:
            factors.append(res / residuals[-1] if residuals[-1] > 0 else 0.0)
            growth = growth + 1 if res > residuals[-1] else 0
        residuals.append(res)
        with np.errstate(divide="ignore", invalid="ignore"):
            step_fac = np.where(prev_step > 0, step_norms / prev_step, 0.0)
        prev_step, step_res = step_norms, step_norms
        u = new
        if res <= p.picard_tol and float(np.max(raw_steps)) <= p.picard_tol:
            return MildSolution(u, u0, p, tuple(residuals), tuple(factors), step_res,
                                np.nan_to_num(step_fac), True, tuple(notes), nl.name)
        if growth >= p.stall_patience:
            break
    partial = MildSolution(u, u0, p, tuple(residuals), tuple(factors), step_res,
                           np.zeros(times.size), False, tuple(notes), nl.name)
    why = "residual grew" if growth >= p.stall_patience else "iteration budget exhausted"
    raise NonConvergence(f"Picard iteration did not converge ({why}; last residual "
                         f"{residuals[-1]:.3e} after {len(residuals)} iterations)", residuals, partial)


# --- diagnostics ------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    ratio: float
    bound: float
    degenerate: bool

    @property
    def within_bound(self) -> bool:
        return self.degenerate or self.ratio <= self.bound


def contraction_probe(u: TimeField, v: TimeField, u0: SpectralField, b: RoughCoefficient,
                      nl: Nonlinearity, p: SolverParams, C: float = math.nan) -> ProbeReport:
    """|J(u) - J(v)|^(rho) / |u - v|^(rho), and the bound C rho^e (1 + |u|^2 + |v|^2)^(1/2)."""
    den = weighted_norm(u - v, p.rho, p.gamma)
    nu, nv = weighted_norm(u, p.rho, p.gamma), weighted_norm(v, p.rho, p.gamma)
    bound = C * p.rho ** rate_exponent(p.alpha, p.beta) * math.sqrt(1 + nu**2 + nv**2)
    if den == 0.0:
        return ProbeReport(math.nan, bound, True)
    num = weighted_norm(apply_I(u, b, nl, p) - apply_I(v, b, nl, p), p.rho, p.gamma)
    return ProbeReport(num / den, bound, False)


def sublinear_gradient_constant(nl: Nonlinearity, grid: Grid, alpha: float, n_fields: int = 4,
                                seed: int = 0, amplitudes: Sequence[float] = (0.1, 1.0, 10.0, 100.0),
                                extra: Sequence[SpectralField] = ()) -> float:
    """max |F(grad f)|_alpha / (1 + |f|_{alpha+1}) over seeded fields (and ``extra``)."""
    fields = [fractional_gaussian_field(alpha + 1.3, grid, seed, 20_000 + i, a)
              for i in range(n_fields) for a in amplitudes]
    best = 0.0
    for f in list(fields) + list(extra):
        grads = np.stack([s * f.coeffs for s in derivative_symbols(grid)])
        Fu = SpectralField(grid, apply_F_array(nl, grads, grid.d))
        best = max(best, besov_norm(Fu, alpha) / (1 + besov_norm(f, alpha + 1)))
    return best


@dataclass(frozen=True)
class AprioriBound:
    K: float
    converged: bool
    c0: float
    A: float
    profile: np.ndarray = field(repr=False)


def gronwall_bound(m0: float, A: float, theta: float, T: float, n_nodes: int = 2000,
                   ceiling: float = 1e12) -> tuple[np.ndarray, bool]:
    """Fixed point of m(t) = m0 + A T^{1-theta}/(1-theta) + A int_0^t (t-s)^{-theta} m(s) ds.

    The kernel is integrated exactly on each cell with m frozen at the right
    node, which bounds the (increasing) continuous solution from above. The
    discrete map is lower triangular, so its iteration terminates after one
    pass; this is carried out as forward substitution. Fails (returns False)
    if a diagonal weight makes the step non-contractive or m passes ``ceiling``.
    """
    t = np.linspace(0.0, T, n_nodes + 1)
    g = m0 + A * T ** (1 - theta) / (1 - theta)
    m = np.empty(t.size)
    m[0] = g
    diag = A * (t[1] - t[0]) ** (1 - theta) / (1 - theta)
    if diag >= 1:
        return m[:1], False
    for n in range(1, t.size):
        # weights of m(t_1) .. m(t_{n-1}); the m(t_n) weight is ``diag``
        lo = t[n] - t[:n - 1]
        hi = t[n] - t[1:n]
        w = (lo ** (1 - theta) - hi ** (1 - theta)) / (1 - theta)
        m[n] = (g + A * np.dot(w, m[1:n])) / (1 - diag)
        if not np.isfinite(m[n]) or m[n] > ceiling:
            return m[:n + 1], False
    return m, True


def apriori_bound(u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams,
                  regime: RegimeConstant | None = None, n_nodes: int = 2000) -> AprioriBound:
    """Ceiling K on |u(t)|_{alpha+1} over [0, T] for nonlinearities of sub-linear growth."""
    if not nl.satisfies_a4:
        raise ParameterError(f"{nl.name} declares no global Lipschitz / sub-linear constants")
    regime = regime or estimate_regime_constant(b, p.alpha, p.beta)
    ts = np.geomspace(p.T * 1e-6, p.T, 25)
    base = besov_norm(u0, p.gamma)
    c0 = 1.0
    if base > 0:
        c0 = max(1.0, schauder_check(u0, p.gamma, 0.0, ts).smoothing_constant)
    m0 = c0 * base
    cF = sublinear_gradient_constant(nl, u0.grid, p.alpha, extra=(u0,))
    A = regime.C * cF
    if A == 0.0:
        return AprioriBound(m0, True, c0, 0.0, np.array([m0]))
    prof, ok = gronwall_bound(m0, A, kernel_exponent(p.alpha, p.beta), p.T, n_nodes)
    return AprioriBound(float(prof.max()) if ok else math.inf, ok, c0, A, prof)


def holder_time_norm(u: TimeField, eps: float, gamma: float) -> float:
    """sup_t |u(t)|_gamma + sup_{s<t} |u(t) - u(s)|_gamma / (t - s)^eps on the grid."""
    check_scalar(eps, "eps", low=0, low_open=True)
    sup = float(np.max(u.norms(gamma)))
    semi = 0.0
    for i in range(1, len(u)):
        diffs = u.coeffs[i][None] - u.coeffs[:i]
        q = besov_norm_array(diffs, u.grid.d, gamma) / (u.times[i] - u.times[:i]) ** eps
        semi = max(semi, float(np.max(q)))
    return sup + semi


def check_holder_regime(alpha: float, beta: float, eps: float, nu: float | None = None,
                        eps_prime: float | None = None, alpha_prime: float | None = None) -> list[str]:
    """Violated constraints among the user-chosen time-regularity exponents (empty = valid)."""
    bad = []
    if not eps > 0:
        bad.append("eps must be positive")
    if not alpha - 1 - beta + eps < 0:
        bad.append(f"alpha - 1 - beta + eps = {alpha - 1 - beta + eps:.4g} must be negative")
    if nu is not None and not nu > 0:
        bad.append("nu must be positive")
    if alpha_prime is not None:
        if not alpha_prime > alpha:
            bad.append("alpha' must exceed alpha")
        if not alpha_prime - 1 - beta < 0:
            bad.append("alpha' - 1 - beta must be negative")
        if nu is not None and not alpha_prime < alpha + nu:
            bad.append("alpha' must be below alpha + nu")
    if eps_prime is not None:
        if not eps_prime > eps:
            bad.append("eps' must exceed eps")
        ap = alpha if alpha_prime is None else alpha_prime
        if not ap - 1 - beta + 2 * eps_prime < 0:
            bad.append("alpha' - 1 - beta + 2 eps' must be negative")
        if nu is not None and not ap + 2 * eps_prime < alpha + 2 * eps + nu:
            bad.append("alpha' + 2 eps' must be below alpha + 2 eps + nu")
    return bad


@dataclass(frozen=True)
class ContinuityReport:
    passed: bool
    weighted_norm: float
    bound: float
    rho0: float
    regime_ok: bool
    notes: tuple[str, ...] = ()


def continuity_check(u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams,
                     regime: ContractionParams, solution: MildSolution | None = None,
                     tol: float = 1e-9) -> ContinuityReport:
    """Check |u|^(rho0) <= 2 |u0|_{alpha+1} on a run inside the contraction regime."""
    notes = []
    regime_ok = True
    if p.T > regime.T0 * (1 + 1e-12):
        regime_ok = False
        notes.append(f"T={p.T:g} exceeds T0={regime.T0:.4g}")
    r0 = besov_norm(u0, p.gamma)
    if r0 > regime.R0 * (1 + 1e-12):
        regime_ok = False
        notes.append(f"|u0| = {r0:.4g} exceeds R0 = {regime.R0:.4g}")
    if solution is None:
        solution = picard_solve(u0, b, nl, replace(p, rho=regime.rho0))
    wn = weighted_norm(solution.u, regime.rho0, p.gamma)
    bound = 2 * r0
    return ContinuityReport(wn <= bound + tol, wn, bound, regime.rho0, regime_ok, tuple(notes))


# --- blow-up scan -------------------------------------------------------------


@dataclass(frozen=True)
class BlowUpReport:
    status: str  # completed | norm_exceeded | window_limit
    t_reached: float
    norm_trace: tuple[tuple[float, float], ...]
    restart_count: int
    windows: tuple[tuple[float, float, float], ...] = ()  # (t_start, length, rho0)
    final: SpectralField | None = None

    @property
    def max_norm(self) -> float:
        return max(n for _, n in self.norm_trace)


def blow_up_scan(u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity, alpha: float, beta: float,
                 T: float, ceiling: float, steps_per_window: int = 8, C: float | None = None,
                 picard_tol: float = 1e-10, max_windows: int = 10_000,
                 max_picard_iters: int = 200, radius_floor: bool = True) -> BlowUpReport:
    """Restart the local solver on windows [t_k, t_k + T0(R_k)].

    R_k = |u(t_k)|_{alpha+1}, raised to :func:`best_radius` when smaller
    (``radius_floor=False`` uses the bare norm, whose windows shrink to nothing
    as the solution decays). Stops at
    T (completed), when the norm passes ``ceiling`` (norm_exceeded), or after
    ``max_windows`` windows (window_limit).
    """
    gamma = alpha + 1
    if C is None:
        C = estimate_regime_constant(b, alpha, beta).C
    floor = best_radius(C, alpha, beta) if radius_floor else 1e-12
    t, u = 0.0, u0
    trace = [(0.0, besov_norm(u0, gamma))]
    windows = []
    while t < T * (1 - 1e-12):
        if len(windows) >= max_windows:
            return BlowUpReport("window_limit", t, tuple(trace), len(windows) - 1, tuple(windows), u)
        R = max(trace[-1][1], floor)
        reg = select_rho_T(R, C, alpha, beta)
        length = min(reg.T0, T - t)
        p = SolverParams(alpha, beta, length, steps_per_window, reg.rho0, picard_tol,
                         max_picard_iters, norm_ceiling=ceiling)
        try:
            sol = picard_solve(u, b.restricted(t, t + length), nl, p)
        except NormExplosion as exc:
            trace.append((t + exc.t, exc.norm))
            return BlowUpReport("norm_exceeded", t + exc.t, tuple(trace), len(windows),
                                tuple(windows), u)
        windows.append((t, length, reg.rho0))
        norms = sol.norms
        trace.extend((t + s, float(n)) for s, n in zip(sol.time_grid[1:], norms[1:]))
        u = sol.final
        t = t + length
        if trace[-1][1] > ceiling:
            return BlowUpReport("norm_exceeded", t, tuple(trace), len(windows) - 1, tuple(windows), u)
    return BlowUpReport("completed", T, tuple(trace), max(len(windows) - 1, 0), tuple(windows), u)
