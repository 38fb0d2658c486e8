"""Monte Carlo virtual solution of the singular quadratic BSDE (one space dimension).

The backward PDE  du/dt + u_xx + F(u_x) b = 0,  u(T) = Phi  is solved through the
forward solver in reversed time s = T - t. The auxiliary field

    w(t) = - int_t^T P_{s-t}( F(u_x(s)) b(s) ) ds,     w(T) = 0,

reuses the same product-integration quadrature. Along paths B with quadratic
variation 2r started at (t, x),

    Yhat_r = (P_{T-r} Phi)(B_r),   Zhat_r = d/dx (P_{T-r} Phi)(B_r),
    Y_r = Yhat_r - w(r, B_r),      Z_r = Zhat_r - w_x(r, B_r).
"""
from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .mildsolver import (
    MildSolution,
    SolverParams,
    TimeField,
    apply_I,
    estimate_regime_constant,
    picard_solve,
    small_data_radius,
)
from .nonlinearity import Nonlinearity
from .roughfield import RoughCoefficient
from .spectral import SpectralField, besov_norm, derivative_symbols, heat_multiplier
from .validation import check_field, check_int, check_scalar

PATH_CHUNK = 4096


def forward_time(v: TimeField, T: float) -> TimeField:
    """Re-index a reversed-time field v(s), s = T - t, to t ascending."""
    return TimeField(v.grid, T - v.times[::-1], v.coeffs[::-1].copy())


@dataclass(frozen=True, eq=False)
class BackwardProblem:
    phi: SpectralField
    b: RoughCoefficient
    nl: Nonlinearity
    params: SolverParams
    solution: MildSolution  # reversed time
    u: TimeField  # forward time
    w: TimeField  # forward time
    delta: float = math.nan
    small_data_ok: bool = True
    notes: tuple[str, ...] = ()

    @property
    def T(self) -> float:
        return self.params.T

    @property
    def grid(self):
        return self.phi.grid


def solve_backward_pde(phi: SpectralField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams,
                       C: float | None = None) -> tuple[MildSolution, float, list[str]]:
    """Solve the terminal-value problem by time reversal.

    Returns the reversed-time solution (its initial field is Phi), the
    small-data radius delta for the horizon, and any warnings.
    """
    check_field(phi, "phi")
    if phi.grid.d != 1:
        raise ValueError("the BSDE layer is one-dimensional")
    b_rev = b.time_reversed()
    notes = []
    delta = math.nan
    if nl.f_of_zero == 0.0:
        C = estimate_regime_constant(b_rev, p.alpha, p.beta, T=p.T).C if C is None else C
        _, delta = small_data_radius(p.T, C, p.alpha, p.beta, nl)
        size = besov_norm(phi, p.gamma)
        if size > delta:
            notes.append(f"|Phi|_(alpha+1) = {size:.4g} exceeds the small-data radius {delta:.4g} "
                         f"for T={p.T:g}; proceeding outside the proven regime")
    else:
        notes.append(f"{nl.name} has F(0) != 0; small-data theory does not apply")
    for msg in notes:
        _warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return picard_solve(phi, b_rev, nl, p), delta, notes


def solve_auxiliary_w(solution: MildSolution, b: RoughCoefficient, nl: Nonlinearity) -> TimeField:
    """w on the forward time grid from a reversed-time backward solution; w(T) = 0 exactly."""
    v = solution.u
    w_rev = apply_I(v, b.time_reversed(), nl, solution.params) * -1.0
    return forward_time(w_rev, solution.params.T)


def backward_problem(phi: SpectralField, b: RoughCoefficient, nl: Nonlinearity, p: SolverParams,
                     C: float | None = None) -> BackwardProblem:
    sol, delta, notes = solve_backward_pde(phi, b, nl, p, C)
    w = solve_auxiliary_w(sol, b, nl)
    ok = not any("small-data" in n for n in notes)
    return BackwardProblem(phi, b, nl, p, sol, forward_time(sol.u, p.T), w, delta, ok, tuple(notes))


# --- paths ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    t: float
    x: float
    T: float
    n_paths: int
    n_steps: int
    seed: int
    times: np.ndarray
    positions: np.ndarray = field(repr=False)  # (n_paths, n_steps + 1)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.positions, axis=1)

    def variance_check(self, k: float = 5.0) -> tuple[np.ndarray, bool]:
        """Var(B_r - x) / (2 (r - t)) per time, and whether each is within k SE of 1."""
        disp = self.positions[:, 1:] - self.x
        ratio = np.mean(disp**2, axis=0) / (2 * (self.times[1:] - self.t))
        # standard error of a chi-square mean with n degrees of freedom, relative
        se = math.sqrt(2.0 / self.n_paths)
        return ratio, bool(np.all(np.abs(ratio - 1) <= k * se))


def simulate_paths(t: float, x: float, T: float, n_paths: int, n_steps: int, seed: int) -> PathEnsemble:
    """Brownian paths from (t, x) with increments N(0, 2 dt); one Philox substream per chunk."""
    check_scalar(t, "t", low=0)
    check_scalar(x, "x")
    check_scalar(T, "T")
    if not t < T:
        raise ValueError(f"need t < T, got t={t}, T={T}")
    check_int(n_paths, "n_paths", low=1)
    check_int(n_steps, "n_steps", low=1)
    check_int(seed, "seed", low=0)
    dt = (T - t) / n_steps
    n_chunks = -(-n_paths // PATH_CHUNK)
    streams = np.random.SeedSequence([seed, 0x85DE]).spawn(n_chunks)
    parts = []
    for c, ss in enumerate(streams):
        m = min(PATH_CHUNK, n_paths - c * PATH_CHUNK)
        parts.append(np.random.Generator(np.random.Philox(ss)).standard_normal((m, n_steps)))
    dB = np.concatenate(parts) * math.sqrt(2 * dt)
    pos = np.empty((n_paths, n_steps + 1))
    pos[:, 0] = x
    np.cumsum(dB, axis=1, out=pos[:, 1:])
    pos[:, 1:] += x
    times = t + dt * np.arange(n_steps + 1)
    times[-1] = T
    return PathEnsemble(float(t), float(x), float(T), n_paths, n_steps, seed, times, pos)


# --- virtual solution ---------------------------------------------------------


def _interp(stack: np.ndarray, pts: np.ndarray, L: float) -> np.ndarray:
    """Evaluate several 1-d coefficient arrays (rows of ``stack``) at ``pts``."""
    N = stack.shape[-1]
    half = N // 2
    k = np.arange(1, half)
    out = np.empty((stack.shape[0], pts.size))
    for s in range(0, pts.size, PATH_CHUNK):
        ph = np.exp(2j * np.pi / L * np.outer(pts[s:s + PATH_CHUNK], k))
        out[:, s:s + PATH_CHUNK] = stack[:, :1].real + 2.0 * (ph @ stack[:, 1:half].T).real.T
    return out


@dataclass(frozen=True, eq=False)
class VirtualSolutionSample:
    times: np.ndarray
    Y: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    Yhat: np.ndarray = field(repr=False)
    Zhat: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    w_x: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    u_x: np.ndarray = field(repr=False)
    phi_T: np.ndarray = field(repr=False)
    dB: np.ndarray = field(repr=False)
    wrapped_paths: int = 0

    @property
    def n_paths(self) -> int:
        return self.Y.shape[0]

    def summary_rows(self, z: float = 1.96) -> list[dict]:
        n = self.n_paths
        rows = []
        for k, t in enumerate(self.times):
            my, mz = self.Y[:, k].mean(), self.Z[:, k].mean()
            sy = self.Y[:, k].std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
            sz = self.Z[:, k].std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
            rows.append({"t": float(t), "mean_Y": float(my), "ci_Y": float(z * sy),
                         "mean_Z": float(mz), "ci_Z": float(z * sz),
                         "second_moment_Y": float(np.mean(self.Y[:, k] ** 2)),
                         "second_moment_Z": float(np.mean(self.Z[:, k] ** 2))})
        return rows


def _time_indices(grid_times: np.ndarray, path_times: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(grid_times, path_times - 1e-12 * max(1.0, grid_times[-1]))
    idx = np.clip(idx, 0, grid_times.size - 1)
    if not np.allclose(grid_times[idx], path_times, rtol=0, atol=1e-9 * max(1.0, grid_times[-1])):
        raise ValueError("path times must be nodes of the solver time grid")
    return idx


def virtual_solution(problem: BackwardProblem, paths: PathEnsemble) -> VirtualSolutionSample:
    """Evaluate (Y, Z) and the auxiliary quantities along every path."""
    if not math.isclose(paths.T, problem.T, rel_tol=1e-12):
        raise ValueError("paths and problem have different horizons")
    grid = problem.grid
    L = grid.L
    idx = _time_indices(problem.u.times, paths.times)
    (dx,) = derivative_symbols(grid)
    K = paths.times.size
    shape = (paths.n_paths, K)
    out = {k: np.empty(shape) for k in ("Yhat", "Zhat", "w", "w_x", "u", "u_x")}
    for j, (n, r) in enumerate(zip(idx, paths.times)):
        ph = problem.phi.coeffs * heat_multiplier(grid, problem.T - r)
        wc = problem.w.coeffs[n]
        uc = problem.u.coeffs[n]
        stack = np.stack([ph, dx * ph, wc, dx * wc, uc, dx * uc])
        vals = _interp(stack, np.mod(paths.positions[:, j], L), L)
        for key, row in zip(("Yhat", "Zhat", "w", "w_x", "u", "u_x"), vals):
            out[key][:, j] = row
    span = paths.positions - paths.x
    wrapped = int(np.count_nonzero(np.any(np.abs(span) >= L / 2, axis=1)))
    if wrapped:
        _warnings.warn(f"{wrapped} of {paths.n_paths} paths travelled half a period or more; "
                       "enlarge L if the torus approximation matters", RuntimeWarning, stacklevel=2)
    phi_T = _interp(problem.phi.coeffs[None], np.mod(paths.positions[:, -1], L), L)[0]
    return VirtualSolutionSample(paths.times.copy(), out["Yhat"] - out["w"], out["Zhat"] - out["w_x"],
                                 out["Yhat"], out["Zhat"], out["w"], out["w_x"], out["u"], out["u_x"],
                                 phi_T, paths.increments, wrapped)


# --- diagnostics ----------------------------------------------------------------


def _mean_test(x: np.ndarray, k: float, atol: float) -> tuple[float, float, bool]:
    n = x.shape[0]
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return m, se, abs(m) <= k * se + atol


@dataclass(frozen=True)
class MartingaleReport:
    times: np.ndarray
    mean_increment: np.ndarray
    se_increment: np.ndarray
    increment_pass: np.ndarray
    residual_mean: np.ndarray
    residual_se: np.ndarray
    residual_pass: np.ndarray
    k: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.increment_pass))

    @property
    def residual_passed(self) -> bool:
        return bool(np.all(self.residual_pass))

    @property
    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.se_increment > 0, self.mean_increment / self.se_increment, 0.0)

    def rows(self) -> list[dict]:
        return [{"t": float(t), "mean_increment": float(m), "se_increment": float(s),
                 "z": float(z), "increment_pass": bool(p), "residual_mean": float(rm),
                 "residual_se": float(rs), "residual_pass": bool(rp)}
                for t, m, s, z, p, rm, rs, rp in zip(self.times, self.mean_increment, self.se_increment,
                                                     self.z_scores, self.increment_pass, self.residual_mean,
                                                     self.residual_se, self.residual_pass)]


def martingale_test(sample: VirtualSolutionSample, k: float = 4.0, atol: float = 1e-12) -> MartingaleReport:
    """Ensemble tests of the martingale property of Yhat and of the virtual BSDE residual.

    Increments: mean of Yhat_{r+dr} - Yhat_r within k standard errors of 0.
    Residual at r: Y_r - Phi(B_T) + w(r, B_r) + sum_{s >= r} (Z_s + w_x(s, B_s)) dB_s,
    with the Ito sum taken at left points.
    """
    if sample.n_paths < 1:
        raise ValueError("empty sample")
    inc = np.diff(sample.Yhat, axis=1)
    scale = max(1.0, float(np.max(np.abs(sample.Yhat))))
    stats = [_mean_test(inc[:, j], k, atol * scale) for j in range(inc.shape[1])]
    ito = (sample.Z[:, :-1] + sample.w_x[:, :-1]) * sample.dB
    tail = np.concatenate([np.cumsum(ito[:, ::-1], axis=1)[:, ::-1], np.zeros((sample.n_paths, 1))], axis=1)
    resid = sample.Y - sample.phi_T[:, None] + sample.w + tail
    rstats = [_mean_test(resid[:, j], k, atol * scale) for j in range(resid.shape[1])]
    return MartingaleReport(sample.times[:-1].copy(), np.array([s[0] for s in stats]),
                            np.array([s[1] for s in stats]), np.array([s[2] for s in stats]),
                            np.array([s[0] for s in rstats]), np.array([s[1] for s in rstats]),
                            np.array([s[2] for s in rstats]), k)


@dataclass(frozen=True)
class FeynmanKacReport:
    Y_start: float
    u_start: float
    spread: float
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def feynman_kac_check(problem: BackwardProblem, sample: VirtualSolutionSample, tol: float = 1e-8
                      ) -> FeynmanKacReport:
    """Y at the start point is deterministic and equals the PDE solution there."""
    y0 = sample.Y[:, 0]
    u0 = float(sample.u[0, 0])
    return FeynmanKacReport(float(np.mean(y0)), u0, float(np.ptp(y0)),
                            float(np.max(np.abs(y0 - u0))), tol)
