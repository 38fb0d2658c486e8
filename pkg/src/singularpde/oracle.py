"""Reference solutions for validating the spectral solver.

* :func:`cole_hopf` is exact for F(x) = x^2, b = 1 in one dimension:
  v = e^u solves the heat equation, so u(t) = log(P_t e^{u0}).
* :func:`crank_nicolson` is an independent finite-difference solve for smooth b
  (Crank-Nicolson diffusion, explicit F(grad u) b, central differences).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .nonlinearity import Nonlinearity
from .roughfield import RoughCoefficient
from .spectral import Grid, SpectralField, pad_coeffs, to_values
from .validation import check_field, check_int, check_time_grid

LOG_GUARD = 30.0
UPSAMPLE = 4


class OracleError(ValueError):
    pass


class OracleInstability(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Physical-space samples ``values[n]`` on the solver grid at ``times[n]``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    method: str
    meta: dict = field(default_factory=dict)


def _fine_values(f: SpectralField, M: int) -> np.ndarray:
    return to_values(pad_coeffs(f.coeffs, f.grid.d, M), f.grid.d)


def cole_hopf(u0: SpectralField, t_grid: Sequence[float], upsample: int = UPSAMPLE) -> OracleSolution:
    """u(t) = log(P_t e^{u0}), evaluated on an ``upsample``-times finer grid."""
    check_field(u0, "u0")
    if u0.grid.d != 1:
        raise OracleError("the Cole-Hopf oracle is one-dimensional")
    ts = check_time_grid(t_grid)
    if np.any(ts < 0):
        raise OracleError("times must be nonnegative")
    grid = u0.grid
    M = upsample * grid.N
    fine = _fine_values(u0, M)
    if np.max(np.abs(fine)) > LOG_GUARD:
        raise OracleError(f"|u0| exceeds {LOG_GUARD}; e^u0 would be ill-conditioned on the log path")
    v0 = np.fft.fft(np.exp(fine))
    lam = (2 * np.pi / grid.L * np.fft.fftfreq(M, 1.0 / M)) ** 2
    vt = np.real(np.fft.ifft(v0[None, :] * np.exp(-lam[None, :] * ts[:, None]), axis=-1))
    if np.any(vt <= 0):
        raise OracleError("heat flow of e^u0 lost positivity; amplitude too large")
    ut = np.log(vt)
    identity = float(np.max(np.abs(np.exp(ut) - vt) / np.abs(vt)))
    if identity > 1e-10:
        raise OracleError(f"exp/heat/log identity violated ({identity:.2e})")
    return OracleSolution(grid, ts, ut[:, ::upsample].copy(), "cole_hopf",
                          {"upsample": upsample, "identity_error": identity})


def _periodic_operators(M: int, dx: float):
    e = np.ones(M)
    D2 = sps.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], format="lil")
    D2[0, M - 1] = 1.0
    D2[M - 1, 0] = 1.0
    D1 = sps.diags([-e[:-1], e[:-1]], [-1, 1], format="lil")
    D1[0, M - 1] = -1.0
    D1[M - 1, 0] = 1.0
    return D2.tocsc() / dx**2, D1.tocsr() / (2 * dx)


def crank_nicolson(u0: SpectralField, b: RoughCoefficient, nl: Nonlinearity, t_grid: Sequence[float],
                   fd_points: int | None = None, substeps: int = 4,
                   growth_limit: float = 10.0) -> OracleSolution:
    """Finite-difference reference on ``fd_points`` nodes (a multiple of N, at least 4N).

    ``substeps`` CN steps are taken inside each interval of ``t_grid``; b is
    looked up at each substep midpoint. A step that grows the sup-norm by more
    than ``growth_limit`` (relative to max(1, previous)) raises
    :class:`OracleInstability`.
    """
    check_field(u0, "u0")
    grid = u0.grid
    if grid.d != 1:
        raise OracleError("the finite-difference oracle is one-dimensional")
    if b.grid != grid:
        raise OracleError("b and u0 must share a grid")
    M = UPSAMPLE * grid.N if fd_points is None else check_int(fd_points, "fd_points")
    if M < UPSAMPLE * grid.N or M % grid.N:
        raise OracleError(f"fd_points must be a multiple of N={grid.N} and at least {UPSAMPLE * grid.N}")
    check_int(substeps, "substeps", low=1)
    ts = check_time_grid(t_grid)
    stride = M // grid.N
    D2, D1 = _periodic_operators(M, grid.L / M)
    eye = sps.identity(M, format="csc")
    b_fine = [_fine_values(s, M) for s in b.slices]
    u = _fine_values(u0, M)
    out = [u[::stride].copy()]
    t = ts[0]
    solvers: dict[float, object] = {}
    for t_next in ts[1:]:
        h = (t_next - t) / substeps
        key = round(h, 15)
        if key not in solvers:
            solvers[key] = splu((eye - 0.5 * h * D2).tocsc())
        lu = solvers[key]
        for s in range(substeps):
            ta = t + s * h
            bv = b_fine[b.index_at(ta + 0.5 * h)]
            rhs = u + 0.5 * h * (D2 @ u) + h * nl.eval((D1 @ u)[None]) * bv
            new = lu.solve(rhs)
            if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > growth_limit * max(1.0, np.max(np.abs(u))):
                raise OracleInstability(f"finite-difference step at t={ta:.4g} grew the solution by more "
                                        f"than a factor {growth_limit}")
            u = new
        t = t_next
        out.append(u[::stride].copy())
    return OracleSolution(grid, ts, np.array(out), "crank_nicolson",
                          {"fd_points": M, "substeps": substeps})


@dataclass(frozen=True)
class ErrorReport:
    times: np.ndarray
    sup_err: np.ndarray
    l2_err: np.ndarray
    method: str = ""

    @property
    def max_sup(self) -> float:
        return float(np.max(self.sup_err))

    @property
    def final_sup(self) -> float:
        return float(self.sup_err[-1])

    def rows(self) -> list[dict]:
        return [{"t": float(t), "sup_err": float(s), "l2_err": float(e)}
                for t, s, e in zip(self.times, self.sup_err, self.l2_err)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["t", "sup_err", "l2_err"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: repr(v) for k, v in row.items()})
        return buf.getvalue()


def compare(solution, oracle: OracleSolution) -> ErrorReport:
    """Per-time sup and L^2 errors of a solver run (MildSolution or TimeField) against an oracle.

    The oracle's times must contain the solver's times (nested refinement).
    """
    u = getattr(solution, "u", solution)
    if u.grid.N != oracle.grid.N or u.grid.d != oracle.grid.d or u.grid.L != oracle.grid.L:
        raise OracleError(f"grids differ: solver {u.grid}, oracle {oracle.grid}")
    idx = np.searchsorted(oracle.times, u.times)
    idx = np.clip(idx, 0, oracle.times.size - 1)
    if not np.allclose(oracle.times[idx], u.times, rtol=0, atol=1e-12 * max(1.0, u.times[-1])):
        raise OracleError("oracle time grid does not contain the solver's time grid")
    err = u.values - oracle.values[idx]
    axes = tuple(range(1, err.ndim))
    sup = np.max(np.abs(err), axis=axes)
    l2 = np.sqrt(np.mean(err**2, axis=axes) * u.grid.L**u.grid.d)
    return ErrorReport(u.times.copy(), sup, l2, oracle.method)


def refinement_ratios(errors: Sequence[float]) -> np.ndarray:
    """Successive error ratios e_k / e_{k+1} under step halving."""
    e = np.asarray(errors, dtype=float)
    return e[:-1] / e[1:]


def refinement_slopes(errors: Sequence[float]) -> np.ndarray:
    """Observed orders log2(e_k / e_{k+1})."""
    return np.log2(refinement_ratios(errors))
