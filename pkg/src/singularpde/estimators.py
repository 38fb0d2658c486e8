"""scikit-learn style wrappers for pipelines over batches of 1-D periodic samples.

Rows of ``X`` are grid values of a field on the torus [0, L) with ``X.shape[1]``
points per row.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bsde import backward_problem, martingale_test, simulate_paths, virtual_solution
from .mildsolver import MildSolution, SolverParams, best_radius, estimate_regime_constant, picard_solve, select_rho_T
from .nonlinearity import Nonlinearity, build
from .roughfield import RoughCoefficient, constant_coefficient
from .spectral import Grid, SpectralField, besov_from_blocks, besov_norm, block_sup_norms, to_coeffs


def _rows(X, N: int | None = None) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if N is not None and X.shape[1] != N:
        raise ValueError(f"expected {N} grid points per row, got {X.shape[1]}")
    return X


def _coefficient(b, grid: Grid, T: float) -> RoughCoefficient:
    if isinstance(b, RoughCoefficient):
        if b.grid != grid:
            raise ValueError(f"b lives on {b.grid}, samples on {grid}")
        return b
    return constant_coefficient(grid, float(b), T)


def _nonlinearity(nl) -> Nonlinearity:
    return nl if isinstance(nl, Nonlinearity) else build(nl)


class LittlewoodPaleyTransform(BaseEstimator, TransformerMixin):
    """Map each row to its dyadic block sup norms, or to one Besov norm when ``gamma`` is set."""

    def __init__(self, gamma: float | None = None):
        self.gamma = gamma

    def fit(self, X, y=None):
        X = _rows(X)
        self.n_points_ = X.shape[1]
        self.n_blocks_ = block_sup_norms(to_coeffs(X[0], 1), 1).shape[-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_points_")
        X = _rows(X, self.n_points_)
        blocks = block_sup_norms(to_coeffs(X, 1), 1)
        if self.gamma is None:
            return blocks
        return besov_from_blocks(blocks, self.gamma)[:, None]


class MildSolver(BaseEstimator, TransformerMixin):
    """Send each initial profile u0 to the mild solution at time T.

    ``rho="auto"`` picks the weight from the contraction analysis of the
    first row, falling back to 1 when no admissible weight exists.
    """

    def __init__(self, alpha: float = 0.7, beta: float = -0.2, T: float = 0.1, n_time_steps: int = 32,
                 L: float = 1.0, b=1.0, nonlinearity="softabs", rho="auto", picard_tol: float = 1e-10,
                 max_picard_iters: int = 200):
        self.alpha = alpha
        self.beta = beta
        self.T = T
        self.n_time_steps = n_time_steps
        self.L = L
        self.b = b
        self.nonlinearity = nonlinearity
        self.rho = rho
        self.picard_tol = picard_tol
        self.max_picard_iters = max_picard_iters

    def _params(self, rho: float) -> SolverParams:
        return SolverParams(self.alpha, self.beta, self.T, self.n_time_steps, rho, self.picard_tol,
                            self.max_picard_iters)

    def fit(self, X, y=None):
        X = _rows(X)
        self.grid_ = Grid(1, X.shape[1], float(self.L))
        self.coefficient_ = _coefficient(self.b, self.grid_, self.T)
        self.nonlinearity_ = _nonlinearity(self.nonlinearity)
        rho = 1.0
        if self.rho == "auto":
            p = self._params(1.0)
            C = estimate_regime_constant(self.coefficient_, self.alpha, self.beta).C
            R0 = max(besov_norm(SpectralField.from_values(self.grid_, X[0]), p.gamma),
                     best_radius(C, self.alpha, self.beta) if C > 0 else 1e-12, 1e-12)
            try:
                rho = select_rho_T(R0, C, self.alpha, self.beta).rho0
            except ValueError:
                rho = 1.0
        else:
            rho = float(self.rho)
        self.params_ = self._params(rho)
        return self

    def solve(self, x) -> MildSolution:
        """Full time-resolved solution for one initial profile."""
        check_is_fitted(self, "params_")
        u0 = SpectralField.from_values(self.grid_, _rows(np.atleast_2d(x), self.grid_.N)[0])
        return picard_solve(u0, self.coefficient_, self.nonlinearity_, self.params_)

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = _rows(X, self.grid_.N)
        return np.stack([self.solve(row).final.values for row in X])


class VirtualBSDE(BaseEstimator):
    """Fit the backward problem for a terminal profile, then sample (Y, Z) along Brownian paths."""

    def __init__(self, alpha: float = 0.7, beta: float = -0.2, T: float = 0.2, n_time_steps: int = 32,
                 L: float = 2 * np.pi, b=1.0, nonlinearity="softabs", n_paths: int = 2000, seed: int = 0,
                 k: float = 4.0):
        self.alpha = alpha
        self.beta = beta
        self.T = T
        self.n_time_steps = n_time_steps
        self.L = L
        self.b = b
        self.nonlinearity = nonlinearity
        self.n_paths = n_paths
        self.seed = seed
        self.k = k

    def fit(self, X, y=None):
        """``X`` holds a single row: the terminal condition on the grid."""
        X = _rows(X)
        if X.shape[0] != 1:
            raise ValueError("VirtualBSDE.fit expects exactly one terminal profile")
        grid = Grid(1, X.shape[1], float(self.L))
        nl = _nonlinearity(self.nonlinearity)
        p = SolverParams(self.alpha, self.beta, self.T, self.n_time_steps)
        self.problem_ = backward_problem(SpectralField.from_values(grid, X[0]),
                                         _coefficient(self.b, grid, self.T), nl, p)
        return self

    def sample(self, x: float, t: float = 0.0):
        check_is_fitted(self, "problem_")
        dt = self.T / self.n_time_steps
        steps = round((self.T - t) / dt)
        paths = simulate_paths(t, float(x), self.T, self.n_paths, steps, self.seed)
        return virtual_solution(self.problem_, paths)

    def predict(self, X):
        """Monte Carlo mean of Y at time 0 for each starting point in ``X[:, 0]``."""
        X = check_array(X, dtype=np.float64)
        return np.array([self.sample(x).Y[:, 0].mean() for x in X[:, 0]])

    def score(self, X, y=None) -> float:
        """Fraction of starting points whose martingale test passes."""
        X = check_array(X, dtype=np.float64)
        return float(np.mean([martingale_test(self.sample(x), self.k).passed for x in X[:, 0]]))
