"""Dealiased products of band-limited fields and the Bony paraproduct split."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .spectral import (
    SpectralField,
    besov_norm,
    dyadic_multipliers,
    pad_coeffs,
    padded_size,
    to_coeffs,
    to_values,
    truncate_coeffs,
)
from .validation import check_same_grid


class ProductConditionError(ValueError):
    """Raised when gamma + delta <= 0, where the Young-type product is undefined."""


@dataclass(frozen=True)
class ProductCertificate:
    norm_fg_delta: float
    norm_f_gamma: float
    norm_g_delta: float
    gamma: float = math.nan
    delta: float = math.nan

    @property
    def degenerate(self) -> bool:
        return self.norm_f_gamma == 0.0 or self.norm_g_delta == 0.0

    @property
    def fitted_constant(self) -> float:
        if self.degenerate:
            return math.nan
        return self.norm_fg_delta / (self.norm_f_gamma * self.norm_g_delta)

    def to_row(self) -> dict:
        row = asdict(self)
        row["fitted_constant"] = self.fitted_constant
        row["degenerate"] = self.degenerate
        return row


def physical_product(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    """Exact band product of coefficient arrays via 3/2 zero padding.

    Leading batch axes broadcast. Returns coefficients on the input band.
    """
    N = a.shape[-1]
    M = padded_size(N)
    va = to_values(pad_coeffs(a, d, M), d)
    vb = to_values(pad_coeffs(b, d, M), d)
    return truncate_coeffs(to_coeffs(va * vb, d), d, N)


def check_product_condition(gamma: float, delta: float, override: bool = False) -> None:
    if override:
        return
    if not gamma + delta > 0:
        raise ProductConditionError(
            f"product needs gamma + delta > 0 (got {gamma} + {delta} = {gamma + delta})"
        )
    if not delta < 0:
        raise ProductConditionError(f"product estimate is stated for delta < 0, got {delta}")


def product(f: SpectralField, g: SpectralField, gamma: float, delta: float,
            override: bool = False) -> tuple[SpectralField, ProductCertificate]:
    """Product of ``f`` (regularity gamma) and ``g`` (regularity delta < 0).

    The product itself is exact on the band; the certificate records
    |fg|_delta, |f|_gamma and |g|_delta so the constant in the product
    estimate can be fitted rather than assumed.
    """
    check_same_grid(f, g)
    check_product_condition(gamma, delta, override)
    fg = SpectralField(f.grid, physical_product(f.coeffs, g.coeffs, f.grid.d))
    cert = ProductCertificate(
        norm_fg_delta=besov_norm(fg, delta),
        norm_f_gamma=besov_norm(f, gamma),
        norm_g_delta=besov_norm(g, delta),
        gamma=gamma,
        delta=delta,
    )
    return fg, cert


def bony_decompose(f: SpectralField, g: SpectralField
                   ) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Split f*g into low-high, high-low and resonant parts.

    With S_{j-1} = sum_{i <= j-2} Delta_i:
        pi_low  = sum_j S_{j-1} f * Delta_j g
        pi_high = sum_j Delta_j f * S_{j-1} g
        pi_res  = sum_{|i-j| <= 1} Delta_i f * Delta_j g
    """
    check_same_grid(f, g)
    d, N = f.grid.d, f.grid.N
    M = padded_size(N)
    mult = dyadic_multipliers(d, N)
    fb = to_values(pad_coeffs(f.coeffs * mult, d, M), d)
    gb = to_values(pad_coeffs(g.coeffs * mult, d, M), d)
    # S_{j-1} = sum over i <= j-2, i.e. cumulative sum shifted by two
    fs = np.cumsum(fb, axis=0)
    gs = np.cumsum(gb, axis=0)
    low = np.zeros(fb.shape[1:])
    high = np.zeros(fb.shape[1:])
    res = np.zeros(fb.shape[1:])
    J = len(mult)
    for j in range(J):
        if j >= 2:
            low += fs[j - 2] * gb[j]
            high += fb[j] * gs[j - 2]
        for i in range(max(0, j - 1), min(J, j + 2)):
            res += fb[i] * gb[j]

    def back(v):
        return SpectralField(f.grid, truncate_coeffs(to_coeffs(v, d), d, N))

    return back(low), back(high), back(res)


def fitted_product_constant(pairs, gamma: float, delta: float) -> float:
    """Largest fitted constant over (f, g) pairs, ignoring degenerate ones."""
    consts = [product(f, g, gamma, delta)[1].fitted_constant for f, g in pairs]
    consts = [c for c in consts if np.isfinite(c)]
    return max(consts) if consts else math.nan
