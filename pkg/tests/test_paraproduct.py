from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singularpde.paraproduct import (
    ProductConditionError,
    bony_decompose,
    check_product_condition,
    fitted_product_constant,
    physical_product,
    product,
)
from singularpde.roughfield import fractional_gaussian_field
from singularpde.spectral import Grid, SpectralField


def test_product_of_trig_is_exact():
    # sin(x) cos(3x) = (sin 4x - sin 2x) / 2, all modes resolved on N = 32
    g = Grid(1, 32, 2 * np.pi)
    x = g.coords[0]
    f = SpectralField.from_values(g, np.sin(x))
    h = SpectralField.from_values(g, np.cos(3 * x))
    fg = SpectralField(g, physical_product(f.coeffs, h.coeffs, 1))
    assert np.allclose(fg.values, 0.5 * (np.sin(4 * x) - np.sin(2 * x)), atol=1e-14)


def test_product_drops_modes_beyond_the_band():
    # sin(10x)^2 = (1 - cos 20x)/2; mode 20 is outside N = 32, so only the mean survives
    g = Grid(1, 32, 2 * np.pi)
    f = SpectralField.from_values(g, np.sin(10 * g.coords[0]))
    fg = SpectralField(g, physical_product(f.coeffs, f.coeffs, 1))
    assert np.allclose(fg.values, 0.5, atol=1e-14)


@given(st.integers(0, 10_000), st.sampled_from([(1, 64), (2, 16)]))
def test_bony_parts_sum_to_the_product(seed, shape):
    d, N = shape
    g = Grid(d, N, 1.0)
    f = fractional_gaussian_field(0.7, g, seed, 0)
    h = fractional_gaussian_field(-0.3, g, seed, 1)
    low, high, res = bony_decompose(f, h)
    full = physical_product(f.coeffs, h.coeffs, d)
    scale = max(1.0, np.max(np.abs(full)))
    assert np.max(np.abs(low.coeffs + high.coeffs + res.coeffs - full)) <= 1e-12 * scale


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_product_condition_window(gamma, delta):
    if gamma + delta > 0 and delta < 0:
        check_product_condition(gamma, delta)
    else:
        with pytest.raises(ProductConditionError):
            check_product_condition(gamma, delta)
    check_product_condition(gamma, delta, override=True)


def test_certificate_and_fitted_constant():
    g = Grid(1, 128, 1.0)
    pairs = [(fractional_gaussian_field(0.7, g, s, 0), fractional_gaussian_field(-0.3, g, s, 1)) for s in range(4)]
    fg, cert = product(*pairs[0], 0.7, -0.3)
    assert cert.fitted_constant == pytest.approx(cert.norm_fg_delta / (cert.norm_f_gamma * cert.norm_g_delta))
    c = fitted_product_constant(pairs, 0.7, -0.3)
    assert np.isfinite(c) and c >= cert.fitted_constant - 1e-15


def test_zero_factor_gives_degenerate_certificate():
    g = Grid(1, 32, 1.0)
    _, cert = product(SpectralField.zeros(g), fractional_gaussian_field(-0.3, g, 0), 0.7, -0.3)
    assert cert.degenerate and np.isnan(cert.fitted_constant)


@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_product_is_bilinear(seed, a):
    g = Grid(1, 64, 1.0)
    f1 = fractional_gaussian_field(0.7, g, seed, 0)
    f2 = fractional_gaussian_field(0.7, g, seed, 1)
    h = fractional_gaussian_field(-0.3, g, seed, 2)
    lhs = product(f1 * a + f2, h, 0.7, -0.3)[0].coeffs
    rhs = a * product(f1, h, 0.7, -0.3)[0].coeffs + product(f2, h, 0.7, -0.3)[0].coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_certificate_rows_serialise():
    import json

    g = Grid(1, 32, 1.0)
    _, cert = product(fractional_gaussian_field(0.7, g, 0), fractional_gaussian_field(-0.3, g, 1), 0.7, -0.3)
    row = json.loads(json.dumps(cert.to_row()))
    assert row["fitted_constant"] == pytest.approx(cert.fitted_constant) and row["degenerate"] is False
