from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singularpde.spectral import (
    Grid,
    SpectralField,
    besov_norm,
    dyadic_decompose,
    evaluate_at,
    gradient,
    heat_propagate,
    laplacian,
    pad_coeffs,
    resample,
    schauder_check,
    truncate_coeffs,
)

finite = st.floats(-10, 10, allow_nan=False)


def trig(grid: Grid, modes: dict[int, float]) -> SpectralField:
    x = grid.coords[0]
    return SpectralField.from_values(grid, sum(a * np.sin(2 * np.pi * k * x / grid.L) for k, a in modes.items()))


def test_heat_propagation_matches_exact_decay():
    g = Grid(1, 64, 2 * np.pi)
    f = trig(g, {1: 1.0, 5: 0.5})
    x = g.coords[0]
    t = 0.3
    exact = np.exp(-t) * np.sin(x) + 0.5 * np.exp(-25 * t) * np.sin(5 * x)
    assert np.max(np.abs(heat_propagate(f, t).values - exact)) < 1e-13


def test_gradient_and_laplacian_of_trig():
    g = Grid(1, 32, 1.0)
    x = g.coords[0]
    f = SpectralField.from_values(g, np.sin(2 * np.pi * 3 * x))
    (fx,) = gradient(f)
    assert np.allclose(fx.values, 6 * np.pi * np.cos(6 * np.pi * x), atol=1e-11)
    assert np.allclose(laplacian(f).values, -(6 * np.pi) ** 2 * f.values, atol=1e-9)


def test_nyquist_mode_is_removed():
    g = Grid(1, 16, 1.0)
    alt = (-1.0) ** np.arange(16)
    f = SpectralField.from_values(g, alt)
    assert np.max(np.abs(f.values)) < 1e-14


@given(st.lists(finite, min_size=16, max_size=16))
def test_values_roundtrip_without_nyquist(vals):
    g = Grid(1, 16, 1.0)
    f = SpectralField.from_values(g, np.array(vals))
    again = SpectralField.from_values(g, f.values)
    assert np.allclose(again.coeffs, f.coeffs, atol=1e-12)
    assert f.is_hermitian()


@given(st.integers(0, 2**31 - 1), st.sampled_from([(1, 32), (1, 64), (2, 16)]))
def test_dyadic_blocks_reconstruct(seed, shape):
    d, N = shape
    g = Grid(d, N, 1.0)
    vals = np.random.default_rng(seed).standard_normal(g.shape)
    f = SpectralField.from_values(g, vals)
    blocks = dyadic_decompose(f).blocks
    total = sum(b.coeffs for b in blocks)
    assert np.max(np.abs(total - f.coeffs)) <= 1e-12 * max(1.0, np.max(np.abs(f.coeffs)))


@pytest.mark.parametrize("k,j", [(1, 0), (3, 2), (14, 4), (30, 5)])
def test_besov_norm_of_a_mode_inside_one_block(k, j):
    # a mode where one multiplier equals 1 sits in block j alone: norm = 2^(gamma j) * amplitude
    g = Grid(1, 256, 2 * np.pi)
    f = trig(g, {k: 0.7})
    for gamma in (-0.5, 0.0, 1.3):
        assert besov_norm(f, gamma) == pytest.approx(0.7 * 2.0 ** (gamma * j), rel=1e-12)


@given(st.floats(-1.0, 2.0), st.floats(0.1, 3.0))
def test_besov_norm_homogeneous(gamma, a):
    g = Grid(1, 64, 1.0)
    f = trig(g, {1: 1.0, 3: 0.2, 9: 0.05})
    assert besov_norm(f * a, gamma) == pytest.approx(a * besov_norm(f, gamma), rel=1e-12)


def test_besov_norm_monotone_in_gamma():
    g = Grid(1, 128, 1.0)
    f = trig(g, {1: 1.0, 7: 0.3, 40: 0.1})
    norms = [besov_norm(f, gm) for gm in (-0.5, 0.0, 0.5, 1.0)]
    assert all(a <= b + 1e-14 for a, b in zip(norms, norms[1:]))


@given(st.integers(0, 10_000))
def test_pad_then_truncate_is_identity(seed):
    g = Grid(1, 32, 1.0)
    f = SpectralField.from_values(g, np.random.default_rng(seed).standard_normal(32))
    big = pad_coeffs(f.coeffs, 1, 48)
    assert np.allclose(truncate_coeffs(big, 1, 32), f.coeffs, atol=1e-15)


def test_resample_preserves_band_limited_field():
    g = Grid(1, 32, 1.0)
    f = trig(g, {2: 1.0, 5: 0.25})
    fine = resample(f, 128)
    assert np.allclose(fine.values, trig(Grid(1, 128, 1.0), {2: 1.0, 5: 0.25}).values, atol=1e-13)


def test_evaluate_at_off_grid_points():
    g = Grid(1, 64, 2 * np.pi)
    f = trig(g, {1: 1.0, 3: 0.2})
    pts = np.array([0.1, 1.234, 5.0, 2 * np.pi - 1e-3])
    exact = np.sin(pts) + 0.2 * np.sin(3 * pts)
    assert np.allclose(evaluate_at(f, pts), exact, atol=1e-12)


def test_schauder_constants_finite_and_positive():
    g = Grid(1, 128, 1.0)
    f = trig(g, {1: 1.0, 20: 0.3})
    rep = schauder_check(f, -0.3, 0.55, np.geomspace(1e-4, 1.0, 9))
    assert np.isfinite(rep.smoothing_constant) and rep.smoothing_constant > 0


def test_grid_rejects_odd_size():
    with pytest.raises(ValueError):
        Grid(1, 15, 1.0)


@given(st.integers(0, 10_000), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_heat_semigroup_law(seed, s, t):
    g = Grid(1, 64, 1.0)
    f = SpectralField.from_values(g, np.random.default_rng(seed).standard_normal(64))
    two = heat_propagate(heat_propagate(f, s), t)
    one = heat_propagate(f, s + t)
    assert np.max(np.abs(two.coeffs - one.coeffs)) <= 1e-12 * max(np.max(np.abs(one.coeffs)), 1e-300)


@given(st.integers(0, 10_000), st.floats(-1.0, 2.5), st.floats(0.0, 1.0))
def test_heat_never_increases_besov_norm(seed, gamma, t):
    g = Grid(1, 128, 1.0)
    f = SpectralField.from_values(g, np.random.default_rng(seed).standard_normal(128))
    assert besov_norm(heat_propagate(f, t), gamma) <= besov_norm(f, gamma) * (1 + 1e-12)
