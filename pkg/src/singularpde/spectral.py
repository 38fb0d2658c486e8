"""Periodic spectral fields, Littlewood-Paley blocks and Besov norm estimates.

Fields live on the torus ``[0, L)^d`` (d = 1 or 2) and are stored as
normalised Fourier coefficients in numpy FFT order, so that

    f(x) = sum_k c_k exp(2 pi i k . x / L).

The Nyquist row/column is always zero, which keeps Hermitian symmetry exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

PARTITION_ID = "exp-bump[1,3/2]/dyadic-v1"


@dataclass(frozen=True)
class Grid:
    d: int
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"period must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def jmax(self) -> int:
        return int(math.log2(self.N // 2))

    @property
    def coords(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.dx
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    @property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer frequency vectors, one array per axis, broadcast to ``shape``."""
        return _wavenumbers(self.d, self.N)

    @property
    def kmag(self) -> np.ndarray:
        """|k| in units of the base mode 2 pi / L."""
        return _kmag(self.d, self.N)

    @property
    def laplacian_symbol(self) -> np.ndarray:
        """|2 pi k / L|^2, the (negated) symbol of the Laplacian."""
        return (2 * np.pi / self.L) ** 2 * self.kmag**2

    def doubled(self) -> "Grid":
        return Grid(self.d, 2 * self.N, self.L)


@lru_cache(maxsize=None)
def _wavenumbers(d: int, N: int) -> tuple[np.ndarray, ...]:
    k = np.fft.fftfreq(N, 1.0 / N)
    ks = np.meshgrid(*([k] * d), indexing="ij")
    for a in ks:
        a.setflags(write=False)
    return tuple(ks)


@lru_cache(maxsize=None)
def _kmag(d: int, N: int) -> np.ndarray:
    ks = _wavenumbers(d, N)
    out = np.sqrt(sum(k**2 for k in ks))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def nyquist_mask(d: int, N: int) -> np.ndarray:
    """Boolean mask of modes kept in the band (every |k_i| < N/2)."""
    ks = _wavenumbers(d, N)
    keep = np.ones((N,) * d, dtype=bool)
    for k in ks:
        keep &= np.abs(k) < N // 2
    keep.setflags(write=False)
    return keep


def to_values(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Physical samples from normalised coefficients (leading batch axes allowed)."""
    axes = tuple(range(-d, 0))
    n_total = np.prod(coeffs.shape[-d:])
    return np.fft.ifftn(coeffs, axes=axes).real * n_total


def to_coeffs(values: np.ndarray, d: int) -> np.ndarray:
    axes = tuple(range(-d, 0))
    n_total = np.prod(values.shape[-d:])
    c = np.fft.fftn(values, axes=axes) / n_total
    return c * nyquist_mask(d, values.shape[-1])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Band-limited real field on a periodic grid.

    Build with :meth:`from_values` or :meth:`from_coefficients`; both enforce
    the real-field symmetry. The raw constructor trusts its input.
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        if c.flags.writeable:
            c = c.copy()
            c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SpectralField":
        values = np.broadcast_to(np.asarray(values, dtype=float), grid.shape)
        return cls(grid, to_coeffs(values, grid.d))

    @classmethod
    def from_coefficients(cls, grid: Grid, coeffs) -> "SpectralField":
        """Project arbitrary coefficients onto the real, Nyquist-free band."""
        c = np.asarray(coeffs, dtype=np.complex128) * nyquist_mask(grid.d, grid.N)
        flipped = np.conj(np.flip(c, axis=grid.axes))
        flipped = np.roll(flipped, 1, axis=grid.axes)
        return cls(grid, 0.5 * (c + flipped))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "SpectralField":
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        coeffs[(0,) * grid.d] = c
        return cls(grid, coeffs)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls.constant(grid, 0.0)

    @property
    def values(self) -> np.ndarray:
        return to_values(self.coeffs, self.grid.d)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_hermitian(self, atol: float = 1e-13) -> bool:
        c = self.coeffs
        flipped = np.roll(np.conj(np.flip(c, axis=self.grid.axes)), 1, axis=self.grid.axes)
        scale = max(1.0, float(np.max(np.abs(c))))
        return bool(np.max(np.abs(c - flipped)) <= atol * scale)

    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")
        return None

    def __add__(self, other):
        if np.isscalar(other):
            return self + SpectralField.constant(self.grid, float(other))
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-float(other))
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * float(a))

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField(grid={self.grid}, sup={self.sup():.4g})"


# --- dyadic partition -----------------------------------------------------


def _h(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(r) -> np.ndarray:
    """Smooth radial profile: 1 on [0, 1], 0 on [3/2, inf)."""
    r = np.asarray(r, dtype=float)
    s = (r - 1.0) / 0.5
    a, b = _h(1.0 - s), _h(s)
    out = np.where(r <= 1.0, 1.0, 0.0)
    mid = (r > 1.0) & (r < 1.5)
    out = np.where(mid, a / np.where(mid, a + b, 1.0), out)
    return out


def phi(j: int, r) -> np.ndarray:
    """The j-th element of the dyadic partition of unity at radius ``r``."""
    r = np.asarray(r, dtype=float)
    if j == 0:
        return bump(r)
    return bump(r / 2.0**j) - bump(r / 2.0 ** (j - 1))


@lru_cache(maxsize=None)
def dyadic_multipliers(d: int, N: int) -> np.ndarray:
    """Stacked Fourier multipliers, shape ``(jmax + 1, N, ..., N)``.

    The last block takes the complement ``1 - bump(2^{1-jmax}|k|)`` so that
    the blocks sum to one on the whole grid. In d = 1 this equals the
    partition element exactly; in d = 2 it also absorbs the grid corners.
    """
    jmax = int(math.log2(N // 2))
    r = _kmag(d, N)
    blocks = [phi(j, r) for j in range(jmax)]
    blocks.append(1.0 - bump(r / 2.0 ** (jmax - 1)))
    out = np.stack(blocks) * nyquist_mask(d, N)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DyadicDecomposition:
    blocks: list[SpectralField]
    partition_id: str = PARTITION_ID

    def reconstruct(self) -> SpectralField:
        grid = self.blocks[0].grid
        return SpectralField(grid, sum(b.coeffs for b in self.blocks))

    def __len__(self):
        return len(self.blocks)


def dyadic_decompose(f: SpectralField) -> DyadicDecomposition:
    mult = dyadic_multipliers(f.grid.d, f.grid.N)
    return DyadicDecomposition([SpectralField(f.grid, m * f.coeffs) for m in mult])


def block_sup_norms(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Grid sup-norm of every dyadic block.

    ``coeffs`` may carry leading batch axes; the result has shape
    ``batch + (jmax + 1,)``.
    """
    N = coeffs.shape[-1]
    mult = dyadic_multipliers(d, N)
    blocks = to_values(np.expand_dims(coeffs, -d - 1) * mult, d)
    return np.max(np.abs(blocks.reshape(blocks.shape[: -d] + (-1,))), axis=-1)


def besov_from_blocks(norms: np.ndarray, gamma: float) -> np.ndarray:
    weights = 2.0 ** (gamma * np.arange(norms.shape[-1]))
    return np.max(norms * weights, axis=-1)


def besov_norm_array(coeffs: np.ndarray, d: int, gamma: float) -> np.ndarray:
    return besov_from_blocks(block_sup_norms(coeffs, d), gamma)


def besov_norm(f: SpectralField, gamma: float) -> float:
    """Estimate of the C^gamma = B^gamma_{inf,inf} norm: sup_j 2^{gamma j} |Delta_j f|_inf."""
    return float(besov_norm_array(f.coeffs, f.grid.d, gamma))


def holder_norm(f: SpectralField, alpha: float) -> float:
    """sup|f| + sup over grid offsets 0 < |h| <= 1 of |f(x+h) - f(x)| / |h|^alpha."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    v = f.values
    grid = f.grid
    half = grid.N // 2
    best = 0.0
    if grid.d == 1:
        for m in range(1, half + 1):
            h = m * grid.dx
            if h > 1.0:
                break
            diff = np.max(np.abs(np.roll(v, -m) - v))
            best = max(best, diff / h**alpha)
    else:
        # half-plane of offsets; h and -h give the same supremum
        for m1 in range(0, half + 1):
            for m2 in range(-half + 1, half + 1):
                if m1 == 0 and m2 <= 0:
                    continue
                h = math.hypot(m1, m2) * grid.dx
                if h > 1.0:
                    continue
                diff = np.max(np.abs(np.roll(v, (-m1, -m2), axis=(0, 1)) - v))
                best = max(best, diff / h**alpha)
    return float(np.max(np.abs(v)) + best)


# --- semigroup and derivatives ---------------------------------------------


def heat_multiplier(grid: Grid, t) -> np.ndarray:
    """exp(-|2 pi k / L|^2 t); ``t`` may be an array (leading axes)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-grid.laplacian_symbol * t[(...,) + (None,) * grid.d])


def heat_propagate(f: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return f
    return SpectralField(f.grid, f.coeffs * heat_multiplier(f.grid, t))


def derivative_symbols(grid: Grid) -> tuple[np.ndarray, ...]:
    scale = 2j * np.pi / grid.L
    mask = nyquist_mask(grid.d, grid.N)
    return tuple(scale * k * mask for k in grid.wavenumbers)


def gradient(f: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(SpectralField(f.grid, s * f.coeffs) for s in derivative_symbols(f.grid))


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.laplacian_symbol * f.coeffs)


@dataclass(frozen=True)
class SchauderReport:
    gamma: float
    theta: float
    t_grid: tuple[float, ...]
    smoothing_ratios: tuple[float, ...] = ()
    increment_ratios: tuple[float, ...] = ()
    degenerate: bool = False

    @property
    def smoothing_constant(self) -> float:
        return max(self.smoothing_ratios) if self.smoothing_ratios else math.nan

    @property
    def increment_constant(self) -> float:
        return max(self.increment_ratios) if self.increment_ratios else math.nan


def schauder_check(g: SpectralField, gamma: float, theta: float,
                   t_grid: Sequence[float]) -> SchauderReport:
    """Measure the two heat-semigroup smoothing ratios over ``t_grid``.

    smoothing:  t^theta |P_t g|_{gamma + 2 theta} / |g|_gamma
    increment:  t^-theta |(P_t - 1) g|_{gamma - 2 theta} / |g|_gamma
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    ts = np.asarray(list(t_grid), dtype=float)
    if ts.size == 0 or np.any(ts <= 0):
        raise ValueError("t_grid must be a nonempty list of positive times")
    base = besov_norm(g, gamma)
    if base == 0.0:
        return SchauderReport(gamma, theta, tuple(ts), degenerate=True)
    mult = heat_multiplier(g.grid, ts)
    smoothed = g.coeffs * mult
    norms = block_sup_norms(smoothed, g.grid.d)
    incr = block_sup_norms(smoothed - g.coeffs, g.grid.d)
    up = besov_from_blocks(norms, gamma + 2 * theta) * ts**theta / base
    down = besov_from_blocks(incr, gamma - 2 * theta) * ts ** (-theta) / base
    return SchauderReport(gamma, theta, tuple(ts), tuple(up.tolist()), tuple(down.tolist()))


# --- resampling and point evaluation ---------------------------------------


def _band_index(N: int, M: int) -> np.ndarray:
    """Positions in an M-grid of the band modes |k| < N/2 of an N-grid."""
    k = np.concatenate([np.arange(0, N // 2), np.arange(-N // 2 + 1, 0)])
    return np.mod(k, M)


def _band_source(N: int) -> np.ndarray:
    k = np.concatenate([np.arange(0, N // 2), np.arange(-N // 2 + 1, 0)])
    return np.mod(k, N)


def pad_coeffs(coeffs: np.ndarray, d: int, M: int) -> np.ndarray:
    """Embed band coefficients of an N-grid into an M-grid (M >= N)."""
    N = coeffs.shape[-1]
    src, dst = _band_source(N), _band_index(N, M)
    out = np.zeros(coeffs.shape[:-d] + (M,) * d, dtype=np.complex128)
    if d == 1:
        out[..., dst] = coeffs[..., src]
    else:
        out[..., dst[:, None], dst[None, :]] = coeffs[..., src[:, None], src[None, :]]
    return out


def truncate_coeffs(coeffs: np.ndarray, d: int, N: int) -> np.ndarray:
    """Restrict M-grid coefficients to the band of an N-grid (M >= N)."""
    M = coeffs.shape[-1]
    src, dst = _band_index(N, M), _band_source(N)
    out = np.zeros(coeffs.shape[:-d] + (N,) * d, dtype=np.complex128)
    if d == 1:
        out[..., dst] = coeffs[..., src]
    else:
        out[..., dst[:, None], dst[None, :]] = coeffs[..., src[:, None], src[None, :]]
    return out


def resample(f: SpectralField, N: int) -> SpectralField:
    """Same field on a grid with ``N`` points per axis (truncating if coarser)."""
    new = Grid(f.grid.d, N, f.grid.L)
    if N >= f.grid.N:
        return SpectralField(new, pad_coeffs(f.coeffs, f.grid.d, N))
    return SpectralField.from_coefficients(new, truncate_coeffs(f.coeffs, f.grid.d, N))


def padded_size(N: int) -> int:
    return 3 * N // 2


def evaluate_at(f: SpectralField, points, chunk: int = 4096) -> np.ndarray:
    """Trigonometric interpolation of ``f`` at arbitrary points (periodic).

    For d = 1 ``points`` is any array of positions; for d = 2 its last axis
    has length 2.
    """
    grid = f.grid
    pts = np.asarray(points, dtype=float)
    omega = 2 * np.pi / grid.L
    if grid.d == 1:
        flat = pts.reshape(-1)
        half = grid.N // 2
        c = f.coeffs[1:half]
        k = np.arange(1, half)
        out = np.empty(flat.shape)
        for s in range(0, flat.size, chunk):
            ph = np.exp(1j * omega * np.outer(flat[s:s + chunk], k))
            out[s:s + chunk] = f.coeffs[0].real + 2.0 * (ph @ c).real
        return out.reshape(pts.shape)
    flat = pts.reshape(-1, 2)
    kx, ky = (k.reshape(-1) for k in grid.wavenumbers)
    c = f.coeffs.reshape(-1)
    keep = c != 0
    kx, ky, c = kx[keep], ky[keep], c[keep]
    out = np.empty(flat.shape[0])
    for s in range(0, flat.shape[0], chunk):
        p = flat[s:s + chunk]
        ph = np.exp(1j * omega * (np.outer(p[:, 0], kx) + np.outer(p[:, 1], ky)))
        out[s:s + chunk] = (ph @ c).real
    return out.reshape(pts.shape[:-1])
