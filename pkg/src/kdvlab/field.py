"""Frequency grids, spectral fields, trajectories and the quadrature substrate.

Conventions: the forward transform omits the 1/sqrt(2 pi) factor, so
v(x) = (1/2pi) int e^{i x xi} v_hat(xi) d xi and Plancherel reads
int |v|^2 dx = (1/2pi) int |v_hat|^2 d xi.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyGrid:
    """Nodes xi_k = -xi_max + k*dxi, k = 0..n-1, dxi = 2*xi_max/n."""

    xi_max: float
    n: int

    def __post_init__(self):
        if not self.xi_max > 0:
            raise ValueError("xi_max must be positive")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @classmethod
    def from_spacing(cls, dxi: float, half_nodes: int) -> "FrequencyGrid":
        """Grid with ``2*half_nodes`` nodes of spacing ``dxi`` (0 is a node)."""
        return cls(xi_max=dxi * half_nodes, n=2 * half_nodes)

    @property
    def dxi(self) -> float:
        return 2.0 * self.xi_max / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        xi = -self.xi_max + self.dxi * np.arange(self.n)
        xi[self.n // 2] = 0.0
        xi.flags.writeable = False
        return xi

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights."""
        w = np.full(self.n, self.dxi)
        w[0] = w[-1] = 0.5 * self.dxi
        w.flags.writeable = False
        return w

    def index_of(self, xi: float, atol: float = 1e-9) -> int:
        k = (xi + self.xi_max) / self.dxi
        kr = int(round(k))
        if abs(k - kr) > atol or not 0 <= kr < self.n:
            raise ValueError(f"{xi} is not a node of {self}")
        return kr

    def mirror_index(self) -> np.ndarray:
        """Index of -xi_k for k >= 1 (node 0 has no partner)."""
        return self.n - np.arange(1, self.n)


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples of v_hat on a grid.  ``real`` flags a real-valued physical field."""

    grid: FrequencyGrid
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if self.real:
            err = hermitian_defect(self.grid, c)
            if err > HERMITIAN_TOL:
                raise ValueError(f"real-flagged field violates Hermitian symmetry ({err:.2e})")

    @classmethod
    def zeros(cls, grid: FrequencyGrid, real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.n, dtype=complex), real)

    @classmethod
    def from_function(cls, grid: FrequencyGrid, func, real: bool = True) -> "SpectralField":
        return cls(grid, func(grid.nodes), real)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes

    def with_coeffs(self, coeffs, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, scalar):
        real = self.real and np.isreal(scalar)
        return SpectralField(self.grid, self.coeffs * scalar, bool(real))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.real)

    def derivative(self) -> "SpectralField":
        """d/dx, i.e. multiplication by i xi."""
        return SpectralField(self.grid, 1j * self.grid.nodes * self.coeffs, self.real)


def hermitian_defect(grid: FrequencyGrid, coeffs) -> float:
    """max |v(-xi) - conj v(xi)| over paired nodes, relative to max |v|."""
    scale = np.max(np.abs(coeffs)) if len(coeffs) else 0.0
    if scale == 0.0:
        return 0.0
    k = np.arange(1, grid.n)
    return float(np.max(np.abs(coeffs[grid.n - k] - np.conj(coeffs[k]))) / scale)


def symmetrize(grid: FrequencyGrid, coeffs) -> np.ndarray:
    """Project onto Hermitian-symmetric coefficients (node 0 made real)."""
    c = np.array(coeffs, dtype=complex)
    k = np.arange(1, grid.n)
    c[k] = 0.5 * (c[k] + np.conj(c[grid.n - k]))
    c[0] = c[0].real
    return c


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped fields on one grid, stored as a (len(times), n) array."""

    grid: FrequencyGrid
    times: np.ndarray
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        c = np.array(self.coeffs, dtype=np.complex128)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("trajectory needs at least one sample")
        if c.shape != (t.size, self.grid.n):
            raise ValueError(f"coeffs shape {c.shape} does not match {(t.size, self.grid.n)}")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        t.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_fields(cls, times, fields) -> "Trajectory":
        fields = list(fields)
        grid = fields[0].grid
        for f in fields:
            if f.grid != grid:
                raise GridMismatch("all trajectory fields must share one grid")
        return cls(grid, times, np.stack([f.coeffs for f in fields]), all(f.real for f in fields))

    def __len__(self):
        return self.times.size

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i], self.real)

    @property
    def samples(self):
        return [(float(t), self.field(i)) for i, t in enumerate(self.times)]

    @property
    def final(self) -> SpectralField:
        return self.field(len(self) - 1)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if other.grid != self.grid or not np.array_equal(other.times, self.times):
            raise GridMismatch("trajectories must share grid and times")
        return Trajectory(self.grid, self.times, self.coeffs - other.coeffs, self.real and other.real)

    def derivative(self) -> "Trajectory":
        return Trajectory(self.grid, self.times, 1j * self.grid.nodes * self.coeffs, self.real)


# ---------------------------------------------------------------------------
# norms


def _weighted_sum(grid, density):
    return float(np.dot(grid.weights, density))


def hs_norm(f: SpectralField, s: float) -> float:
    """(int (1 + xi^2)^s |v_hat|^2 d xi)^(1/2) by the trapezoid rule."""
    xi = f.grid.nodes
    return np.sqrt(_weighted_sum(f.grid, (1.0 + xi * xi) ** s * np.abs(f.coeffs) ** 2))


def l2_norm(f: SpectralField) -> float:
    return hs_norm(f, 0.0)


def hs_norm_window(f: SpectralField, s: float, radius: float) -> float:
    """H^s norm restricted to |xi| <= radius (trapezoid on that interval).

    Nodes exactly at +-radius carry half weight.
    """
    xi = f.grid.nodes
    h = f.grid.dxi
    inside = np.abs(xi) <= radius * (1 + 1e-12)
    w = np.where(inside, h, 0.0)
    edge = inside & np.isclose(np.abs(xi), radius, rtol=0.0, atol=1e-9 * h)
    w[edge] *= 0.5
    dens = (1.0 + xi * xi) ** s * np.abs(f.coeffs) ** 2
    return float(np.sqrt(np.dot(w, dens)))


def tail_fraction(f: SpectralField, s: float, nodes: int = 2) -> float:
    """Share of the H^s mass on the outermost ``nodes`` nodes at each end."""
    xi = f.grid.nodes
    dens = f.grid.weights * (1.0 + xi * xi) ** s * np.abs(f.coeffs) ** 2
    total = dens.sum()
    if total == 0.0:
        return 0.0
    return float((dens[:nodes].sum() + dens[-nodes:].sum()) / total)


# ---------------------------------------------------------------------------
# convolution


def convolve(f: SpectralField, g: SpectralField, method: str = "auto") -> SpectralField:
    """(f * g)(xi_k) by trapezoid quadrature, lags outside the grid dropped."""
    if f.grid != g.grid:
        raise GridMismatch("convolve needs both fields on one grid")
    out = _kernels.conv_trapezoid(f.coeffs, g.coeffs, f.grid.dxi, method)
    real = f.real and g.real
    if real:
        out = symmetrize(f.grid, out)
    return SpectralField(f.grid, out, real)


def young_linf_bound_check(f: SpectralField, g: SpectralField) -> bool:
    """True iff max |f * g| <= ||f||_2 ||g||_2 (1 + 1e-9)."""
    conv = convolve(f, g, method="direct")
    lhs = float(np.max(np.abs(conv.coeffs)))
    return lhs <= l2_norm(f) * l2_norm(g) * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# physical space


def physical_grid(grid: FrequencyGrid, m: int) -> np.ndarray:
    """x_j = (j - m/2) dx with dx = 2 pi / (m dxi)."""
    dx = 2.0 * np.pi / (m * grid.dxi)
    return (np.arange(m) - m // 2) * dx


def to_physical(f: SpectralField, m: int | None = None) -> np.ndarray:
    """Samples of v(x) on ``physical_grid(grid, m)``; spectrum zero-padded to m."""
    n = f.grid.n
    m = n if m is None else int(m)
    if m < n:
        raise ValueError(f"need m >= n ({m} < {n})")
    if m % 2:
        raise ValueError("m must be even")
    padded = np.zeros(m, dtype=complex)
    start = m // 2 - n // 2
    padded[start:start + n] = f.coeffs
    v = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(padded))) * (m * f.grid.dxi / (2.0 * np.pi))
    return v.real.copy() if f.real else v


def from_physical(samples, grid: FrequencyGrid, real: bool | None = None) -> SpectralField:
    """Inverse of ``to_physical``: the m-point spectrum is cropped to ``grid``."""
    v = np.asarray(samples)
    m = v.shape[0]
    n = grid.n
    if m < n:
        raise ValueError(f"need at least n={n} samples")
    spec = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(v))) * (2.0 * np.pi / (m * grid.dxi))
    start = m // 2 - n // 2
    coeffs = spec[start:start + n]
    if real is None:
        real = bool(np.isrealobj(v))
    if real:
        coeffs = symmetrize(grid, coeffs)
    return SpectralField(grid, coeffs, real)
