"""Periodic 2D spectral grid, fields, and Fourier-multiplier operators.

Transform normalization: coefficients are box averages of the field against
e^{-ik.x}, so a constant field c has zero-mode coefficient c and Parseval
reads mean(|f|^2) = sum_k |fhat_k|^2.  All reported L2 norms in this package
are box-averaged for the same reason (they are then independent of the box
size at fixed physical spectrum).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched field/grid dimensions."""


class FractionalPowerError(ValueError):
    """Ill-posed fractional Laplacian request (bad exponent or nonzero mean)."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L)^2 with n points per axis.

    The wavenumber lattice is k = (2*pi/L) * (integer lattice, centered via
    the FFT convention).  First-derivative multipliers zero the unmatched
    Nyquist mode so every exposed operator maps real fields to real fields
    and commutes with negation of the lattice.
    """

    n: int
    length: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not _is_power_of_two(self.n) or self.n < 16:
            raise GridError(f"n must be a power of two >= 16, got {self.n}")
        if not self.length > 0:
            raise GridError(f"box length must be positive, got {self.length}")

    @property
    def k_min(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def k_max(self) -> float:
        return np.pi * self.n / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * (self.length / self.n)

    @cached_property
    def _k1(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.length / self.n)

    @cached_property
    def kx(self) -> np.ndarray:
        return np.broadcast_to(self._k1[:, None], (self.n, self.n))

    @cached_property
    def ky(self) -> np.ndarray:
        return np.broadcast_to(self._k1[None, :], (self.n, self.n))

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def _ikx(self) -> np.ndarray:
        # Nyquist column is zeroed: the -n/2 mode has no +n/2 partner, so an
        # odd multiplier there would break conjugate symmetry.
        k = self._k1.copy()
        k[self.n // 2] = 0.0
        return 1j * np.broadcast_to(k[:, None], (self.n, self.n))

    @cached_property
    def _iky(self) -> np.ndarray:
        k = self._k1.copy()
        k[self.n // 2] = 0.0
        return 1j * np.broadcast_to(k[None, :], (self.n, self.n))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = (2.0 / 3.0) * self.k_max
        return (np.abs(self.kx) <= cut) & (np.abs(self.ky) <= cut)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    def forward(self, values: np.ndarray) -> np.ndarray:
        """DFT of real samples, box-average normalized."""
        if values.shape != (self.n, self.n):
            raise GridError(f"field shape {values.shape} does not match grid n={self.n}")
        return np.fft.fft2(values, norm="forward")

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        if coefficients.shape != (self.n, self.n):
            raise GridError(
                f"coefficient shape {coefficients.shape} does not match grid n={self.n}"
            )
        return np.fft.ifft2(coefficients, norm="forward").real


@dataclass
class SpectralField:
    """One real scalar field with lazily synchronized Fourier coefficients.

    Either representation may be supplied; the other is computed on demand and
    cached.  Instances are treated as immutable values by every operator in
    this package (operators allocate new fields).
    """

    grid: Grid
    _values: np.ndarray | None = field(default=None, repr=False)
    _coefficients: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self._values is None and self._coefficients is None:
            raise GridError("SpectralField needs values or coefficients")
        if self._values is not None and self._values.shape != (self.grid.n, self.grid.n):
            raise GridError(
                f"field shape {self._values.shape} does not match grid n={self.grid.n}"
            )
        if self._coefficients is not None and self._coefficients.shape != (
            self.grid.n,
            self.grid.n,
        ):
            raise GridError(
                f"coefficient shape {self._coefficients.shape} does not match grid "
                f"n={self.grid.n}"
            )

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        return cls(grid, _values=np.asarray(values, dtype=np.float64))

    @classmethod
    def from_coefficients(cls, grid: Grid, coefficients: np.ndarray) -> "SpectralField":
        return cls(grid, _coefficients=np.asarray(coefficients, dtype=np.complex128))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, _values=np.zeros((grid.n, grid.n)))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "SpectralField":
        return cls(grid, _values=np.full((grid.n, grid.n), float(c)))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.grid.inverse(self._coefficients)
        return self._values

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            self._coefficients = self.grid.forward(self._values)
        return self._coefficients

    @property
    def zero_mode(self) -> float:
        if self._coefficients is not None:
            return float(self._coefficients[0, 0].real)
        return float(self._values.mean())

    def l2(self) -> float:
        """Box-averaged L2 norm, sqrt(mean |f|^2)."""
        if self._values is not None:
            return float(np.sqrt(np.mean(self._values**2)))
        return float(np.sqrt(np.sum(np.abs(self._coefficients) ** 2)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField.from_values(self.grid, self.values + other.values)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField.from_values(self.grid, self.values - other.values)

    def __mul__(self, other):
        """Pointwise product with a field, or scaling by a number."""
        if isinstance(other, SpectralField):
            return SpectralField.from_values(self.grid, self.values * other.values)
        return SpectralField.from_values(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField.from_values(self.grid, -self.values)


def transform(f: SpectralField) -> SpectralField:
    """Return a field whose coefficient cache is populated from its values."""
    return SpectralField(f.grid, _values=f.values, _coefficients=f.grid.forward(f.values))


def inverse_transform(f: SpectralField) -> SpectralField:
    """Return a field whose sample cache is populated from its coefficients."""
    return SpectralField(
        f.grid, _values=f.grid.inverse(f.coefficients), _coefficients=f.coefficients
    )


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    g = f.grid
    c = f.coefficients
    return (
        SpectralField.from_coefficients(g, g._ikx * c),
        SpectralField.from_coefficients(g, g._iky * c),
    )


def divergence(v1: SpectralField, v2: SpectralField) -> SpectralField:
    g = v1.grid
    if v2.grid is not g and v2.grid != g:
        raise GridError("vector components live on different grids")
    return SpectralField.from_coefficients(
        g, g._ikx * v1.coefficients + g._iky * v2.coefficients
    )


def laplacian(f: SpectralField) -> SpectralField:
    g = f.grid
    return SpectralField.from_coefficients(g, -g.k2 * f.coefficients)


def fractional_lambda(f: SpectralField, gamma: float) -> SpectralField:
    """Apply |k|^gamma mode-wise (the operator (-Laplacian)^(gamma/2)).

    gamma = 0 is the identity.  For gamma < 0 the mean must vanish: a nonzero
    zero mode has no |k| and the negative power is ill-posed on it.  For
    gamma != 0 the zero mode of the output is zero.
    """
    if not (-1.0 < gamma <= 1.0):
        raise FractionalPowerError(f"gamma must lie in (-1, 1], got {gamma}")
    if gamma == 0.0:
        return f
    g = f.grid
    c = f.coefficients
    if gamma < 0.0:
        scale = max(1.0, float(np.max(np.abs(c))))
        if abs(c[0, 0]) > 1e-12 * scale:
            raise FractionalPowerError(
                "fractional power with gamma < 0 requires a mean-free field"
            )
    with np.errstate(divide="ignore"):
        mult = np.where(g.k_abs > 0.0, g.k_abs, 1.0) ** gamma
    mult[0, 0] = 0.0
    return SpectralField.from_coefficients(g, mult * c)


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with max(|k1|, |k2|) above two thirds of Nyquist."""
    g = f.grid
    return SpectralField.from_coefficients(g, np.where(g.dealias_mask, f.coefficients, 0.0))
