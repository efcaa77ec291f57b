"""Uniform 1-D meshes and complex grid functions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh ``x_j = a + j*h`` with ``h = (b - a) / n``.

    A periodic grid carries ``n`` points ``j = 0..n-1`` and must have ``n`` a
    power of two. A non-periodic grid describes the FE mesh of ``(a, b)``: its
    ``n + 1`` nodes include both endpoints and :attr:`interior` drops them.
    """

    a: float
    b: float
    n: int
    periodic: bool = True

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError(f"grid needs b > a, got a={self.a}, b={self.b}")
        if self.n < 8:
            raise DomainError(f"grid needs n >= 8, got n={self.n}")
        if self.periodic and self.n & (self.n - 1):
            raise DomainError(f"periodic grid needs n a power of two, got n={self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def x(self) -> np.ndarray:
        if self.periodic:
            return self.a + self.h * np.arange(self.n)
        return self.a + self.h * np.arange(self.n + 1)

    @property
    def interior(self) -> np.ndarray:
        """Interior FE nodes ``x_1..x_{n-1}`` (non-periodic grids)."""
        return self.a + self.h * np.arange(1, self.n)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching :func:`numpy.fft.fft` ordering."""
        if not self.periodic:
            raise ContractError("wavenumbers are defined on periodic grids only")
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def max_resolved_frequency(self, points_per_wave: int = 8) -> float:
        return 2.0 * np.pi / (points_per_wave * self.h)

    def require_resolved(self, k0: float, points_per_wave: int = 8):
        """Raise :class:`ResolutionError` if ``k0`` has fewer than the given points per wavelength."""
        from .errors import ResolutionError

        if abs(k0) > self.max_resolved_frequency(points_per_wave):
            n_min = int(np.ceil(points_per_wave * abs(k0) * self.length / (2.0 * np.pi)))
            if self.periodic:
                n_min = 1 << (n_min - 1).bit_length()
            raise ResolutionError(
                f"carrier k0={k0:.6g} unresolved on n={self.n}; need n >= {n_min}"
            )


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of a function on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        expected = self.grid.n if self.grid.periodic else self.grid.n + 1
        if v.shape != (expected,):
            raise ContractError(f"field has shape {v.shape}, grid expects ({expected},)")
        if not np.all(np.isfinite(v)):
            raise ContractError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.h * np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values) -> ComplexField:
        return ComplexField(self.grid, values)

    def __add__(self, other: ComplexField) -> ComplexField:
        require_same_grid(self, other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: ComplexField) -> ComplexField:
        require_same_grid(self, other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, c) -> ComplexField:
        return ComplexField(self.grid, self.values * c)

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, grid: Grid1D, f) -> ComplexField:
        return cls(grid, f(grid.x))


def require_periodic(f: ComplexField):
    if not f.grid.periodic:
        raise ContractError("operation requires a periodic grid")


def require_same_grid(u: ComplexField, v: ComplexField):
    if u.grid != v.grid:
        raise ContractError(f"grid mismatch: {u.grid} vs {v.grid}")
