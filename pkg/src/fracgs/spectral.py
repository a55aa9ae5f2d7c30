"""Periodic grids, Fourier multipliers and the norms built on them.

All quadratures use the rectangle rule ``h**N * sum(...)``, which is
spectrally accurate for smooth periodic integrands and makes Parseval's
identity exact on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the centred box ``[-box/2, box/2)**dim``."""

    dim: int
    points: int
    box: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if int(self.points) != self.points or self.points % 2 or self.points < 8:
            raise ValueError(f"points must be an even integer >= 8, got {self.points}")
        if not (np.isfinite(self.box) and self.box > 0):
            raise ValueError(f"box must be positive, got {self.box}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "box", float(self.box))

    @property
    def spacing(self) -> float:
        return self.box / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.box**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis; the origin is node ``points // 2``."""
        return -0.5 * self.box + self.spacing * np.arange(self.points)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Sorted lattice ``2*pi*k/box`` for ``k = -n/2 .. n/2 - 1``."""
        k = np.arange(-self.points // 2, self.points // 2)
        return 2.0 * np.pi * k / self.box

    @cached_property
    def _fft_freqs(self) -> np.ndarray:
        # numpy ordering; the Nyquist entry is -n/2, which is the convention we want
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def points_array(self) -> np.ndarray:
        """Node coordinates stacked on the last axis, shape ``shape + (dim,)``."""
        return np.stack(self.coords, axis=-1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords))

    @cached_property
    def abs_xi(self) -> np.ndarray:
        """|xi| on the full FFT lattice, in numpy FFT ordering."""
        ks = np.meshgrid(*([self._fft_freqs] * self.dim), indexing="ij")
        return np.sqrt(sum(k * k for k in ks))

    def symbol(self, alpha: float) -> np.ndarray:
        """Fourier symbol ``|xi|**(2*alpha)`` (zero at the zero mode)."""
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        return self.abs_xi ** (2.0 * alpha)

    def __reduce__(self):
        return (Grid, (self.dim, self.points, self.box))


def make_grid(dim: int, box: float, points: int) -> Grid:
    return Grid(dim=dim, points=points, box=box)


@dataclass(frozen=True, eq=False)
class Field:
    """One real-valued component sampled on a grid (immutable)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"field has {v.size} values, grid has {self.grid.size} nodes")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __add__(self, other: Field) -> Field:
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a: float) -> Field:
        return Field(self.grid, a * self.values)

    __rmul__ = __mul__

    @property
    def mass(self) -> float:
        return mass(self)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def multiply_symbol(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a real even Fourier multiplier over the trailing axes of ``values``."""
    axes = tuple(range(-symbol.ndim, 0))
    return np.fft.ifftn(symbol * np.fft.fftn(values, axes=axes), axes=axes).real


def apply_fractional_laplacian(f: Field, alpha: float) -> Field:
    """Return ``(-Delta)**alpha f`` via the multiplier ``|xi|**(2 alpha)``."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("input field is not finite")
    return Field(f.grid, multiply_symbol(f.values, f.grid.symbol(alpha)))


def sobolev_seminorm_sq(f: Field, alpha: float) -> float:
    """Squared homogeneous seminorm ``int |Lambda**alpha f|**2 dx``."""
    grid = f.grid
    fhat = np.fft.fftn(f.values)
    weight = grid.cell_volume / grid.size
    return float(weight * np.sum(grid.symbol(alpha) * np.abs(fhat) ** 2))


def lebesgue_norm(f, p: float, grid: Grid | None = None) -> float:
    """Rectangle-rule L^p norm. ``f`` may be a Field or an array with ``grid``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if isinstance(f, Field):
        grid = f.grid
    v = np.abs(_values(f))
    return float((grid.cell_volume * np.sum(v**p)) ** (1.0 / p))


def mass(f: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values * f.values))


def inner(f: Field, g: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


@dataclass(frozen=True, eq=False)
class State:
    """``m`` components on a shared grid with their target masses.

    The components are stored stacked in ``values`` with shape
    ``(m,) + grid.shape``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    target_masses: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        masses = tuple(float(c) for c in self.target_masses)
        m = len(masses)
        if m < 1:
            raise ValueError("a state needs at least one component")
        if any(not c > 0 for c in masses):
            raise ValueError(f"target masses must be positive, got {masses}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        v = v.reshape((m,) + self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("state values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "target_masses", masses)
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def from_fields(cls, fields: Sequence[Field], target_masses, alpha) -> State:
        grids = {f.grid for f in fields}
        if len(grids) != 1:
            raise ValueError("all components must share one grid")
        return cls(fields[0].grid, np.stack([f.values for f in fields]), tuple(target_masses), alpha)

    @property
    def m(self) -> int:
        return len(self.target_masses)

    @property
    def components(self) -> list[Field]:
        return [Field(self.grid, v) for v in self.values]

    def masses(self) -> np.ndarray:
        axes = tuple(range(1, self.values.ndim))
        return self.grid.cell_volume * np.sum(self.values**2, axis=axes)

    def with_values(self, values: np.ndarray) -> State:
        return State(self.grid, values, self.target_masses, self.alpha)


def _half_along_axis(values: np.ndarray, axis: int) -> np.ndarray:
    n = values.shape[axis]
    v = np.moveaxis(values, axis, 0)
    fhat = np.fft.fft(v, axis=0)
    padded = np.zeros((2 * n,) + v.shape[1:], dtype=complex)
    padded[: n // 2] = fhat[: n // 2]
    padded[3 * n // 2 + 1 :] = fhat[n // 2 + 1 :]
    # the unpaired Nyquist mode is split evenly between +n/2 and -n/2
    padded[n // 2] = padded[3 * n // 2] = 0.5 * fhat[n // 2]
    refined = 2.0 * np.fft.ifft(padded, axis=0).real
    return np.moveaxis(refined[n // 2 : n // 2 + n], 0, axis)


def resample_half(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Return ``f(x/2)`` on the same grid by exact trigonometric interpolation.

    Each axis is zero-padded to twice the resolution and the central window
    ``[-box/4, box/4)`` of the refined grid is read back.
    """
    out = np.asarray(values, dtype=float)
    for axis in range(out.ndim - grid.dim, out.ndim):
        out = _half_along_axis(out, axis)
    return out


def resample_dilated(values: np.ndarray, grid: Grid, lam: float) -> np.ndarray:
    """Return ``f(lam * x)`` for ``0 < lam <= 1`` by trigonometric interpolation.

    Dyadic factors use repeated exact halving; other factors evaluate the
    interpolant directly, axis by axis.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"dilation factor must lie in (0, 1], got {lam}")
    k = -np.log2(lam)
    if abs(k - round(k)) < 1e-12:
        out = values
        for _ in range(int(round(k))):
            out = resample_half(out, grid)
        return out
    n = grid.points
    freqs = grid._fft_freqs
    x0 = grid.axis[0]
    targets = lam * grid.axis
    out = np.fft.fftn(values) / n**grid.dim
    for axis in range(grid.dim):
        out = np.moveaxis(out, axis, 0)
        result = np.empty_like(out)
        for start in range(0, n, 256):
            stop = min(start + 256, n)
            # treat the Nyquist mode as cos so that real data stays real
            phase = np.exp(1j * np.outer(targets[start:stop] - x0, freqs))
            phase[:, n // 2] = np.cos(freqs[n // 2] * (targets[start:stop] - x0))
            result[start:stop] = np.tensordot(phase, out, axes=(1, 0))
        out = np.moveaxis(result, 0, axis)
    return out.real
