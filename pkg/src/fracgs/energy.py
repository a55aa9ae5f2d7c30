"""The constrained energy functional, its L2 gradient and related diagnostics.

J(u) = 1/2 sum_i int |Lambda^alpha u_i|^2 dx - int F(x, u) dx

The Euler-Lagrange equation used throughout is

    (-Delta)^alpha u_i + lambda_i u_i - d_i F(x, u) = 0,

which is the critical-point equation of J on the product of L2 spheres.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .nonlinearity import NonlinearitySpec
from .spectral import Field, Grid, State, lebesgue_norm, multiply_symbol, resample_dilated, sobolev_seminorm_sq

TAIL_TOL = 1e-10


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.kinetic - self.potential)


@dataclass
class Analysis:
    """Everything one solver step needs, computed from a single pass."""

    energy: EnergyBreakdown
    lap: np.ndarray
    dF: np.ndarray
    multipliers: np.ndarray
    residual: float


class Functional:
    """J (or J-infinity) bound to a grid, an exponent and a nonlinearity."""

    def __init__(self, spec: NonlinearitySpec, grid: Grid, alpha: float):
        self.spec = spec
        self.grid = grid
        self.alpha = float(alpha)
        self.symbol = grid.symbol(alpha)
        self._axes = tuple(range(1, grid.dim + 1))

    def _hat(self, values):
        return np.fft.fftn(values, axes=self._axes)

    def kinetic(self, values: np.ndarray, vhat=None) -> float:
        vhat = self._hat(values) if vhat is None else vhat
        w = self.grid.cell_volume / self.grid.size
        return float(0.5 * w * np.sum(self.symbol * np.abs(vhat) ** 2))

    def potential(self, values: np.ndarray) -> float:
        if not self.spec.terms:
            return 0.0
        return float(self.grid.cell_volume * np.sum(self.spec.on_grid(self.grid, values)))

    def energy(self, values: np.ndarray) -> EnergyBreakdown:
        return EnergyBreakdown(self.kinetic(values), self.potential(values))

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return multiply_symbol(values, self.symbol)

    def analyze(self, values: np.ndarray, masses: Sequence[float]) -> Analysis:
        h = self.grid.cell_volume
        vhat = self._hat(values)
        lap = np.fft.ifftn(self.symbol * vhat, axes=self._axes).real
        dF = self.spec.gradient_on_grid(self.grid, values)
        sumax = self._axes
        lam = (h * np.sum(dF * values, axis=sumax) - h * np.sum(lap * values, axis=sumax)) / np.asarray(masses)
        resid = lap + _bcast(lam, values) * values - dF
        energy = EnergyBreakdown(self.kinetic(values, vhat), self.potential(values))
        return Analysis(energy, lap, dF, lam, float(np.sqrt(h * np.sum(resid**2))))


def _bcast(vec, values):
    return np.asarray(vec).reshape((-1,) + (1,) * (values.ndim - 1))


def energy(state: State, spec: NonlinearitySpec) -> EnergyBreakdown:
    return Functional(spec, state.grid, state.alpha).energy(state.values)


def l2_gradient(state: State, spec: NonlinearitySpec) -> list[Field]:
    """Component i is ``(-Delta)^alpha u_i - d_i F(x, u)`` on the grid."""
    fn = Functional(spec, state.grid, state.alpha)
    g = fn.laplacian(state.values) - spec.gradient_on_grid(state.grid, state.values)
    return [Field(state.grid, gi) for gi in g]


def lagrange_multipliers(state: State, spec: NonlinearitySpec) -> np.ndarray:
    """lambda_i = (<d_i F, u_i> - <(-Delta)^alpha u_i, u_i>) / c_i."""
    return Functional(spec, state.grid, state.alpha).analyze(state.values, state.target_masses).multipliers


def el_residual(state: State, spec: NonlinearitySpec) -> float:
    """L2 norm of the Euler-Lagrange defect with the extracted multipliers."""
    return Functional(spec, state.grid, state.alpha).analyze(state.values, state.target_masses).residual


def gn_quotient(f: Field, alpha: float, l: float) -> float:
    """Gagliardo-Nirenberg ratio ||f||_{l+2}^{l+2} / (||f||_2^a ||f||_{H^alpha}^b).

    a = (2 alpha (l+2) - N l) / (2 alpha), b = N l / (2 alpha); the ratio is
    invariant under mass-preserving dilations and under scaling of f.
    """
    N = f.grid.dim
    if not 0 < l < 4 * alpha / N:
        raise ValueError(f"l must lie in (0, 4*alpha/N) = (0, {4 * alpha / N:g}), got {l}")
    semi = sobolev_seminorm_sq(f, alpha)
    l2 = lebesgue_norm(f, 2)
    if semi <= 0 or l2 <= 0:
        raise ValueError("quotient undefined for constant or zero fields")
    a = (2 * alpha * (l + 2) - N * l) / (2 * alpha)
    b = N * l / (2 * alpha)
    return lebesgue_norm(f, l + 2) ** (l + 2) / (l2**a * np.sqrt(semi) ** b)


def dilate(profile: Field, lam: float) -> np.ndarray:
    """Mass-preserving dilation ``lam**(N/2) profile(lam x)`` for lam in (0, 1].

    Raises ``ValueError`` when the profile carries more than ``TAIL_TOL`` of
    its mass outside the central cube of half-width ``lam * box / 2``, since
    that mass would be pushed out of the box.
    """
    grid = profile.grid
    inside = np.ones(grid.shape, dtype=bool)
    for c in grid.coords:
        inside &= np.abs(c) < lam * grid.box / 2
    v = profile.values
    total = np.sum(v * v)
    tail = np.sum(v[~inside] ** 2) / total if total > 0 else 0.0
    if tail > TAIL_TOL:
        raise ValueError(
            f"dilation by lambda={lam:g} pushes {tail:.2e} of the mass out of the box; "
            f"use a box larger than {grid.box:g}"
        )
    return lam ** (grid.dim / 2) * resample_dilated(v, grid, lam)


@dataclass
class DilationResult:
    lambdas: list[float]
    energies: list[float]
    lambda_star: float | None
    certificate: State | None = None

    def rows(self):
        return list(zip(self.lambdas, self.energies))


def default_lambdas(refine: int = 1, depth: int = 10) -> list[float]:
    """Powers of two from 1/2 down to 2**-depth, ``refine`` points per octave."""
    return [2.0 ** (-k / refine) for k in range(refine, depth * refine + 1)]


def dilation_test(
    masses: Sequence[float],
    spec: NonlinearitySpec,
    grid: Grid,
    alpha: float,
    profile: Field,
    lambdas: Sequence[float] | None = None,
) -> DilationResult:
    """Energy of the dilated trial states Phi_lambda, scanning lambda in order.

    Component i of Phi_lambda is ``sqrt(c_i) lam**(N/2) profile(lam x)``,
    re-projected to mass c_i. The first lambda with negative energy is
    reported as a certificate that the infimum is negative.
    """
    if profile.grid != grid:
        raise ValueError("profile must live on the given grid")
    pm = grid.cell_volume * np.sum(profile.values**2)
    if abs(pm - 1.0) > 1e-8:
        raise ValueError(f"profile must have unit mass, got {pm:.12g}")
    masses = np.asarray(masses, float)
    if spec.m != len(masses):
        raise ValueError("one mass per nonlinearity component required")
    lambdas = default_lambdas() if lambdas is None else list(lambdas)
    fn = Functional(spec, grid, alpha)
    energies, star, cert = [], None, None
    for lam in lambdas:
        phi = dilate(profile, lam)
        phi = phi / np.sqrt(grid.cell_volume * np.sum(phi * phi))
        values = np.sqrt(masses).reshape((-1,) + (1,) * grid.dim) * phi[None]
        e = fn.energy(values).total
        energies.append(e)
        if star is None and e < 0:
            star = lam
            cert = State(grid, values, tuple(masses), alpha)
    return DilationResult(list(lambdas), energies, star, cert)


def gaussian_profile(grid: Grid, width: float = 1.0, center=None) -> Field:
    """Unit-mass Gaussian exp(-|x - center|^2 / (2 width^2)), minimum-image distance."""
    center = np.zeros(grid.dim) if center is None else np.asarray(center, float)
    L = grid.box
    r2 = sum(((c - x0 + L / 2) % L - L / 2) ** 2 for c, x0 in zip(grid.coords, center))
    v = np.exp(-r2 / (2 * width**2))
    return Field(grid, v / np.sqrt(grid.cell_volume * np.sum(v * v)))
