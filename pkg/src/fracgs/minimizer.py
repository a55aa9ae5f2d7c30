"""Normalized gradient flow for ground states on the mass constraint set.

One step of the flow is

    w = (I + tau ((-Delta)^alpha + lambda+))^-1 (u + tau (dF(x, u) - lambda- u)),
    u <- w scaled componentwise back to the target masses,

solved in Fourier space, where lambda = lambda(u) are the current Lagrange
multipliers split into positive and negative parts. Fixed points are exactly
the solutions of the Euler-Lagrange system. Steps that raise the energy are
retried with a smaller tau.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .energy import EnergyBreakdown, Functional, dilation_test, gaussian_profile
from .nonlinearity import NonlinearitySpec
from .spectral import Grid, State

log = logging.getLogger(__name__)

MIN_STEP = 1e-12
TIE_TOL = 1e-12
ERRORBAR_WINDOW = 100


class SolverError(RuntimeError):
    """Raised when no usable minimization run could be produced."""


@dataclass(frozen=True)
class SolverConfig:
    step: float = 1.0
    tol: float = 1e-8
    max_iter: int = 200_000
    backtrack: float = 0.5
    multistart: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 < self.backtrack < 1:
            raise ValueError(f"backtrack must lie in (0, 1), got {self.backtrack}")
        if self.multistart < 1:
            raise ValueError(f"multistart must be >= 1, got {self.multistart}")


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    energy: EnergyBreakdown
    residual: float
    masses: tuple[float, ...]
    multipliers: tuple[float, ...]
    center: tuple[float, ...]


@dataclass
class MinimizerResult:
    state: State
    energy: EnergyBreakdown
    multipliers: np.ndarray
    residual: float
    history: list[HistoryRow] = field(repr=False)
    status: str

    @property
    def errorbar(self) -> float:
        """Energy drop over the last 100 accepted iterations.

        Short runs use the last half of the run instead, so the initial
        transient never counts as solver error.
        """
        e = [row.energy.total for row in self.history]
        window = min(ERRORBAR_WINDOW, (len(e) - 1) // 2)
        return abs(e[-1] - e[-1 - window])


def project_to_constraint(state: State) -> State:
    """Scale each component to its target mass."""
    return state.with_values(_project(state.values, state.grid, state.target_masses))


def _project(values: np.ndarray, grid: Grid, masses) -> np.ndarray:
    axes = tuple(range(1, values.ndim))
    current = grid.cell_volume * np.sum(values**2, axis=axes)
    if np.any(current <= 0) or not np.all(np.isfinite(current)):
        raise ValueError("cannot project a component with zero mass")
    scale = np.sqrt(np.asarray(masses, float) / current)
    return values * scale.reshape((-1,) + (1,) * (values.ndim - 1))


def center_of_mass(values: np.ndarray, grid: Grid) -> tuple[float, ...]:
    """Periodic (circular-mean) centre of the total density."""
    rho = np.sum(values**2, axis=0)
    out = []
    for c in grid.coords:
        ang = 2 * np.pi * c / grid.box
        z = np.sum(rho * np.exp(1j * ang))
        out.append(float(np.angle(z) * grid.box / (2 * np.pi)) if abs(z) > 0 else 0.0)
    return tuple(out)


def minimize(initial: State, spec: NonlinearitySpec, config: SolverConfig = SolverConfig()) -> MinimizerResult:
    """Minimize J over the mass constraint set starting from ``initial``."""
    if spec.m != initial.m:
        raise ValueError(f"nonlinearity has {spec.m} components, state has {initial.m}")
    spec.validate(initial.alpha, initial.grid.dim)
    grid, masses = initial.grid, initial.target_masses
    fn = Functional(spec, grid, initial.alpha)
    sym = fn.symbol
    axes = tuple(range(1, grid.dim + 1))
    h = grid.cell_volume

    u = _project(initial.values, grid, masses)
    info = fn.analyze(u, masses)
    history: list[HistoryRow] = []

    def record(k, u, info):
        m_now = tuple(float(v) for v in h * np.sum(u**2, axis=axes))
        history.append(
            HistoryRow(k, info.energy, info.residual, m_now, tuple(float(v) for v in info.multipliers),
                       center_of_mass(u, grid))
        )

    record(0, u, info)
    tau = config.step
    streak = 0
    status = "max_iter"
    if info.residual <= config.tol:
        status = "converged"
    else:
        for k in range(1, config.max_iter + 1):
            lam = info.multipliers.reshape((-1,) + (1,) * grid.dim)
            # positive multipliers go into the implicit operator, negative ones stay explicit
            lam_pos, lam_neg = np.maximum(lam, 0.0), np.minimum(lam, 0.0)
            accepted = False
            while tau >= MIN_STEP:
                rhs = u + tau * (info.dF - lam_neg * u)
                denom = 1.0 + tau * (sym[None] + lam_pos)
                w = np.fft.ifftn(np.fft.fftn(rhs, axes=axes) / denom, axes=axes).real
                w = _project(w, grid, masses)
                trial = fn.energy(w)
                scale = abs(trial.kinetic) + abs(trial.potential)
                slack = min(1e-12, 8 * np.finfo(float).eps * scale)
                if trial.total <= info.energy.total + slack:
                    accepted = True
                    break
                tau *= config.backtrack
                streak = 0
            if not accepted:
                status = "stalled"
                break
            u = w
            info = fn.analyze(u, masses)
            record(k, u, info)
            streak += 1
            if streak >= 10:
                tau = min(2 * tau, config.step)
                streak = 0
            if info.residual <= config.tol:
                status = "converged"
                break
    log.debug("minimize: %s after %d iterations, J=%.17g", status, history[-1].iteration, info.energy.total)
    return MinimizerResult(
        state=initial.with_values(u),
        energy=info.energy,
        multipliers=info.multipliers,
        residual=info.residual,
        history=history,
        status=status,
    )


def initial_state(grid: Grid, masses: Sequence[float], alpha: float, width: float | None = None, center=None) -> State:
    """All components equal to one Gaussian (default width box/10), mass-projected."""
    width = grid.box / 10 if width is None else width
    g = gaussian_profile(grid, width, center).values
    values = np.stack([g] * len(masses))
    return State(grid, _project(values, grid, masses), tuple(masses), alpha)


def starting_states(grid: Grid, masses, alpha, config: SolverConfig) -> list[State]:
    """Seeded Gaussian starts; start 0 is centred with width box/10.

    Later starts scale the width by 2**U(-1, 1) and shift the centre by up to
    box/8 per axis. The k-start list is a prefix of the (k+1)-start list.
    """
    rng = np.random.default_rng(config.seed)
    starts = [initial_state(grid, masses, alpha)]
    for _ in range(1, config.multistart):
        width = grid.box / 10 * 2.0 ** rng.uniform(-1, 1)
        center = rng.uniform(-grid.box / 8, grid.box / 8, size=grid.dim)
        starts.append(initial_state(grid, masses, alpha, width, center))
    return starts


def _dilation_start(grid, masses, alpha, spec) -> State | None:
    """Trial state for the negative-energy check: the first dilated Gaussian with negative energy."""
    profile = gaussian_profile(grid, 1.0)
    for lam in (1.0, 0.5, 0.25, 0.125, 0.0625):
        try:
            res = dilation_test(masses, spec, grid, alpha, profile, [lam])
        except ValueError:
            break
        if res.certificate is not None:
            return res.certificate
    return None


def ground_state_energy(
    masses: Sequence[float],
    spec: NonlinearitySpec,
    grid: Grid,
    alpha: float,
    config: SolverConfig = SolverConfig(),
    use_dilation: bool = True,
) -> tuple[float, MinimizerResult]:
    """Estimate the infimum of J on the mass constraint set by multistart.

    Returns the lowest final energy among non-stalled runs and that run.
    Exact ties (within 1e-12) go to the earlier start.
    """
    masses = tuple(float(c) for c in masses)
    starts = starting_states(grid, masses, alpha, config)
    if use_dilation:
        extra = _dilation_start(grid, masses, alpha, spec)
        if extra is not None:
            starts.append(extra)
    best = None
    for idx, start in enumerate(starts):
        res = minimize(start, spec, config)
        log.debug("start %d: %s J=%.17g", idx, res.status, res.energy.total)
        if res.status == "stalled":
            continue
        if best is None or res.energy.total < best.energy.total - TIE_TOL:
            best = res
    if best is None:
        raise SolverError("every start stalled")
    return best.energy.total, best
