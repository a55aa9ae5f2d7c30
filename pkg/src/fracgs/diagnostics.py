"""Concentration-compactness diagnostics and sub-additivity scans.

The concentration function of a state is

    Q(r) = sup_y sum_i int_{|x - y| < r} |u_i|^2 dx,

evaluated on the periodic box with the minimum-image distance. Ball masses
for every grid node as centre come from one FFT correlation per radius, so
the supremum over nodes is exhaustive.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .minimizer import MinimizerResult, SolverConfig, ground_state_energy
from .nonlinearity import NonlinearitySpec, asymptotic_spec
from .spectral import Grid, State, make_grid

log = logging.getLogger(__name__)

LABELS = ("compactness", "vanishing", "dichotomy", "undetermined")


@dataclass(frozen=True)
class ConcentrationProfile:
    radii: np.ndarray
    q: np.ndarray
    centers: np.ndarray  # (len(radii), dim)
    total: float

    def at(self, r: float) -> float:
        """Q at one of the sampled radii."""
        idx = np.flatnonzero(np.isclose(self.radii, r, rtol=1e-12, atol=0))
        if idx.size == 0:
            raise KeyError(f"radius {r} was not sampled")
        return float(self.q[idx[0]])


def _ball_kernel(grid: Grid, r: float) -> np.ndarray:
    """Indicator of the ball of radius r about the origin, in FFT ordering.

    Nodes exactly on the sphere get weight 1/2, which makes the 1D ball of
    radius k*h hold exactly 2k cells.
    """
    d = grid.radius
    on = np.abs(d - r) <= 1e-9 * grid.spacing
    k = np.where(d < r, 1.0, 0.0)
    k[on] = 0.5
    return np.fft.ifftshift(k)


def concentration_function(state: State, radii: Sequence[float]) -> ConcentrationProfile:
    """Levy concentration function of the total density at the given radii."""
    grid = state.grid
    radii = np.asarray(radii, float)
    if radii.ndim != 1 or radii.size == 0:
        raise ValueError("radii must be a non-empty list")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    if radii[-1] > grid.box / 2 * (1 + 1e-12):
        raise ValueError(f"radii must not exceed box/2 = {grid.box / 2:g}")
    rho = np.sum(state.values**2, axis=0)
    total = float(grid.cell_volume * np.sum(rho))
    rho_hat = np.fft.fftn(rho)
    q = np.empty(radii.size)
    centers = np.empty((radii.size, grid.dim))
    pts = grid.points_array.reshape(-1, grid.dim)
    for i, r in enumerate(radii):
        ball = np.fft.ifftn(rho_hat * np.fft.fftn(_ball_kernel(grid, r))).real * grid.cell_volume
        best = int(np.argmax(ball))
        q[i] = ball.flat[best]
        centers[i] = pts[best]
    # nested balls: enforce exact monotonicity and the mass ceiling against roundoff
    for i in range(1, radii.size):
        if q[i] < q[i - 1]:
            q[i], centers[i] = q[i - 1], centers[i - 1]
    q = np.minimum(q, total)
    return ConcentrationProfile(radii, q, centers, total)


def default_radii(grid: Grid, r_ref: float | None = None) -> np.ndarray:
    """Doubling radii r_ref * 2**k up to box/2 (r_ref defaults to 4h)."""
    r = 4 * grid.spacing if r_ref is None else float(r_ref)
    out = []
    while r <= grid.box / 2 * (1 + 1e-12):
        out.append(r)
        r *= 2
    return np.asarray(out)


def _check_sequence(states: Sequence[State]) -> None:
    if len(states) < 3:
        raise ValueError(f"classification needs at least 3 states, got {len(states)}")
    g0, m0 = states[0].grid, np.asarray(states[0].target_masses)
    for s in states[1:]:
        if s.grid != g0:
            raise ValueError("states live on different grids")
        if s.m != len(m0) or not np.allclose(s.target_masses, m0, rtol=1e-12, atol=0):
            raise ValueError("states have different target masses")


def classify_sequence(
    states: Sequence[State],
    thresholds: tuple[float, float] | None = None,
    r_ref: float | None = None,
) -> str:
    """Label a sequence of states as compactness, vanishing, dichotomy or undetermined.

    Args:
        states: at least three states sharing grid and target masses.
        thresholds: (eps_v, eps_d) as absolute masses; default 5% and 10%
            of the total mass.
        r_ref: reference radius for the vanishing test; default 4 grid cells.

    The tests run in the order vanishing, compactness, dichotomy; the first
    one that matches wins.
    """
    _check_sequence(states)
    grid = states[0].grid
    total = float(sum(states[0].target_masses))
    eps_v, eps_d = (0.05 * total, 0.1 * total) if thresholds is None else map(float, thresholds)
    radii = default_radii(grid, r_ref)
    profiles = [concentration_function(s, radii) for s in states]
    tail = profiles[-max(2, len(profiles) // 2):]

    # vanishing: mass near the best centre, above the uniform floor, trends to zero
    ball = _ball_volume(grid.dim, radii[0])
    excess = np.array([p.q[0] - p.total * ball / grid.volume for p in profiles])
    slack = 1e-12 * total
    if np.all(np.diff(excess) <= slack) and excess[-1] < excess[0] and excess[-1] < eps_v:
        return "vanishing"

    # compactness: one radius, well inside the box, holds almost everything
    small = radii <= grid.box / 8 * (1 + 1e-12)
    for i in np.flatnonzero(small):
        if all(p.q[i] >= p.total - eps_v for p in tail):
            return "compactness"

    # dichotomy: a plateau Q(r) ~ Q(2r) strictly between eps_d and total - eps_d
    for i in range(radii.size - 1):
        betas = []
        for p in tail:
            a, b = p.q[i], p.q[i + 1]
            if eps_d < a < p.total - eps_d and eps_d < b < p.total - eps_d and b - a < eps_v:
                betas.append(0.5 * (a + b))
            else:
                break
        if len(betas) == len(tail) and max(betas) - min(betas) < eps_v:
            return "dichotomy"
    return "undetermined"


def _ball_volume(dim: int, r: float) -> float:
    return {1: 2 * r, 2: np.pi * r * r, 3: 4 / 3 * np.pi * r**3}[dim]


# ----------------------------------------------------------------------------
# synthetic families with a known label


def _state(grid: Grid, rho_sqrt: np.ndarray, mass: float = 1.0, alpha: float = 1.0) -> State:
    v = rho_sqrt * np.sqrt(mass / (grid.cell_volume * np.sum(rho_sqrt**2)))
    return State(grid, v[None], (mass,), alpha)


def _bump(grid: Grid, center: float, width: float) -> np.ndarray:
    x = grid.axis
    d = (x - center + grid.box / 2) % grid.box - grid.box / 2
    return np.exp(-d * d / (2 * width * width))


def vanishing_family(seed: int = 0, length: int = 6) -> list[State]:
    """Gaussians of width ~2**n (jittered) with random centres, box 256."""
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 256.0, 1024)
    out = []
    for n in range(length):
        width = 2.0**n * 2.0 ** rng.uniform(-0.25, 0.25)
        out.append(_state(grid, _bump(grid, rng.uniform(-128, 128), width)))
    return out


def compactness_family(seed: int = 0, length: int = 6) -> list[State]:
    """A sech soliton translated by n cells (plus a random offset), box 40."""
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 40.0, 512)
    base = 1.0 / np.cosh(grid.axis)
    offset = int(rng.integers(grid.points))
    return [_state(grid, np.roll(base, offset + n)) for n in range(length)]


def dichotomy_family(seed: int = 0) -> list[State]:
    """Two half-mass bumps separated by n*box/8, n = 1, 2, 3, box 40."""
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 40.0, 512)
    out = []
    for n in (1, 2, 3):
        c = rng.uniform(-20, 20)
        w1, w2 = 0.5 * 2.0 ** rng.uniform(-0.2, 0.2, size=2)
        b1 = _bump(grid, c, w1)
        b2 = _bump(grid, c + n * grid.box / 8, w2)
        # normalise each bump separately so the split is exactly half/half
        b1 /= np.sqrt(grid.cell_volume * np.sum(b1 * b1))
        b2 /= np.sqrt(grid.cell_volume * np.sum(b2 * b2))
        out.append(_state(grid, np.sqrt(0.5 * b1**2 + 0.5 * b2**2)))
    return out


# ----------------------------------------------------------------------------
# sub-additivity


@dataclass(frozen=True)
class ScanRow:
    f: float
    a: tuple[float, ...]
    I_a: float
    I_cma: float
    I_c: float
    slack: float
    I_inf_cma: float
    mixed_slack: float
    slack_err: float
    mixed_err: float

    @property
    def slack_ok(self) -> bool:
        """Slack is non-negative up to twice the solver error bar."""
        return self.slack >= -2 * self.slack_err

    @property
    def mixed_ok(self) -> bool:
        return self.mixed_slack >= -2 * self.mixed_err


@dataclass
class SubadditivityTable:
    masses: tuple[float, ...]
    rows: list[ScanRow]
    I_c: float
    I_inf_c: float
    I_c_err: float
    I_inf_c_err: float
    results: dict = field(default_factory=dict, repr=False)

    @property
    def ordering_ok(self) -> bool:
        """I_c <= I_inf_c up to the solver error bars."""
        return self.I_c <= self.I_inf_c + self.I_c_err + self.I_inf_c_err


def _solve(args) -> tuple[float, MinimizerResult]:
    masses, spec, grid, alpha, config = args
    return ground_state_energy(masses, spec, grid, alpha, config)


def subadditivity_scan(
    masses: Sequence[float],
    fractions: Sequence[float],
    spec: NonlinearitySpec,
    grid: Grid,
    alpha: float,
    config: SolverConfig = SolverConfig(),
    workers: int = 1,
) -> SubadditivityTable:
    """Compare I_c with I_a + I_{c-a} and I_a + Iinf_{c-a} for a = f*c.

    Each distinct (mass vector, functional) pair is solved once; the solves
    are independent and run on ``workers`` threads. Error bars are the sums
    of the constituent solves' final energy drops.
    """
    c = tuple(float(v) for v in masses)
    fractions = [float(f) for f in fractions]
    if any(not 0 < f < 1 for f in fractions):
        raise ValueError("fractions must lie strictly inside (0, 1)")
    spec_inf = asymptotic_spec(spec)
    jobs = {("F", c): None, ("Finf", c): None}
    for f in fractions:
        a = tuple(f * v for v in c)
        cma = tuple(v - w for v, w in zip(c, a))
        jobs[("F", a)] = None
        jobs[("F", cma)] = None
        jobs[("Finf", cma)] = None
    keys = list(jobs)
    args = [(k[1], spec if k[0] == "F" else spec_inf, grid, alpha, config) for k in keys]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_solve, args))
    else:
        out = [_solve(a) for a in args]
    results = dict(zip(keys, out))

    def val(kind, m):
        return results[(kind, m)][0]

    def err(kind, m):
        return results[(kind, m)][1].errorbar

    rows = []
    for f in fractions:
        a = tuple(f * v for v in c)
        cma = tuple(v - w for v, w in zip(c, a))
        I_a, I_cma, I_c, I_inf = val("F", a), val("F", cma), val("F", c), val("Finf", cma)
        rows.append(
            ScanRow(
                f=f, a=a, I_a=I_a, I_cma=I_cma, I_c=I_c,
                slack=I_a + I_cma - I_c,
                I_inf_cma=I_inf,
                mixed_slack=I_a + I_inf - I_c,
                slack_err=err("F", a) + err("F", cma) + err("F", c),
                mixed_err=err("F", a) + err("Finf", cma) + err("F", c),
            )
        )
        log.debug("scan f=%g slack=%.3e mixed=%.3e", f, rows[-1].slack, rows[-1].mixed_slack)
    return SubadditivityTable(
        masses=c, rows=rows,
        I_c=val("F", c), I_inf_c=val("Finf", c),
        I_c_err=err("F", c), I_inf_c_err=err("Finf", c),
        results=results,
    )
