"""Line-based run configuration.

Format::

    # comment
    [problem]
    dim = 1
    alpha = 1.0
    masses = 1.0
    box = 40
    grid = 512
    [nonlinearity]
    term = coeff=const:1 powers=4

Keys are ``key = value``; lists are comma separated; ``term`` may repeat.
Errors are raised as :class:`ConfigError` naming the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .minimizer import SolverConfig
from .nonlinearity import NonlinearitySpec, parse_term
from .spectral import Grid

SECTIONS = {
    "problem": {"dim", "alpha", "components", "masses", "box", "grid"},
    "nonlinearity": {"term", "sigma", "period"},
    "solver": {"step", "tol", "max_iter", "backtrack", "multistart", "seed"},
    "scan": {"fractions", "workers"},
    "dilate": {"lambdas", "refine", "depth", "width"},
    "diagnose": {"source", "radii", "eps_v", "eps_d", "r_ref"},
}
REQUIRED = {"problem": ("dim", "alpha", "masses", "box", "grid")}
REPEATABLE = {("nonlinearity", "term")}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line."""


@dataclass
class Entry:
    value: str
    where: str  # "line 12" or "override 'solver.tol=1e-9'"


@dataclass
class RunConfig:
    dim: int
    alpha: float
    masses: tuple[float, ...]
    box: float
    points: int
    spec: NonlinearitySpec
    solver: SolverConfig = field(default_factory=SolverConfig)
    fractions: tuple[float, ...] = (0.25, 0.5, 0.75)
    workers: int = 1
    lambdas: tuple[float, ...] | None = None
    refine: int = 1
    depth: int = 10
    width: float = 1.0
    source: tuple[str, ...] = ()
    radii: tuple[float, ...] | None = None
    eps_v: float | None = None
    eps_d: float | None = None
    r_ref: float | None = None
    base_dir: Path = Path(".")

    @property
    def m(self) -> int:
        return len(self.masses)

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.points, self.box)


def _split(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _read(text: str) -> dict[str, dict[str, list[Entry]]]:
    raw: dict[str, dict[str, list[Entry]]] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {no}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{where}: unknown section [{section}]")
            raw.setdefault(section, {})
            continue
        if section is None:
            raise ConfigError(f"{where}: key outside of any section")
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        _store(raw, section, key, Entry(value, where))
    return raw


def _store(raw, section, key, entry):
    if key not in SECTIONS[section]:
        raise ConfigError(f"{entry.where}: unknown key {key!r} in [{section}]")
    slot = raw.setdefault(section, {}).setdefault(key, [])
    if slot and (section, key) not in REPEATABLE:
        raise ConfigError(f"{entry.where}: duplicate key {key!r} in [{section}]")
    slot.append(entry)


def apply_overrides(raw, overrides: Sequence[str]) -> None:
    """Apply ``section.key=value`` overrides; they replace the file's value(s)."""
    for item in overrides:
        where = f"override {item!r}"
        name, eq, value = item.partition("=")
        section, dot, key = name.strip().partition(".")
        if not eq or not dot:
            raise ConfigError(f"{where}: expected section.key=value")
        if section not in SECTIONS:
            raise ConfigError(f"{where}: unknown section [{section}]")
        raw.setdefault(section, {}).pop(key, None)
        _store(raw, section, key, Entry(value.strip(), where))


def parse_config(
    text: str,
    base_dir: Path | str = ".",
    overrides: Sequence[str] = (),
    strict: bool = True,
) -> RunConfig:
    """Parse and validate a configuration document.

    With ``strict=False`` the exponent rules on the nonlinearity are not
    enforced, so hypothesis checking can report on supercritical input.
    """
    base_dir = Path(base_dir)
    raw = _read(text)
    apply_overrides(raw, overrides)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in raw.get(section, {}):
                raise ConfigError(f"missing required key {key!r} in [{section}]")

    def get(section, key, conv, default=None):
        entries = raw.get(section, {}).get(key)
        if not entries:
            return default
        e = entries[-1]
        try:
            return conv(e.value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{e.where}: bad value for {key}: {exc}") from None

    def where(section, key):
        return raw[section][key][-1].where

    def floats(s):
        return tuple(float(v) for v in _split(s))

    def integer(s):
        v = float(s)
        if v != int(v):
            raise ValueError(f"{s!r} is not an integer")
        return int(v)

    dim = get("problem", "dim", integer)
    if dim not in (1, 2, 3):
        raise ConfigError(f"{where('problem', 'dim')}: dim must be 1, 2 or 3")
    alpha = get("problem", "alpha", float)
    if not alpha > 0:
        raise ConfigError(f"{where('problem', 'alpha')}: alpha must be positive")
    masses = get("problem", "masses", floats)
    if not masses or any(not c > 0 for c in masses):
        raise ConfigError(f"{where('problem', 'masses')}: masses must be positive")
    m = get("problem", "components", integer, len(masses))
    if m != len(masses):
        raise ConfigError(f"{where('problem', 'components')}: {m} components but {len(masses)} masses")
    box = get("problem", "box", float)
    if not box > 0:
        raise ConfigError(f"{where('problem', 'box')}: box must be positive")
    points = get("problem", "grid", integer)
    if points < 8 or points % 2:
        raise ConfigError(f"{where('problem', 'grid')}: grid must be an even integer >= 8, got {points}")

    terms = []
    for e in raw.get("nonlinearity", {}).get("term", []):
        try:
            term = parse_term(e.value, m, base_dir)
            if strict:
                NonlinearitySpec(m, (term,)).validate(alpha, dim)
        except ValueError as exc:
            msg = str(exc).removeprefix("term 1: ")
            raise ConfigError(f"{e.where}: {msg}") from None
        terms.append(term)
    sigma = get("nonlinearity", "sigma", float)
    period = get("nonlinearity", "period", floats)
    try:
        spec = NonlinearitySpec(m, tuple(terms), sigma, period)
    except ValueError as exc:
        raise ConfigError(f"[nonlinearity]: {exc}") from None

    solver_kw = {}
    for key, conv in (("step", float), ("tol", float), ("max_iter", integer), ("backtrack", float),
                      ("multistart", integer), ("seed", integer)):
        v = get("solver", key, conv)
        if v is not None:
            solver_kw[key] = v
    try:
        solver = SolverConfig(**solver_kw)
    except ValueError as exc:
        raise ConfigError(f"[solver]: {exc}") from None

    cfg = RunConfig(
        dim=dim, alpha=alpha, masses=masses, box=box, points=points, spec=spec, solver=solver,
        fractions=get("scan", "fractions", floats, (0.25, 0.5, 0.75)),
        workers=get("scan", "workers", integer, 1),
        lambdas=get("dilate", "lambdas", floats),
        refine=get("dilate", "refine", integer, 1),
        depth=get("dilate", "depth", integer, 10),
        width=get("dilate", "width", float, 1.0),
        source=get("diagnose", "source", lambda s: tuple(_split(s)), ()),
        radii=get("diagnose", "radii", floats),
        eps_v=get("diagnose", "eps_v", float),
        eps_d=get("diagnose", "eps_d", float),
        r_ref=get("diagnose", "r_ref", float),
        base_dir=base_dir,
    )
    if any(not 0 < f < 1 for f in cfg.fractions):
        raise ConfigError(f"{where('scan', 'fractions')}: fractions must lie strictly inside (0, 1)")
    if cfg.lambdas is not None and any(not 0 < v <= 1 for v in cfg.lambdas):
        raise ConfigError(f"{where('dilate', 'lambdas')}: lambdas must lie in (0, 1]")
    if cfg.refine < 1 or cfg.depth < 1:
        raise ConfigError("[dilate]: refine and depth must be >= 1")
    if not cfg.width > 0:
        raise ConfigError(f"{where('dilate', 'width')}: width must be positive")
    return cfg


def load_config(path: Path | str, overrides: Sequence[str] = (), strict: bool = True) -> RunConfig:
    """Read and parse a configuration file; relative paths resolve next to it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.parent, overrides, strict)
