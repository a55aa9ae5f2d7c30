"""Term-sum nonlinearities F(x, u) and their limits at infinity.

A nonlinearity is a sum of terms

    coeff(x) * prod_i |u_i|**s_i / (1 + |u_i|)**d_i

with a spatial coefficient drawn from a small catalogue. The structure is
explicit so that hypothesis checks can read exponents straight off the
terms instead of fitting them.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .spectral import Grid

COEFF_KINDS = ("const", "expdecayplus1", "invoneplus", "powlaw", "periodic")

# default regularisation for |x|**-t when evaluating at a lone point x = 0
DEFAULT_ORIGIN_EPS = 1e-3


@dataclass(frozen=True, eq=False)
class Coefficient:
    """Spatial coefficient of a term.

    ``const``          kappa
    ``expdecayplus1``  kappa * (exp(-|x|) + 1)
    ``invoneplus``     kappa / (1 + |x|)
    ``powlaw``         kappa * |x|**-t, t in [0, 2)
    ``periodic``       kappa * table(x mod period), multilinear interpolation
    """

    kind: str
    kappa: float = 1.0
    t: float = 0.0
    table: np.ndarray | None = field(default=None, repr=False)
    period: tuple[float, ...] | None = None
    source: str | None = None

    def __post_init__(self):
        if self.kind not in COEFF_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError(f"coefficient kappa must be >= 0, got {self.kappa}")
        if self.kind == "powlaw" and not 0 <= self.t < 2:
            raise ValueError(f"powlaw exponent t must lie in [0, 2), got {self.t}")
        if self.kind == "periodic":
            if self.table is None or self.period is None:
                raise ValueError("periodic coefficient needs a table and a period")
            table = np.array(self.table, dtype=float)
            if table.ndim != len(self.period):
                raise ValueError(
                    f"periodic table has {table.ndim} axes but period has {len(self.period)} entries"
                )
            if np.any(table < 0) or not np.all(np.isfinite(table)):
                raise ValueError("periodic table must be finite and nonnegative")
            if any(not p > 0 for p in self.period):
                raise ValueError(f"period entries must be positive, got {self.period}")
            table.flags.writeable = False
            object.__setattr__(self, "table", table)
            object.__setattr__(self, "period", tuple(float(p) for p in self.period))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "t", float(self.t))

    def _key(self):
        tbl = None if self.table is None else (self.table.shape, self.table.tobytes())
        return (self.kind, self.kappa, self.t, tbl, self.period)

    def __eq__(self, other):
        return isinstance(other, Coefficient) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def is_constant(self) -> bool:
        return self.kind == "const" or (self.kind == "powlaw" and self.t == 0)

    @property
    def is_periodic(self) -> bool:
        """Constant or genuinely periodic (invariant under some lattice shift)."""
        return self.is_constant or self.kind == "periodic"

    def __call__(self, x: np.ndarray, origin_eps: float = DEFAULT_ORIGIN_EPS) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        if self.kind == "const":
            return np.full(r.shape, self.kappa)
        if self.kind == "expdecayplus1":
            return self.kappa * (np.exp(-r) + 1.0)
        if self.kind == "invoneplus":
            return self.kappa / (1.0 + r)
        if self.kind == "powlaw":
            if self.t == 0:
                return np.full(r.shape, self.kappa)
            return self.kappa * np.where(r > 0, r, origin_eps) ** (-self.t)
        return self.kappa * self._interpolate(x)

    def _interpolate(self, x: np.ndarray) -> np.ndarray:
        table = self.table
        if x.shape[-1] != table.ndim:
            raise ValueError(f"periodic coefficient is {table.ndim}-D, points are {x.shape[-1]}-D")
        pos = []
        for axis, p in enumerate(self.period):
            npts = table.shape[axis]
            pos.append(np.mod(x[..., axis], p) / p * npts)
        out = np.zeros(x.shape[:-1])
        base = [np.floor(q).astype(int) for q in pos]
        frac = [q - b for q, b in zip(pos, base)]
        for corner in range(2**table.ndim):
            w = np.ones(x.shape[:-1])
            idx = []
            for axis in range(table.ndim):
                bit = (corner >> axis) & 1
                w = w * (frac[axis] if bit else 1.0 - frac[axis])
                idx.append(np.mod(base[axis] + bit, table.shape[axis]))
            out += w * table[tuple(idx)]
        return out

    def limit(self) -> Coefficient | None:
        """Coefficient as |x| -> infinity; ``None`` when it decays to zero."""
        if self.kind in ("const", "periodic"):
            return self
        if self.kind == "expdecayplus1":
            return Coefficient("const", self.kappa)
        if self.kind == "powlaw" and self.t == 0:
            return Coefficient("const", self.kappa)
        return None

    def far_lower_bound(self) -> tuple[float, float]:
        """``(beta, t)`` with ``coeff(x) >= beta |x|**-t`` for all ``|x| >= 1``."""
        if self.kind in ("const", "expdecayplus1"):
            return self.kappa, 0.0
        if self.kind == "invoneplus":
            return 0.5 * self.kappa, 1.0
        if self.kind == "powlaw":
            return self.kappa, self.t
        return self.kappa * float(self.table.min()), 0.0

    def describe(self) -> str:
        if self.kind == "powlaw":
            return f"powlaw:{self.kappa!r},{self.t!r}"
        if self.kind == "periodic":
            per = ",".join(repr(p) for p in self.period)
            return f"periodic:{self.source or '<table>'},{per}"
        return f"{self.kind}:{self.kappa!r}"


def _g(u: np.ndarray, s: float, d: float) -> np.ndarray:
    a = np.abs(u)
    out = a**s
    if d:
        out = out / (1.0 + a) ** d
    return out


def _dg(u: np.ndarray, s: float, d: float) -> np.ndarray:
    a = np.abs(u)
    return np.sign(u) * a ** (s - 1.0) * (s + (s - d) * a) / (1.0 + a) ** (d + 1.0)


@dataclass(frozen=True)
class Term:
    coeff: Coefficient
    powers: tuple[float, ...]
    damping: tuple[float, ...] | None = None

    def __post_init__(self):
        powers = tuple(float(s) for s in self.powers)
        damping = tuple(float(d) for d in (self.damping or (0.0,) * len(powers)))
        if len(damping) != len(powers):
            raise ValueError("powers and damping must have one entry per component")
        if any(s < 0 for s in powers) or any(d < 0 for d in damping):
            raise ValueError("powers and damping must be nonnegative")
        if any(d > 0 and s == 0 for s, d in zip(powers, damping)):
            raise ValueError("damping on a component requires a positive power on it")
        if not any(s > 0 for s in powers):
            raise ValueError("a term must involve at least one component")
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "damping", damping)

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.powers) if s > 0)

    @property
    def growth_low(self) -> float:
        """Homogeneity degree as |u| -> 0."""
        return sum(self.powers)

    @property
    def growth_high(self) -> float:
        """Homogeneity degree as |u| -> infinity."""
        return sum(s - d for s, d in zip(self.powers, self.damping))

    def amplitude(self, u: np.ndarray) -> np.ndarray:
        """prod_i g(u_i) for ``u`` of shape ``(m, ...)``."""
        out = np.ones(u.shape[1:])
        for i in self.active:
            out = out * _g(u[i], self.powers[i], self.damping[i])
        return out

    def amplitude_derivative(self, u: np.ndarray, j: int) -> np.ndarray:
        if self.powers[j] == 0:
            return np.zeros(u.shape[1:])
        out = _dg(u[j], self.powers[j], self.damping[j])
        for i in self.active:
            if i != j:
                out = out * _g(u[i], self.powers[i], self.damping[i])
        return out

    def describe(self) -> str:
        pw = ",".join(repr(s) for s in self.powers)
        dm = ",".join(repr(d) for d in self.damping)
        return f"coeff={self.coeff.describe()} powers={pw} damping={dm}"


@dataclass(frozen=True)
class NonlinearitySpec:
    m: int
    terms: tuple[Term, ...] = ()
    sigma: float | None = None
    period: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"component count must be >= 1, got {self.m}")
        terms = tuple(self.terms)
        for k, term in enumerate(terms):
            if len(term.powers) != self.m:
                raise ValueError(f"term {k + 1} has {len(term.powers)} powers, expected {self.m}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "terms", terms)
        if self.period is not None:
            object.__setattr__(self, "period", tuple(float(p) for p in self.period))

    def validate(self, alpha: float, dim: int) -> None:
        """Raise ``ValueError`` unless every term meets the exponent rules.

        Active exponents must be >= 1, the large-amplitude degree must exceed
        2, and the total growth must stay below the L2-critical 2 + 4 alpha / N.
        """
        bound = 2.0 + 4.0 * alpha / dim
        for k, term in enumerate(self.terms, start=1):
            if any(term.powers[i] < 1 for i in term.active):
                raise ValueError(f"term {k}: active powers must be >= 1, got {term.powers}")
            if len(term.active) == 1:
                i = term.active[0]
                if not term.powers[i] - term.damping[i] > 2:
                    raise ValueError(f"term {k}: single-component growth must exceed 2")
            elif not term.growth_high > 2:
                raise ValueError(f"term {k}: total growth {term.growth_high} must exceed 2")
            if not term.growth_high < bound:
                raise ValueError(
                    f"term {k}: total growth {term.growth_high:g} violates the H1 "
                    f"subcriticality bound 2 + 4*alpha/N = {bound:g}"
                )

    def evaluate(self, x: np.ndarray, u: np.ndarray, origin_eps: float = DEFAULT_ORIGIN_EPS) -> np.ndarray:
        """F at points ``x`` (shape ``(..., N)``) and amplitudes ``u`` (``(m, ...)``)."""
        coeffs = [term.coeff(x, origin_eps) for term in self.terms]
        return self.evaluate_with(coeffs, u)

    def gradient(self, x: np.ndarray, u: np.ndarray, origin_eps: float = DEFAULT_ORIGIN_EPS) -> np.ndarray:
        coeffs = [term.coeff(x, origin_eps) for term in self.terms]
        return self.gradient_with(coeffs, u)

    def evaluate_with(self, coeffs: Sequence[np.ndarray], u: np.ndarray) -> np.ndarray:
        out = np.zeros(u.shape[1:])
        for c, term in zip(coeffs, self.terms):
            out = out + c * term.amplitude(u)
        return out

    def gradient_with(self, coeffs: Sequence[np.ndarray], u: np.ndarray) -> np.ndarray:
        out = np.zeros(u.shape)
        for c, term in zip(coeffs, self.terms):
            for j in term.active:
                out[j] += c * term.amplitude_derivative(u, j)
        return out

    def coefficient_fields(self, grid: Grid) -> tuple[np.ndarray, ...]:
        return _coefficient_fields(self, grid)

    def on_grid(self, grid: Grid, u: np.ndarray) -> np.ndarray:
        return self.evaluate_with(self.coefficient_fields(grid), u)

    def gradient_on_grid(self, grid: Grid, u: np.ndarray) -> np.ndarray:
        return self.gradient_with(self.coefficient_fields(grid), u)

    def describe(self) -> str:
        return "\n".join(f"term = {t.describe()}" for t in self.terms)


@functools.lru_cache(maxsize=64)
def _coefficient_fields(spec: NonlinearitySpec, grid: Grid) -> tuple[np.ndarray, ...]:
    # |x|**-t is regularised only at the single origin node
    pts = grid.points_array
    out = []
    for term in spec.terms:
        vals = term.coeff(pts, origin_eps=0.5 * grid.spacing)
        vals.flags.writeable = False
        out.append(vals)
    return tuple(out)


def eval_F(spec: NonlinearitySpec, x, u, origin_eps: float = DEFAULT_ORIGIN_EPS) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float).reshape(spec.m, 1)
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    return float(spec.evaluate(x[None, :], u, origin_eps)[0])


def eval_dF(spec: NonlinearitySpec, j: int, x, u, origin_eps: float = DEFAULT_ORIGIN_EPS) -> float:
    """Partial derivative of F in component ``j`` (0-based)."""
    if not 0 <= j < spec.m:
        raise IndexError(f"component index {j} out of range for m={spec.m}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float).reshape(spec.m, 1)
    return float(spec.gradient(x[None, :], u, origin_eps)[j, 0])


def asymptotic_spec(spec: NonlinearitySpec) -> NonlinearitySpec:
    """Replace each coefficient with its |x| -> infinity limit.

    Terms whose coefficient decays to zero are dropped.
    """
    terms = []
    for term in spec.terms:
        lim = term.coeff.limit()
        if lim is None:
            continue
        terms.append(term if lim is term.coeff else replace(term, coeff=lim))
    return replace(spec, terms=tuple(terms))


# -- spec text grammar ---------------------------------------------------------

_TERM_RE = re.compile(r"(\w+)\s*=\s*(\S+)")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def load_periodic_table(path: Path) -> np.ndarray:
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path, ndmin=1)


def parse_term(text: str, m: int | None = None, base_dir: Path | None = None) -> Term:
    """Parse ``coeff=<kind>:<params> powers=<s,...> damping=<d,...>``."""
    fields = dict(_TERM_RE.findall(text))
    leftover = _TERM_RE.sub("", text).strip()
    if leftover:
        raise ValueError(f"unparseable text in term: {leftover!r}")
    unknown = set(fields) - {"coeff", "powers", "damping"}
    if unknown:
        raise ValueError(f"unknown term field(s): {', '.join(sorted(unknown))}")
    if "coeff" not in fields or "powers" not in fields:
        raise ValueError("a term needs coeff= and powers=")
    kind, _, params = fields["coeff"].partition(":")
    if kind not in COEFF_KINDS:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    if kind == "periodic":
        fname, _, per = params.partition(",")
        path = Path(fname)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ValueError(f"periodic table file not found: {path}")
        coeff = Coefficient("periodic", 1.0, table=load_periodic_table(path), period=_floats(per), source=fname)
    else:
        vals = _floats(params)
        if kind == "powlaw":
            if len(vals) != 2:
                raise ValueError("powlaw needs <kappa>,<t>")
            coeff = Coefficient("powlaw", vals[0], t=vals[1])
        else:
            if len(vals) != 1:
                raise ValueError(f"{kind} needs a single <kappa>")
            coeff = Coefficient(kind, vals[0])
    powers = _floats(fields["powers"])
    damping = _floats(fields["damping"]) if "damping" in fields else None
    if m is not None and len(powers) != m:
        raise ValueError(f"term lists {len(powers)} powers but there are {m} components")
    return Term(coeff, powers, damping)


# -- catalogue of example nonlinearities -------------------------------------------


def _mono(m: int, coeff: Coefficient, **powers: float) -> Term:
    s = [0.0] * m
    for key, val in powers.items():
        s[int(key[1:]) - 1] = val
    return Term(coeff, tuple(s))


def example_spec(number: int, **params) -> NonlinearitySpec:
    """The four model nonlinearities (coupled power laws with p, q weights).

    p(x) = 1/(1+|x|), q(x) = exp(-|x|) + 1. Parameters default to
    mid-range admissible values and can be overridden by keyword.
    """
    q = Coefficient("expdecayplus1", 1.0)
    p = Coefficient("invoneplus", 1.0)
    if number == 1:
        l1, l2 = params.get("l1", 3.0), params.get("l2", 3.0)
        k1, k2 = params.get("k1", 2.2), params.get("k2", 2.2)
        mu1, mu2 = params.get("mu1", 1.0), params.get("mu2", 1.0)
        terms = [
            _mono(2, p, u1=2.0, u2=2.0),
            _mono(2, Coefficient("const", mu1), u1=l1),
            _mono(2, Coefficient("const", mu2), u2=l2),
            _mono(2, q, u1=k1, u2=k2),
        ]
        return NonlinearitySpec(2, tuple(terms))
    if number == 2:
        mu1, mu2 = params.get("mu1", 1.0), params.get("mu2", 1.0)
        terms = [
            _mono(2, Coefficient("const", mu1), u1=4.0),
            _mono(2, Coefficient("const", mu2), u2=4.0),
            _mono(2, q, u1=2.0, u2=2.0),
        ]
        return NonlinearitySpec(2, tuple(terms))
    if number == 3:
        l1, l2 = params.get("l1", 3.0), params.get("l2", 3.0)
        k1, k2 = params.get("k1", 3.2), params.get("k2", 2.2)
        mu1, mu2 = params.get("mu1", 1.0), params.get("mu2", 1.0)
        terms = [
            _mono(2, Coefficient("const", mu1), u1=l1),
            _mono(2, Coefficient("const", mu2), u2=l2),
            Term(q, (k1, k2), (1.0, 0.0)),
        ]
        return NonlinearitySpec(2, tuple(terms))
    if number == 4:
        ls = params.get("l", (3.0, 3.0, 3.0))
        ks = params.get("k", (2.2,) * 6)
        ts = params.get("t", (2.2, 2.2, 2.2))
        mus = params.get("mu", (1.0, 1.0, 1.0))
        mu12, mu23, mu13 = params.get("mu12", 1.0), params.get("mu23", 1.0), params.get("mu13", 1.0)
        const = lambda v: Coefficient("const", v)  # noqa: E731
        terms = [_mono(3, const(mus[j]), **{f"u{j + 1}": ls[j]}) for j in range(3)]
        terms += [
            _mono(3, const(mu12), u1=ks[0], u2=ks[1]),
            _mono(3, const(mu23), u2=ks[2], u3=ks[3]),
            _mono(3, const(mu13), u1=ks[4], u3=ks[5]),
            Term(q, tuple(ts)),
        ]
        return NonlinearitySpec(3, tuple(terms))
    raise ValueError(f"no example nonlinearity number {number}")


def power_spec(m: int, power: float, mu: float = 1.0, component: int = 0) -> NonlinearitySpec:
    """Single term ``mu |u_component|**power``."""
    s = [0.0] * m
    s[component] = power
    return NonlinearitySpec(m, (Term(Coefficient("const", mu), tuple(s)),))


def zero_spec(m: int) -> NonlinearitySpec:
    return NonlinearitySpec(m, ())


def critical_growth(alpha: float, dim: int) -> float:
    return 2.0 + 4.0 * alpha / dim

