"""Sampled verification of the structural hypotheses H1-H7 on a nonlinearity.

Every check is evidence, not proof: ``pass`` means no counterexample was
found within the sample budget. A ``fail`` always carries a witness that
:func:`recheck` re-evaluates to a violation.

Exponents are read from term metadata; multiplicative constants are fitted
as maxima of the relevant ratios over the samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .nonlinearity import NonlinearitySpec, Term, asymptotic_spec, critical_growth

AMPLITUDES = 10.0 ** np.arange(-6, 7)
THETAS = np.logspace(0, 3, 7)
EPS_INACTIVE = 1e-2  # exponent given to components absent from the H2 lower-bound term
HYPOTHESES = ("H1", "H2", "H3", "H4", "H5", "H6", "H7")


@dataclass(frozen=True)
class Witness:
    kind: str
    x: tuple[float, ...]
    u: tuple[float, ...]
    theta: float | None = None
    j: int | None = None
    target: str = "F"  # F, Finf, or a named part such as F1 / Finf1 / Finf2
    exponent: float | None = None
    shift: tuple[float, ...] | None = None

    def format(self) -> str:
        x = ",".join(f"{v:.17g}" for v in self.x)
        u = ",".join(f"{v:.17g}" for v in self.u)
        theta = "-" if self.theta is None else f"{self.theta:.17g}"
        return f"{x};{u};{theta}"


@dataclass
class HypothesisResult:
    name: str
    verdict: str
    constants: dict[str, float] = field(default_factory=dict)
    witness: Witness | None = None
    note: str = ""

    def line(self) -> str:
        consts = ",".join(f"{k}={v:.17g}" for k, v in self.constants.items())
        wit = "none" if self.witness is None else self.witness.format()
        return f"{self.name}: {self.verdict}; constants: {consts}; witness: {wit}"


@dataclass
class HypothesisReport:
    alpha: float
    dim: int
    results: dict[str, HypothesisResult]

    def __getitem__(self, name: str) -> HypothesisResult:
        return self.results[name]

    def verdict(self, name: str) -> str:
        return self.results[name].verdict

    @property
    def all_pass(self) -> bool:
        return all(r.verdict != "fail" for r in self.results.values())

    def lines(self) -> list[str]:
        return [self.results[h].line() for h in HYPOTHESES]


# -- spec splitting ----------------------------------------------------------------


def _subspec(spec: NonlinearitySpec, terms) -> NonlinearitySpec:
    return replace(spec, terms=tuple(terms))


def part(spec: NonlinearitySpec, name: str, j: int) -> NonlinearitySpec:
    """Term-tag decomposition with respect to component ``j`` (0-based).

    ``F1``/``F2``: terms with / without u_j (applied to F).
    ``Finf1``: terms with u_j of large-amplitude degree > 2 in u_j,
    ``Finf2``: the remaining terms with u_j, ``Finf3``: terms without u_j
    (applied to F-infinity).
    """

    def deg(t: Term) -> float:
        return t.powers[j] - t.damping[j]

    if name == "F1":
        sel = [t for t in spec.terms if t.powers[j] > 0]
    elif name == "F2":
        sel = [t for t in spec.terms if t.powers[j] == 0]
    elif name == "Finf1":
        sel = [t for t in spec.terms if t.powers[j] > 0 and deg(t) > 2]
    elif name == "Finf2":
        sel = [t for t in spec.terms if t.powers[j] > 0 and deg(t) <= 2]
    elif name == "Finf3":
        sel = [t for t in spec.terms if t.powers[j] == 0]
    else:
        raise ValueError(f"unknown part {name!r}")
    return _subspec(spec, sel)


def _target_spec(spec: NonlinearitySpec, target: str, j: int | None) -> NonlinearitySpec:
    if target == "F":
        return spec
    if target == "Finf":
        return asymptotic_spec(spec)
    if target.startswith("Finf"):
        return part(asymptotic_spec(spec), target, j)
    return part(spec, target, j)


# -- violation predicates ------------------------------------------------------------


def _F(spec, x, u):
    return spec.evaluate(np.asarray(x, float)[None, :], np.asarray(u, float)[:, None])[0]


def _dF(spec, x, u, j):
    return spec.gradient(np.asarray(x, float)[None, :], np.asarray(u, float)[:, None])[j, 0]


def _rho_crit(spec, x, u, crit):
    a = np.abs(u)
    return _F(spec, x, u) / (np.sum(a**2) + np.sum(a**crit))


def _drho_crit(spec, x, u, j, crit):
    a = np.abs(u)
    return abs(_dF(spec, x, u, j)) / (np.sum(a) + np.sum(a ** (crit - 1)))


def _rho2(spec, x, u):
    return _F(spec, x, u) / np.sum(np.abs(u) ** 2)


def _drho1(spec, x, u, j):
    return abs(_dF(spec, x, u, j)) / np.sum(np.abs(u))


def _scaled(u, j, theta):
    v = np.array(u, float)
    if j is None:
        return v * theta
    v[j] *= theta
    return v


def recheck(spec: NonlinearitySpec, alpha: float, dim: int, w: Witness, constants: dict | None = None) -> bool:
    """Re-evaluate a witness from scratch; True when it still shows a violation."""
    crit = critical_growth(alpha, dim)
    tgt = _target_spec(spec, w.target, w.j)
    x, u = np.asarray(w.x, float), np.asarray(w.u, float)
    k = w.kind
    if k == "negative":
        return _F(tgt, x, u) < 0
    if k == "growth_high":
        r0 = _rho_crit(tgt, x, u, crit)
        return r0 > 0 and _rho_crit(tgt, x, u * w.theta, crit) >= r0 * (1 - 1e-9)
    if k == "dgrowth_high":
        r0 = _drho_crit(tgt, x, u, w.j, crit)
        return r0 > 0 and _drho_crit(tgt, x, u * w.theta, w.j, crit) >= r0 * (1 - 1e-9)
    if k == "growth_low":
        r0 = _rho2(tgt, x, u)
        return r0 > 0 and _rho2(tgt, x, u * w.theta) > r0 * (1 + 1e-3)
    if k == "dgrowth_low":
        r0 = _drho1(tgt, x, u, w.j)
        return r0 > 0 and _drho1(tgt, x, u * w.theta, w.j) > r0 * (1 + 1e-3)
    if k == "growth_low_strict":
        r0 = _rho2(tgt, x, u)
        return r0 > 0 and _rho2(tgt, x, u * w.theta) >= r0 * (1 - 1e-9)
    if k == "dgrowth_low_strict":
        r0 = _drho1(tgt, x, u, w.j)
        return r0 > 0 and _drho1(tgt, x, u * w.theta, w.j) >= r0 * (1 - 1e-9)
    if k == "lower_bound":
        c = constants or {}
        beta = c.get("beta", 0.0)
        if beta <= 0:
            return _F(tgt, x, u) <= 0
        t = c.get("t", 0.0)
        s = [c[f"s_{i + 1}"] for i in range(spec.m)]
        bound = beta * np.linalg.norm(x) ** (-t) * np.prod(np.abs(u) ** np.asarray(s))
        return _F(tgt, x, u) <= bound
    if k == "scaling":
        lhs = _F(tgt, x, _scaled(u, w.j, w.theta))
        return lhs < w.theta**w.exponent * _F(tgt, x, u) * (1 - 1e-12)
    if k == "periodicity":
        a, b = _F(tgt, x, u), _F(tgt, x + np.asarray(w.shift), u)
        return abs(a - b) > 1e-9 * max(abs(a), abs(b), 1e-300)
    if k == "decay":
        inf = asymptotic_spec(spec)
        a = np.abs(u)
        den = np.sum(a**2) + np.sum(a ** (constants["l2"] + 2))
        r0 = abs(_F(spec, x, u) - _F(inf, x, u)) / den
        r1 = abs(_F(spec, x * w.theta, u) - _F(inf, x * w.theta, u)) / den
        return r1 > r0 * (1 + 1e-12) and r1 > 1e-300
    if k == "domination":
        inf = asymptotic_spec(spec)
        den = lambda v: sum(_F(part(inf, "Finf1", i), x, v) for i in range(spec.m))  # noqa: E731
        d0 = den(u)
        if d0 <= 0:
            return _F(inf, x, u) > 0
        d1 = den(u * w.theta)
        return d1 <= 0 or _F(inf, x, u * w.theta) / d1 > 1.01 * _F(inf, x, u) / d0
    if k == "order":
        return _F(asymptotic_spec(spec), x, u) > _F(spec, x, u) * (1 + 1e-12)
    if k == "no_strict":
        return _F(spec, x, u) <= _F(asymptotic_spec(spec), x, u) * (1 + 1e-9)
    raise ValueError(f"unknown witness kind {k!r}")


# -- sampling ------------------------------------------------------------------------


class _Samples:
    """Seeded rays: a point x, a unit direction in u-space, log-spaced amplitudes."""

    def __init__(self, m, dim, budget, seed, radius):
        rng = np.random.default_rng(seed)
        self.n = max(8, budget // len(AMPLITUDES))
        d = rng.normal(size=(self.n, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        self.xdir = d
        self.x = d * (radius * rng.uniform(size=(self.n, 1)) ** (1.0 / dim))
        self.x[0] = 0.0
        dirs = rng.normal(size=(self.n, m))
        self.udir = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        self.rng = rng
        self.radius = radius

    def grid(self):
        """x of shape (n, A, N) and u of shape (m, n, A)."""
        A = len(AMPLITUDES)
        x = np.repeat(self.x[:, None, :], A, axis=1)
        u = np.einsum("nm,a->mna", self.udir, AMPLITUDES)
        return x, u


def _witness_at(kind, x, u, **kw) -> Witness:
    return Witness(kind, tuple(float(v) for v in np.atleast_1d(x)), tuple(float(v) for v in u), **kw)


def _first(mask):
    idx = np.argwhere(mask)
    return tuple(idx[0]) if len(idx) else None


def _growth_checks(spec, target, S, crit, low_kind, low_tol, strict_low):
    """Shared high/low amplitude growth tests for H1 and H5."""
    x, u = S.grid()
    a = np.abs(u)
    F = spec.evaluate(x, u)
    m = spec.m
    neg = _first(F < 0)
    if neg is not None:
        n, k = neg
        return _witness_at("negative", x[n, k], u[:, n, k], target=target)
    rho_c = F / (np.sum(a**2, axis=0) + np.sum(a**crit, axis=0))
    rho2 = F / np.sum(a**2, axis=0)
    hi = (rho_c[:, -1] >= rho_c[:, -2] * (1 - 1e-9)) & (rho_c[:, -2] > 0)
    n = _first(hi)
    if n is not None:
        n = n[0]
        return _witness_at("growth_high", x[n, -2], u[:, n, -2], theta=10.0, target=target)
    if strict_low:
        lo = (rho2[:, 0] >= rho2[:, 1] * (1 - 1e-9)) & (rho2[:, 1] > 0)
    else:
        lo = (rho2[:, 0] > rho2[:, 1] * (1 + low_tol)) & (rho2[:, 1] > 0)
    n = _first(lo)
    if n is not None:
        n = n[0]
        return _witness_at(low_kind, x[n, 1], u[:, n, 1], theta=0.1, target=target)
    dF = spec.gradient(x, u)
    for j in range(m):
        g = np.abs(dF[j])
        dr_c = g / (np.sum(a, axis=0) + np.sum(a ** (crit - 1), axis=0))
        dr1 = g / np.sum(a, axis=0)
        hi = (dr_c[:, -1] >= dr_c[:, -2] * (1 - 1e-9)) & (dr_c[:, -2] > 0)
        n = _first(hi)
        if n is not None:
            n = n[0]
            return _witness_at("dgrowth_high", x[n, -2], u[:, n, -2], theta=10.0, j=j, target=target)
        if strict_low:
            lo = (dr1[:, 0] >= dr1[:, 1] * (1 - 1e-9)) & (dr1[:, 1] > 0)
        else:
            lo = (dr1[:, 0] > dr1[:, 1] * (1 + low_tol)) & (dr1[:, 1] > 0)
        n = _first(lo)
        if n is not None:
            n = n[0]
            return _witness_at("d" + low_kind, x[n, 1], u[:, n, 1], theta=0.1, j=j, target=target)
    return None


def _fit_bound(spec, S, low_exp, high_exp):
    """Fitted A, B for F <= A(sum|u|^low + sum|u|^high) and the derivative analogue."""
    x, u = S.grid()
    a = np.abs(u)
    F = spec.evaluate(x, u)
    A = float(np.max(F / (np.sum(a**low_exp, axis=0) + np.sum(a**high_exp, axis=0))))
    dF = np.abs(spec.gradient(x, u))
    den = np.sum(a ** (low_exp - 1), axis=0) + np.sum(a ** (high_exp - 1), axis=0)
    B = float(np.max(dF / den[None]))
    return A, B


def _check_h1(spec, alpha, dim, S) -> HypothesisResult:
    crit = critical_growth(alpha, dim)
    if spec.terms:
        l1 = max(max(t.growth_high for t in spec.terms) - 2.0, 1e-6)
    else:
        l1 = 2.0 * alpha / dim
    wit = _growth_checks(spec, "F", S, crit, "growth_low", 1e-3, strict_low=False)
    A, B = _fit_bound(spec, S, 2.0, l1 + 2.0)
    consts = {"A": A, "B": B, "l1": l1, "bound": crit - 2.0}
    return HypothesisResult("H1", "fail" if wit else "pass", consts, wit)


def _h2_candidate(spec: NonlinearitySpec, alpha: float, dim: int):
    best = None
    for term in spec.terms:
        beta, t = term.coeff.far_lower_bound()
        beta *= 2.0 ** (-sum(term.damping))
        if beta <= 0 or not t < 2:
            continue
        s = [p if p > 0 else EPS_INACTIVE for p in term.powers]
        total = sum(s)
        if not t < dim * (1 - total / (2 * alpha)) + 2:
            continue
        if best is None or total < best[2]:
            best = (0.5 * beta, t, total, s)
    return best


def _check_h2_one(spec, alpha, dim, S, target):
    R = S.radius / 4.0
    cand = _h2_candidate(spec, alpha, dim)
    rng = np.random.default_rng(S.rng.integers(2**32))
    n = S.n
    r = R + (S.radius - R) * rng.uniform(size=n)
    x = S.xdir * r[:, None]
    amps = np.logspace(-6, np.log10(0.99), len(AMPLITUDES))
    u = np.einsum("nm,a->mna", S.udir, amps)
    xx = np.repeat(x[:, None, :], len(amps), axis=1)
    F = spec.evaluate(xx, u)
    if cand is None:
        n0, k0 = np.unravel_index(np.argmin(F), F.shape)
        consts = {"beta": 0.0, "S": 1.0, "R": R}
        wit = _witness_at("lower_bound", xx[n0, k0], u[:, n0, k0], target=target)
        return HypothesisResult("H2", "fail", consts, wit, "no term yields a positive far-field lower bound")
    beta, t, total, s = cand
    consts = {"beta": beta, "t": t, "s": total, "S": 1.0, "R": R}
    consts.update({f"s_{i + 1}": si for i, si in enumerate(s)})
    bound = beta * np.linalg.norm(xx, axis=-1) ** (-t) * np.prod(np.abs(u) ** np.asarray(s)[:, None, None], axis=0)
    bad = _first(~(F > bound))
    wit = None
    if bad is not None:
        wit = _witness_at("lower_bound", xx[bad], u[:, bad[0], bad[1]], target=target)
    return HypothesisResult("H2", "fail" if wit else "pass", consts, wit)


def _check_h3(spec, S) -> HypothesisResult:
    return _check_split(spec, S, [("F1", 2.0)], "F2")


def _check_split(spec, S, scaled_parts, periodic_part, sigma=None) -> HypothesisResult:
    x, u = S.grid()
    name = "H3" if periodic_part == "F2" else "H6"
    consts = {}
    for j in range(spec.m):
        for pname, expo in scaled_parts:
            if expo is None:
                expo = 2.0 + sigma
            p = part(spec, pname, j)
            if not p.terms:
                continue
            base = p.evaluate(x, u)
            for theta in THETAS[1:]:
                v = u.copy()
                v[j] *= theta
                lhs = p.evaluate(x, v)
                bad = _first(lhs < theta**expo * base * (1 - 1e-12))
                if bad is not None:
                    n, k = bad
                    wit = _witness_at(
                        "scaling", x[n, k], u[:, n, k], theta=float(theta), j=j, target=pname, exponent=expo
                    )
                    return HypothesisResult(name, "fail", consts, wit)
        p3 = part(spec, periodic_part, j)
        shift = _lattice_shift(spec, p3, x.shape[-1], S.radius)
        if p3.terms:
            a = p3.evaluate(x, u)
            b = p3.evaluate(x + shift, u)
            bad = _first(np.abs(a - b) > 1e-9 * np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300))
            if bad is not None:
                n, k = bad
                wit = _witness_at("periodicity", x[n, k], u[:, n, k], j=j, target=periodic_part, shift=tuple(shift))
                return HypothesisResult(name, "fail", consts, wit)
    return HypothesisResult(name, "pass", consts, None)


def _lattice_shift(spec, sub, dim, radius) -> np.ndarray:
    if spec.period is not None:
        L = np.asarray(spec.period, float)
    else:
        pers = [t.coeff.period for t in sub.terms if t.coeff.kind == "periodic"]
        L = np.asarray(pers[0], float) if pers else np.r_[radius / 2.0, np.zeros(dim - 1)]
    if L.size != dim:
        raise ValueError(f"lattice vector has {L.size} entries, dimension is {dim}")
    return L


def _transient(spec) -> bool:
    return any(t.coeff.limit() is not t.coeff for t in spec.terms)


def _check_h4(spec, S, l2) -> HypothesisResult:
    consts = {"l2": l2}
    if not _transient(spec):
        return HypothesisResult("H4", "n/a", consts, None, "F coincides with its limit")
    inf = asymptotic_spec(spec)
    radii = np.linspace(S.radius / 4.0, S.radius, 8)
    _, u = S.grid()
    a = np.abs(u)
    den = np.sum(a**2, axis=0) + np.sum(a ** (l2 + 2), axis=0)
    prev = None
    for r_prev, r in zip(np.r_[np.nan, radii[:-1]], radii):
        x = np.repeat((S.xdir * r)[:, None, :], u.shape[-1], axis=1)
        ratio = np.abs(spec.evaluate(x, u) - inf.evaluate(x, u)) / den
        if prev is not None:
            bad = _first((ratio > prev * (1 + 1e-12)) & (ratio > 1e-300))
            if bad is not None:
                n, k = bad
                wit = _witness_at("decay", S.xdir[n] * r_prev, u[:, n, k], theta=float(r / r_prev))
                return HypothesisResult("H4", "fail", consts, wit)
        prev = ratio
    consts["edge_ratio"] = float(np.max(prev))
    return HypothesisResult("H4", "pass", consts, None)


def _check_h5(inf, alpha, dim, S) -> HypothesisResult:
    crit = critical_growth(alpha, dim)
    if not inf.terms:
        return HypothesisResult("H5", "pass", {"A'": 0.0, "B'": 0.0}, None, "F-infinity vanishes")
    low = min(t.growth_low for t in inf.terms) - 2.0
    l3 = max(t.growth_high for t in inf.terms) - 2.0
    beta_p = low if low < l3 else 0.5 * l3
    consts = {"beta'": beta_p, "l3": l3}
    wit = _growth_checks(inf, "Finf", S, crit, "growth_low_strict", 0.0, strict_low=True)
    if beta_p > 0:
        A, B = _fit_bound(inf, S, beta_p + 2.0, l3 + 2.0)
        consts.update({"A'": A, "B'": B})
    for i in range(inf.m):
        consts[f"beta'_{i + 1}"] = beta_p
        consts[f"l3_{i + 1}"] = l3
    return HypothesisResult("H5", "fail" if wit else "pass", consts, wit)


def _check_h6(inf, S) -> HypothesisResult:
    sigmas = []
    for j in range(inf.m):
        for t in part(inf, "Finf1", j).terms:
            sigmas.append(t.powers[j] - t.damping[j] - 2.0)
    sigma_max = min(sigmas) if sigmas else 0.0
    sigma = inf.sigma if inf.sigma is not None else sigma_max
    res = _check_split(inf, S, [("Finf1", None), ("Finf2", 2.0)], "Finf3", sigma=sigma)
    res.constants["sigma"] = sigma
    res.constants["sigma_max"] = sigma_max
    if res.verdict == "fail":
        return res
    if not inf.terms:
        return res
    x, u = S.grid()
    F = inf.evaluate(x, u)
    den = sum(part(inf, "Finf1", j).evaluate(x, u) for j in range(inf.m))
    if np.isscalar(den):
        den = np.zeros_like(F)
    zero = _first((den <= 0) & (F > 0))
    if zero is not None:
        n, k = zero
        res.verdict = "fail"
        res.witness = _witness_at("domination", x[n, k], u[:, n, k], theta=10.0)
        return res
    ratio = np.where(den > 0, F / np.where(den > 0, den, 1.0), 0.0)
    grow_hi = ratio[:, -1] > 1.01 * ratio[:, -2]
    grow_lo = ratio[:, 0] > 1.01 * ratio[:, 1]
    for mask, k, th in ((grow_hi, -2, 10.0), (grow_lo, 1, 0.1)):
        n = _first(mask)
        if n is not None:
            n = n[0]
            res.verdict = "fail"
            res.witness = _witness_at("domination", x[n, k], u[:, n, k], theta=th)
            return res
    res.constants["C"] = float(np.max(ratio))
    return res


def _check_h7(spec, inf, S) -> HypothesisResult:
    x, u = S.grid()
    F = spec.evaluate(x, u)
    Fi = inf.evaluate(x, u)
    bad = _first(Fi > F * (1 + 1e-12))
    if bad is not None:
        n, k = bad
        return HypothesisResult("H7", "fail", {}, _witness_at("order", x[n, k], u[:, n, k]))
    gap = F - Fi
    strict = F > Fi * (1 + 1e-9)
    if not np.any(strict):
        n, k = np.unravel_index(np.argmax(gap), gap.shape)
        wit = _witness_at("no_strict", x[n, k], u[:, n, k])
        return HypothesisResult("H7", "fail", {}, wit, "F coincides with F-infinity on all samples")
    frac = float(np.mean(strict))
    n, k = np.unravel_index(np.argmax(np.where(strict, gap, -np.inf)), gap.shape)
    res = HypothesisResult("H7", "pass", {"strict_fraction": frac}, None)
    res.note = f"strict at x={tuple(x[n, k])}"
    return res


def check_hypotheses(
    spec: NonlinearitySpec,
    alpha: float,
    dim: int,
    sample_budget: int = 2000,
    seed: int = 0,
    radius: float = 20.0,
) -> HypothesisReport:
    """Sampled audit of H1-H7; ``radius`` bounds |x| (use half the box edge)."""
    if sample_budget < 1000:
        raise ValueError(f"sample_budget must be >= 1000, got {sample_budget}")
    inf = asymptotic_spec(spec)
    S = _Samples(spec.m, dim, sample_budget, seed, radius)
    results = {}
    h1 = _check_h1(spec, alpha, dim, S)
    results["H1"] = h1
    h2 = _check_h2_one(spec, alpha, dim, S, "F")
    if h2.verdict == "pass":
        h2inf = _check_h2_one(inf, alpha, dim, S, "Finf")
        if h2inf.verdict == "fail":
            h2 = h2inf
    results["H2"] = h2
    results["H3"] = _check_h3(spec, S)
    results["H4"] = _check_h4(spec, S, h1.constants["l1"])
    results["H5"] = _check_h5(inf, alpha, dim, S)
    results["H6"] = _check_h6(inf, S)
    results["H7"] = _check_h7(spec, inf, S)
    return HypothesisReport(alpha, dim, results)
