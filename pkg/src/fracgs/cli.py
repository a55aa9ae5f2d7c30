"""Command-line front end.

    fracgs solve       --config run.cfg --out outdir
    fracgs scan-subadd --config run.cfg --out outdir
    fracgs check       --config run.cfg --out outdir
    fracgs dilate      --config run.cfg --out outdir
    fracgs diagnose    --config run.cfg --out outdir

Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .config import ConfigError, RunConfig, load_config
from .energy import default_lambdas, dilation_test, gaussian_profile
from .hypotheses import check_hypotheses
from .minimizer import SolverError, ground_state_energy
from .output import fmt, read_state, write_csv, write_state
from .spectral import State

log = logging.getLogger("fracgs")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_SOLVER = 0, 1, 2, 3
FAMILIES = {
    "vanishing": diagnostics.vanishing_family,
    "compactness": diagnostics.compactness_family,
    "dichotomy": diagnostics.dichotomy_family,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracgs", description="Normalized ground states of fractional Schrodinger systems.")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, text in (
        ("solve", "minimize the energy at the configured masses"),
        ("scan-subadd", "sub-additivity scan over mass fractions"),
        ("check", "sampled audit of the structural hypotheses"),
        ("dilate", "energies of dilated trial states"),
        ("diagnose", "concentration functions and trichotomy label"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="configuration file")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value; may repeat")
        sp.add_argument("--seed", type=int, help="override solver.seed")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _write_summary(path: Path, items) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, val in items:
            if isinstance(val, (list, tuple, np.ndarray)):
                val = ", ".join(fmt(v) for v in val)
            elif isinstance(val, float):
                val = fmt(val)
            fh.write(f"{key} = {val}\n")


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    I, res = ground_state_energy(cfg.masses, cfg.spec, cfg.grid, cfg.alpha, cfg.solver)
    m, dim = cfg.m, cfg.dim
    header = ["iter", "energy", "kinetic", "potential", "residual"]
    header += [f"mass_{i + 1}" for i in range(m)] + [f"lambda_{i + 1}" for i in range(m)]
    write_csv(out / "history.csv", header, (
        [row.iteration, row.energy.total, row.energy.kinetic, row.energy.potential, row.residual,
         *row.masses, *row.multipliers]
        for row in res.history
    ))
    write_csv(out / "com.csv", ["iter"] + [f"com_{k + 1}" for k in range(dim)],
              ([row.iteration, *row.center] for row in res.history))
    write_state(out / "state.f64", res.state.values, cfg.alpha)
    _write_summary(out / "summary.txt", [
        ("status", res.status),
        ("energy", res.energy.total),
        ("kinetic", res.energy.kinetic),
        ("potential", res.energy.potential),
        ("lambda", res.multipliers),
        ("residual", res.residual),
        ("iterations", res.history[-1].iteration),
        ("errorbar", res.errorbar),
    ])
    print(f"status = {res.status}; energy = {fmt(I)}; residual = {fmt(res.residual)}")
    return EXIT_SOLVER if res.status == "stalled" else EXIT_OK


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    table = diagnostics.subadditivity_scan(
        cfg.masses, cfg.fractions, cfg.spec, cfg.grid, cfg.alpha, cfg.solver, workers=cfg.workers
    )
    m = cfg.m
    header = ["f"] + [f"a_{i + 1}" for i in range(m)]
    header += ["I_a", "I_cma", "I_c", "slack", "I_inf_cma", "mixed_slack"]
    write_csv(out / "scan.csv", header, (
        [r.f, *r.a, r.I_a, r.I_cma, r.I_c, r.slack, r.I_inf_cma, r.mixed_slack] for r in table.rows
    ))
    _write_summary(out / "scan_summary.txt", [
        ("I_c", table.I_c),
        ("I_inf_c", table.I_inf_c),
        ("I_c_errorbar", table.I_c_err),
        ("I_inf_c_errorbar", table.I_inf_c_err),
        ("slack_errorbar", [r.slack_err for r in table.rows]),
        ("mixed_errorbar", [r.mixed_err for r in table.rows]),
    ])
    print(f"I_c = {fmt(table.I_c)}; I_inf_c = {fmt(table.I_inf_c)}")
    return EXIT_OK


def cmd_check(cfg: RunConfig, out: Path) -> int:
    report = check_hypotheses(cfg.spec, cfg.alpha, cfg.dim, seed=cfg.solver.seed, radius=cfg.box / 2)
    lines = report.lines()
    (out / "hypotheses.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        print(line)
    return EXIT_OK


def cmd_dilate(cfg: RunConfig, out: Path) -> int:
    lambdas = cfg.lambdas if cfg.lambdas is not None else default_lambdas(cfg.refine, cfg.depth)
    profile = gaussian_profile(cfg.grid, cfg.width)
    res = dilation_test(cfg.masses, cfg.spec, cfg.grid, cfg.alpha, profile, lambdas)
    write_csv(out / "dilate.csv", ["lambda", "energy"], res.rows())
    line = "lambda_star = " + ("none" if res.lambda_star is None else fmt(res.lambda_star))
    (out / "dilate_summary.txt").write_text(line + "\n", encoding="utf-8")
    print(line)
    return EXIT_OK


def _diagnose_states(cfg: RunConfig) -> list[State]:
    if len(cfg.source) == 1 and cfg.source[0].startswith("family:"):
        name = cfg.source[0].split(":", 1)[1]
        if name not in FAMILIES:
            raise ConfigError(f"[diagnose]: unknown family {name!r}; expected one of {', '.join(FAMILIES)}")
        return FAMILIES[name](cfg.solver.seed)
    if not cfg.source:
        raise ConfigError("[diagnose]: 'source' is required (state files or family:<name>)")
    grid, states = cfg.grid, []
    for name in cfg.source:
        path = Path(name) if Path(name).is_absolute() else cfg.base_dir / name
        if not path.exists():
            raise ConfigError(f"[diagnose]: state file not found: {path}")
        head, values = read_state(path)
        if (head.dim, head.points, head.m) != (cfg.dim, cfg.points, cfg.m):
            raise ConfigError(f"[diagnose]: {path} does not match the [problem] grid and component count")
        states.append(State(grid, values, cfg.masses, head.alpha))
    return states


def cmd_diagnose(cfg: RunConfig, out: Path) -> int:
    states = _diagnose_states(cfg)
    grid = states[0].grid
    radii = cfg.radii if cfg.radii is not None else diagnostics.default_radii(grid, cfg.r_ref)
    rows = []
    for k, s in enumerate(states):
        prof = diagnostics.concentration_function(s, radii)
        for r, q, c in zip(prof.radii, prof.q, prof.centers):
            rows.append([k, float(r), float(q), *map(float, c)])
    write_csv(out / "qfun.csv", ["snapshot", "r", "Q"] + [f"center_{i + 1}" for i in range(grid.dim)], rows)
    total = float(sum(states[0].target_masses))
    thresholds = None
    if cfg.eps_v is not None or cfg.eps_d is not None:
        thresholds = (cfg.eps_v if cfg.eps_v is not None else 0.05 * total,
                      cfg.eps_d if cfg.eps_d is not None else 0.1 * total)
    label = diagnostics.classify_sequence(states, thresholds, cfg.r_ref)
    line = f"classification = {label}"
    (out / "classification.txt").write_text(line + "\n", encoding="utf-8")
    print(line)
    return EXIT_OK


COMMANDS = {
    "solve": (cmd_solve, True),
    "scan-subadd": (cmd_scan, True),
    "check": (cmd_check, False),
    "dilate": (cmd_dilate, True),
    "diagnose": (cmd_diagnose, True),
}


def run(argv: list[str]) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"fracgs: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler, strict = COMMANDS[args.command]
    overrides = list(args.set) + ([f"solver.seed={args.seed}"] if args.seed is not None else [])
    try:
        cfg = load_config(args.config, overrides, strict=strict)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return handler(cfg, out)
    except SolverError as exc:
        print(f"fracgs: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"fracgs: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
