"""Command line entry point: ``singularpde generate | solve | bsde | validate | compare``.

Numerical settings come from JSON config files; flags only choose paths and
verbosity. Exit codes: 0 ok, 1 compute failure (or failed validation),
2 Picard non-convergence, 3 norm ceiling exceeded, 64 usage / config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .bsde import backward_problem, feynman_kac_check, martingale_test, simulate_paths, virtual_solution
from .formats import (
    AtomicDirectory,
    _dumps,
    atomic_write_text,
    read_manifest,
    rows_to_csv,
    save_bundle,
    save_solution,
    write_manifest,
    write_run_info,
)
from .mildsolver import (
    NonConvergence,
    NormExplosion,
    ParameterError,
    SolverParams,
    best_radius,
    check_parameters,
    estimate_regime_constant,
    picard_solve,
    select_rho_T,
)
from .oracle import OracleError, OracleInstability, cole_hopf, compare, crank_nicolson
from .roughfield import GENERATOR_ID
from .spectral import PARTITION_ID, besov_norm
from .suites import SUITES, run_suite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NONCONVERGENCE = 2
EXIT_NORM_EXCEEDED = 3
EXIT_USAGE = 64

log = logging.getLogger("singularpde")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path: str, command: str) -> tuple[dict, Path]:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    cfgmod.validate(raw, command)
    return cfgmod.resolve(raw, command, p.parent), p.parent


def _solver_params(cfg: dict, T: float | None = None, rho: float = 1.0) -> SolverParams:
    s = cfg["solver"]
    return SolverParams(float(cfg["alpha"]), float(cfg["beta"]), float(cfg["T"] if T is None else T),
                        int(cfg["n_time_steps"]), float(rho), float(s["picard_tol"]),
                        int(s["max_picard_iters"]), float(s["damping"]), float(s["norm_ceiling"]),
                        int(s["stall_patience"]))


def _gate(alpha: float, beta: float) -> None:
    check = check_parameters(alpha, beta)
    if not check:
        raise UsageError(f"parameters outside the admissible window max(-alpha, alpha-1) < beta < 0: "
                         f"{check.explanation}")


# --- commands --------------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg, _ = _load_config(args.config, "generate")
    grid = cfgmod.build_grid(cfg)
    if cfg["b"]["kind"] == "rough" and "alpha" in cfg:
        _gate(float(cfg["alpha"]), float(cfg["b"]["beta"]))
    b = cfgmod.build_coefficient(cfg["b"], grid, float(cfg["T"]))
    out = cfgmod.output_dir(cfg, "generate", args.output)
    save_bundle(out, b, cfg)
    log.info("wrote %d slice(s) to %s", b.n_slices, out)
    print(out)
    return EXIT_OK


def _regime(u0, b, p: SolverParams):
    """Regime constant and contraction parameters; the latter is None when no rho works."""
    rc = estimate_regime_constant(b, p.alpha, p.beta)
    R0 = max(besov_norm(u0, p.gamma), best_radius(rc.C, p.alpha, p.beta) if rc.C > 0 else 1e-12)
    try:
        return rc, select_rho_T(max(R0, 1e-12), rc.C, p.alpha, p.beta)
    except ParameterError as exc:
        log.warning("no contraction regime: %s", exc)
        return rc, None


def cmd_solve(args) -> int:
    cfg, _ = _load_config(args.config, "solve")
    _gate(float(cfg["alpha"]), float(cfg["beta"]))
    grid = cfgmod.build_grid(cfg)
    T = float(cfg["T"])
    b = cfgmod.build_coefficient(cfg["b"], grid, T)
    u0 = cfgmod.build_field(cfg["u0"], grid)
    nl = cfgmod.build_nonlinearity(cfg["nonlinearity"], grid)
    p = _solver_params(cfg)
    rc, reg = _regime(u0, b, p)
    auto = cfg["solver"]["rho"] == "auto"
    rho = (reg.rho0 if reg is not None else 1.0) if auto else float(cfg["solver"]["rho"])
    p = _solver_params(cfg, rho=rho)
    manifest = {"kind": "solution", "config": cfg, "params": p.to_dict(), "regime_constant": rc.to_dict(),
                "contraction": reg.to_dict() if reg is not None else None, "nonlinearity": nl.spec(), "generator_id": GENERATOR_ID,
                "partition_id": PARTITION_ID}
    out = cfgmod.output_dir(cfg, "solve", args.output)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        try:
            sol = picard_solve(u0, b, nl, p, regime=reg)
        except NonConvergence as exc:
            log.error("%s", exc)
            if exc.partial is not None:
                save_solution(out, exc.partial, {**manifest, "status": "nonconverged", "error": str(exc)})
            return EXIT_NONCONVERGENCE
        except NormExplosion as exc:
            log.error("%s", exc)
            with AtomicDirectory(out) as tmp:
                atomic_write_text(tmp / "iterations.csv", rows_to_csv(
                    [{"iteration": i + 1, "residual": r} for i, r in enumerate(exc.residuals)],
                    ["iteration", "residual"]))
                write_manifest(tmp, {**manifest, "status": "norm_exceeded", "error": str(exc),
                                     "t": exc.t, "norm": exc.norm})
                write_run_info(tmp)
            return EXIT_NORM_EXCEEDED
    for w in caught:
        log.warning("%s", w.message)
    save_solution(out, sol, {**manifest, "status": "converged"})
    log.info("converged in %d iterations; wrote %s", sol.iterations, out)
    print(out)
    return EXIT_OK


def cmd_bsde(args) -> int:
    cfg, _ = _load_config(args.config, "bsde")
    _gate(float(cfg["alpha"]), float(cfg["beta"]))
    grid = cfgmod.build_grid(cfg)
    if grid.d != 1:
        raise UsageError("the BSDE command needs a one-dimensional grid")
    T, t0 = float(cfg["T"]), float(cfg["t"])
    M = int(cfg["n_time_steps"])
    steps = (T - t0) / (T / M)
    if not t0 < T or abs(steps - round(steps)) > 1e-9:
        raise UsageError(f"start time t={t0} must be a node of the time grid T*n/{M} below T")
    b = cfgmod.build_coefficient(cfg["b"], grid, T)
    phi = cfgmod.build_field(cfg["phi"], grid)
    nl = cfgmod.build_nonlinearity(cfg["nonlinearity"], grid)
    p = _solver_params(cfg, rho=1.0 if cfg["solver"]["rho"] == "auto" else float(cfg["solver"]["rho"]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        try:
            prob = backward_problem(phi, b, nl, p)
        except NonConvergence as exc:
            log.error("%s", exc)
            return EXIT_NONCONVERGENCE
        except NormExplosion as exc:
            log.error("%s", exc)
            return EXIT_NORM_EXCEEDED
        paths = simulate_paths(t0, float(cfg["x"]), T, int(cfg["paths"]), int(round(steps)), int(cfg["seed"]))
        sample = virtual_solution(prob, paths)
    for w in caught:
        log.warning("%s", w.message)
    mt = martingale_test(sample, float(cfg["k"]))
    fk = feynman_kac_check(prob, sample)
    var_ratio, var_ok = paths.variance_check()
    rows = sample.summary_rows()
    for row, z, ok in zip(rows, list(mt.z_scores) + [0.0], list(mt.increment_pass) + [True]):
        row["martingale_z"] = float(z)
        row["martingale_pass"] = bool(ok)
    report = {"feynman_kac": {"Y_start": fk.Y_start, "u_start": fk.u_start, "error": fk.error,
                              "tolerance": fk.tolerance, "passed": fk.passed, "spread": fk.spread},
              "martingale": {"k": mt.k, "passed": mt.passed, "residual_passed": mt.residual_passed},
              "paths": {"n_paths": paths.n_paths, "n_steps": paths.n_steps, "wrapped_paths": sample.wrapped_paths,
                        "variance_ok": var_ok, "max_variance_deviation": float(np.max(np.abs(var_ratio - 1)))},
              "small_data": {"delta": prob.delta, "ok": prob.small_data_ok, "notes": list(prob.notes)},
              "solver": {"iterations": prob.solution.iterations,
                         "final_residual": prob.solution.residuals[-1]}}
    out = cfgmod.output_dir(cfg, "bsde", args.output)
    with AtomicDirectory(out) as tmp:
        atomic_write_text(tmp / "summary.csv", rows_to_csv(rows))
        atomic_write_text(tmp / "martingale.csv", rows_to_csv(mt.rows()))
        atomic_write_text(tmp / "report.json", _dumps(report))
        if cfg["raw_paths"]:
            for name, arr in (("paths.npy", paths.positions), ("Y.npy", sample.Y), ("Z.npy", sample.Z)):
                with open(tmp / name, "wb") as fh:
                    np.save(fh, arr)
        write_manifest(tmp, {"kind": "bsde", "config": cfg, "params": p.to_dict(), "nonlinearity": nl.spec(),
                             "generator_id": GENERATOR_ID, "partition_id": PARTITION_ID})
        write_run_info(tmp)
    print(out)
    return EXIT_OK if (mt.passed and fk.passed) else EXIT_FAILURE


def cmd_validate(args) -> int:
    res = run_suite(args.suite)
    for c in res.checks:
        print(c.line())
    print(f"{'PASS' if res.passed else 'FAIL'} suite {res.name} ({res.elapsed:.1f}s)")
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out, rows_to_csv(res.rows(), ["suite", "check", "passed", "value", "threshold", "detail"]))
    return EXIT_OK if res.passed else EXIT_FAILURE


def cmd_compare(args) -> int:
    src = Path(args.solution)
    try:
        man = read_manifest(src)
    except (ValueError, FileNotFoundError) as exc:
        raise UsageError(str(exc)) from None
    if man.get("kind") != "solution":
        raise UsageError(f"{src} is not a solution directory")
    from .formats import load_solution_fields
    from .mildsolver import TimeField

    cfg = man["config"]
    grid = cfgmod.build_grid(cfg)
    times, fields = load_solution_fields(src)
    u = TimeField.from_fields(times, fields)
    u0 = cfgmod.build_field(cfg["u0"], grid)
    try:
        if args.oracle == "cole_hopf":
            nl = cfg["nonlinearity"]
            b = cfg["b"]
            if not (nl in ("quadratic", {"name": "quadratic"}) and b.get("kind") == "constant" and b["value"] == 1.0):
                raise UsageError("the Cole-Hopf oracle applies to quadratic F with b = 1 only")
            oracle = cole_hopf(u0, times)
        else:
            b = cfgmod.build_coefficient(cfg["b"], grid, float(cfg["T"]))
            nl = cfgmod.build_nonlinearity(cfg["nonlinearity"], grid)
            oracle = crank_nicolson(u0, b, nl, times, substeps=args.substeps)
    except (OracleError, OracleInstability) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    report = compare(u, oracle)
    text = report.to_csv()
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out, text)
        print(out)
    else:
        sys.stdout.write(text)
    log.info("max sup error %.3e", report.max_sup)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singularpde", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, help_ in (("generate", cmd_generate, "write a seeded coefficient bundle"),
                            ("solve", cmd_solve, "compute a mild solution by Picard iteration"),
                            ("bsde", cmd_bsde, "simulate the virtual BSDE solution")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("-o", "--output", help=f"output directory (default ${cfgmod.OUTPUT_ENV}/<config output>)")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("validate", help="run a validation suite")
    sp.add_argument("suite", choices=sorted(SUITES))
    sp.add_argument("-o", "--output", help="write the check table as CSV")
    sp.set_defaults(func=cmd_validate)
    sp = sub.add_parser("compare", help="compare a solution directory with an oracle")
    sp.add_argument("solution", help="solution directory written by 'solve'")
    sp.add_argument("--oracle", choices=["cole_hopf", "crank_nicolson"], default="crank_nicolson")
    sp.add_argument("--substeps", type=int, default=4, help="finite-difference steps per solver step")
    sp.add_argument("-o", "--output", help="CSV file for the error report (default stdout)")
    sp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, cfgmod.ConfigError, ParameterError) as exc:
        print(f"singularpde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid numerical inputs discovered while building the run (e.g. beta out of range)
        print(f"singularpde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, OSError) as exc:
        print(f"singularpde: compute failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
