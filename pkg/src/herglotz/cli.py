"""Batch front-end: solve problems, check conditions, verify symmetries.

Exit codes partition the outcomes:

* 0  success
* 1  input error (unreadable file, schema violation, invalid problem)
* 2  solver non-convergence (Newton failure or breakdown en route)
* 3  at least one necessary condition failed its tolerance
* 4  a family declared invariant failed the invariance or conservation check

Artifacts are deterministic: fixed meshes, no randomness, stable field
order, and shortest round-trip float formatting, so repeated runs yield
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (
    classical_el_residual,
    dubois_reymond_residual,
    el_residual,
    pmp_residuals,
    transversality_residual,
)
from .errors import ToolkitError
from .extremal import ShootingError, ShootingResult, shoot
from .files import LoadedProblem, load_problem_file, read_trajectory_csv, write_trajectory_csv
from .integrate import IntegrationError, compute_psi_z
from .noether import (
    NoetherError,
    check_invariance,
    conserved_quantity,
    constancy,
    generators,
    georgieva_quantity,
    xi_constancy_check,
)
from .problem import is_classical
from .reports import ResidualReport

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_CONDITION_FAILED = 3
EXIT_INVARIANCE_FAILED = 4

CONDITION_TOL = 1e-5


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _parse_guess(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.zeros(n)
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ToolkitError(f"--guess must be comma-separated numbers, got {text!r}") from None
    if len(values) != n:
        raise ToolkitError(f"--guess needs {n} component(s), got {len(values)}")
    return np.array(values)


def _flags_dict(args: argparse.Namespace, names: tuple[str, ...]) -> dict:
    return {name: getattr(args, name) for name in names}


def _run_shoot(loaded: LoadedProblem, args: argparse.Namespace) -> ShootingResult:
    guess = _parse_guess(args.guess, loaded.problem.n)
    return shoot(loaded.problem, guess, steps=args.steps, tol=args.solve_tol)


def _solution_doc(result: ShootingResult, args: argparse.Namespace) -> dict:
    return {
        "version": __version__,
        "flags": _flags_dict(args, ("steps", "solve_tol", "guess")),
        "converged": result.converged,
        "iterations": result.iterations,
        "v_star": [float(v) for v in result.v_star],
        "z_b": float(result.trajectory.z[-1]),
        "transversality_norm": result.transversality_norm,
    }


def cmd_solve(args: argparse.Namespace) -> int:
    loaded = load_problem_file(args.problem)
    try:
        result = _run_shoot(loaded, args)
    except (ShootingError, IntegrationError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    if not result.converged:
        print(
            f"no convergence after {result.iterations} Newton iterations "
            f"(|residual|={result.transversality_norm:.3e})",
            file=sys.stderr,
        )
        for i, norm in enumerate(result.residual_history):
            print(f"  iteration {i}: |residual| = {norm:.6e}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", result.trajectory, result.multipliers)
    doc = _solution_doc(result, args)
    _write_json(out / "solution.json", doc)
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        v = ", ".join(repr(float(x)) for x in result.v_star)
        print(f"converged in {result.iterations} iteration(s): v* = [{v}], z(b) = {doc['z_b']!r}")
        print(f"transversality norm {result.transversality_norm:.3e}; artifacts in {out}")
    return EXIT_OK


def _trajectory_for(loaded: LoadedProblem, args: argparse.Namespace):
    """Trajectory plus costates, either from a CSV file or a fresh solve."""
    if args.traj is not None:
        traj = read_trajectory_csv(args.traj)
        if traj.n != loaded.problem.n:
            raise ToolkitError(
                f"trajectory dimension {traj.n} does not match problem dimension {loaded.problem.n}"
            )
        return traj, compute_psi_z(loaded.problem, traj)
    result = _run_shoot(loaded, args)
    if not result.converged:
        raise ShootingError(
            f"solve did not converge after {result.iterations} iterations "
            f"(|residual|={result.transversality_norm:.3e})"
        )
    return result.trajectory, result.multipliers


def cmd_check(args: argparse.Namespace) -> int:
    loaded = load_problem_file(args.problem)
    p = loaded.problem
    try:
        traj, mult = _trajectory_for(loaded, args)
    except (ShootingError, IntegrationError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    reports: list[ResidualReport] = [el_residual(p, traj)]
    if is_classical(p):
        reports.append(classical_el_residual(p, traj))
    reports.append(
        ResidualReport(
            "transversality",
            traj.times[-1:],
            np.array([transversality_residual(p, traj)]),
        )
    )
    reports.append(dubois_reymond_residual(p, traj, mult))
    reports.extend(pmp_residuals(p, traj, mult))

    entries = []
    all_pass = True
    for report in reports:
        ok = report.max_abs <= args.tol
        all_pass = all_pass and ok
        entries.append(
            {
                "name": report.name,
                "max_abs": report.max_abs,
                "l2": report.l2,
                "pass": ok,
            }
        )
    doc = {
        "version": __version__,
        "flags": _flags_dict(args, ("steps", "tol", "solve_tol", "guess", "traj")),
        "conditions": entries,
        "all_pass": all_pass,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "checks.json", doc)
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for entry in entries:
            verdict = "pass" if entry["pass"] else "FAIL"
            print(f"{entry['name']:<16} max {entry['max_abs']:.3e}  {verdict}")
    return EXIT_OK if all_pass else EXIT_CONDITION_FAILED


def _family_doc(loaded: LoadedProblem, entry, traj, mult, args) -> dict:
    p = loaded.problem
    fam = entry.family
    doc: dict = {"name": fam.name, "expected_invariant": entry.expected_invariant}
    try:
        report = check_invariance(p, fam, traj)
        doc.update(report.to_json_dict())
        doc["passed"] = report.invariant
        if not report.invariant:
            return doc
        gen = generators(fam, traj)
        quantity = conserved_quantity(p, traj, mult, gen)
        verdict = constancy(quantity, args.tol)
        doc["quantity"] = {
            "mean": verdict.mean,
            "deviation": verdict.deviation,
            "pass": verdict.passed,
        }
        a, b = float(traj.times[0]), float(traj.times[-1])
        doc["xi_constancy_variation"] = xi_constancy_check(gen, float(traj.z[-1]), a, b)
        if float(np.max(np.abs(gen.Z))) <= 1e-12:
            weighted = georgieva_quantity(p, traj, gen)
            scale = quantity / weighted if np.all(weighted != 0.0) else None
            doc["georgieva"] = {
                "max_abs_weighted": float(np.max(np.abs(weighted))),
                "ratio_mean": None if scale is None else float(np.mean(scale)),
                "ratio_deviation": None
                if scale is None
                else float(np.max(np.abs(scale - np.mean(scale)))),
            }
        doc["passed"] = report.invariant and verdict.passed
    except NoetherError as exc:
        doc["error"] = str(exc)
        doc["passed"] = False
    return doc


def cmd_noether(args: argparse.Namespace) -> int:
    loaded = load_problem_file(args.problem)
    if not loaded.families:
        raise ToolkitError("problem file declares no transformation families")
    if args.family is not None:
        selected = [e for e in loaded.families if e.family.name == args.family]
        if not selected:
            known = ", ".join(e.family.name for e in loaded.families)
            raise ToolkitError(f"no family named {args.family!r} (known: {known})")
    else:
        selected = list(loaded.families)

    try:
        traj, mult = _trajectory_for(loaded, args)
    except (ShootingError, IntegrationError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    family_docs = [_family_doc(loaded, entry, traj, mult, args) for entry in selected]
    failed_expected = [
        doc["name"]
        for doc in family_docs
        if doc["expected_invariant"] and not doc.get("passed", False)
    ]
    doc = {
        "version": __version__,
        "flags": _flags_dict(args, ("steps", "tol", "solve_tol", "guess", "traj", "family")),
        "families": family_docs,
        "all_expected_pass": not failed_expected,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "noether.json", doc)
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for fdoc in family_docs:
            status = "invariant" if fdoc.get("invariant") else "not invariant"
            extra = ""
            if "quantity" in fdoc:
                q = fdoc["quantity"]
                extra = f", quantity mean {q['mean']!r} (deviation {q['deviation']:.3e})"
            if "error" in fdoc:
                extra = f", error: {fdoc['error']}"
            print(f"{fdoc['name']:<20} {status}{extra}")
    return EXIT_OK if not failed_expected else EXIT_INVARIANCE_FAILED


def _add_common(sub: argparse.ArgumentParser, with_traj: bool) -> None:
    sub.add_argument("problem", help="problem file (JSON)")
    sub.add_argument("--steps", type=int, default=1000, help="mesh steps (default 1000)")
    sub.add_argument(
        "--solve-tol",
        dest="solve_tol",
        type=float,
        default=1e-10,
        help="Newton tolerance on the terminal condition (default 1e-10)",
    )
    sub.add_argument("--guess", default=None, help="initial velocity guess v1,...,vn (default zeros)")
    sub.add_argument("--out", default=".", help="directory for artifacts (default current)")
    sub.add_argument("--json", action="store_true", help="mirror the report as JSON on stdout")
    if with_traj:
        sub.add_argument(
            "--traj",
            default=None,
            help="trajectory CSV to verify instead of solving (header t,x1..,dx1..,z)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herglotz",
        description="Solve Herglotz-type variational problems and certify optimality conditions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="shoot for an extremal and write artifacts")
    _add_common(solve, with_traj=False)
    solve.set_defaults(handler=cmd_solve)

    check = commands.add_parser("check", help="evaluate every necessary condition")
    _add_common(check, with_traj=True)
    check.add_argument(
        "--tol", type=float, default=CONDITION_TOL,
        help=f"pass/fail tolerance per condition (default {CONDITION_TOL})",
    )
    check.set_defaults(handler=cmd_check)

    noether = commands.add_parser("noether", help="check invariance and conserved quantities")
    _add_common(noether, with_traj=True)
    noether.add_argument("--family", default=None, help="check a single named family")
    noether.add_argument("--all", action="store_true", help="check every declared family (default)")
    noether.add_argument(
        "--tol", type=float, default=CONDITION_TOL,
        help=f"constancy tolerance for conserved quantities (default {CONDITION_TOL})",
    )
    noether.set_defaults(handler=cmd_noether)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
