"""Problem files (JSON) and trajectory files (CSV).

Problem file schema::

    {
      "n": 1,
      "interval": [0.0, 1.0],
      "lagrangian": "dx1^2/2 - x1^2/2 - 0.1*z",
      "alpha": [1.0],
      "gamma": 0.0,
      "families": [
        {"name": "time-shift", "T": "t + s", "X": ["x1"], "Z": "z",
         "invariant": true}
      ]
    }

``families`` is optional; each family's ``T``, ``X`` (one entry per
state component) and ``Z`` are expressions over ``t, x1..xn, dx1..dxn,
z, s``.  The optional ``invariant`` flag (default true) records whether
the family is expected to pass the invariance check.

Trajectory CSV files carry the header ``t,x1..xn,dx1..dxn,z``; extra
columns (for example costate columns written by ``solve``) are ignored
on input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ToolkitError
from .expr import ExprError, parse
from .noether import TransformationFamily
from .problem import HerglotzProblem, Multipliers, ProblemError, Trajectory, make_problem

__all__ = [
    "FileFormatError",
    "FamilyEntry",
    "LoadedProblem",
    "load_problem_data",
    "load_problem_file",
    "write_trajectory_csv",
    "read_trajectory_csv",
]


class FileFormatError(ToolkitError):
    pass


@dataclass(frozen=True)
class FamilyEntry:
    family: TransformationFamily
    expected_invariant: bool


@dataclass(frozen=True)
class LoadedProblem:
    problem: HerglotzProblem
    families: tuple[FamilyEntry, ...]


def _expr(data, what: str):
    if not isinstance(data, str):
        raise FileFormatError(f"{what} must be an expression string, got {data!r}")
    try:
        return parse(data)
    except ExprError as exc:
        raise FileFormatError(f"{what}: {exc}") from None


def load_problem_data(data: dict) -> LoadedProblem:
    if not isinstance(data, dict):
        raise FileFormatError("problem file must contain a JSON object")
    for key in ("n", "interval", "lagrangian", "alpha", "gamma"):
        if key not in data:
            raise FileFormatError(f"missing required key {key!r}")
    interval = data["interval"]
    if not (isinstance(interval, (list, tuple)) and len(interval) == 2):
        raise FileFormatError("interval must be a two-element array [a, b]")
    n = data["n"]
    if not isinstance(n, int):
        raise FileFormatError(f"n must be an integer, got {n!r}")
    alpha = data["alpha"]
    if not isinstance(alpha, (list, tuple)):
        raise FileFormatError("alpha must be an array")
    try:
        problem = make_problem(
            n, interval[0], interval[1], _expr(data["lagrangian"], "lagrangian"),
            alpha, data["gamma"],
        )
    except (ProblemError, TypeError, ValueError) as exc:
        raise FileFormatError(str(exc)) from None

    families = []
    for idx, raw in enumerate(data.get("families", [])):
        if not isinstance(raw, dict):
            raise FileFormatError(f"families[{idx}] must be an object")
        for key in ("name", "T", "X", "Z"):
            if key not in raw:
                raise FileFormatError(f"families[{idx}] is missing key {key!r}")
        xmaps = raw["X"]
        if not isinstance(xmaps, (list, tuple)) or len(xmaps) != n:
            raise FileFormatError(
                f"families[{idx}].X must list exactly {n} expressions"
            )
        label = raw["name"]
        fam = TransformationFamily(
            name=label,
            time_map=_expr(raw["T"], f"families[{idx}].T"),
            space_maps=tuple(_expr(e, f"families[{idx}].X[{i}]") for i, e in enumerate(xmaps)),
            z_map=_expr(raw["Z"], f"families[{idx}].Z"),
        )
        expected = raw.get("invariant", True)
        if not isinstance(expected, bool):
            raise FileFormatError(f"families[{idx}].invariant must be a boolean")
        families.append(FamilyEntry(fam, expected))
    return LoadedProblem(problem, tuple(families))


def load_problem_file(path) -> LoadedProblem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
    return load_problem_data(data)


def write_trajectory_csv(path, traj: Trajectory, mult: Multipliers | None = None) -> None:
    """Write ``t, x_i, dx_i, z`` rows, plus costate columns when given.

    Floats are rendered as shortest round-trip decimals, so identical
    inputs produce byte-identical files.
    """
    n = traj.n
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"dx{i + 1}" for i in range(n)] + ["z"]
    if mult is not None:
        header += ["psi_z"] + [f"psi_x{i + 1}" for i in range(n)]
    lines = [",".join(header)]
    for k in range(traj.samples):
        row = [traj.times[k], *traj.x[k], *traj.v[k], traj.z[k]]
        if mult is not None:
            row += [mult.psi_z[k], *mult.psi_x[k]]
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_X_COLUMN = re.compile(r"x([1-9][0-9]*)\Z")


def read_trajectory_csv(path) -> Trajectory:
    """Load a trajectory; the state dimension is inferred from the header."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from None
    rows = [line for line in lines if line.strip()]
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need a header and at least one sample row")
    header = [c.strip() for c in rows[0].split(",")]
    indices = sorted(int(m.group(1)) for c in header if (m := _X_COLUMN.fullmatch(c)))
    n = len(indices)
    if n == 0 or indices != list(range(1, n + 1)):
        raise FileFormatError(f"{path}: header must carry columns x1..xn")
    wanted = ["t"] + [f"x{i}" for i in indices] + [f"dx{i}" for i in indices] + ["z"]
    try:
        columns = {name: header.index(name) for name in wanted}
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None
    table = np.empty((len(rows) - 1, len(wanted)))
    for r, line in enumerate(rows[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise FileFormatError(f"{path}: row {r + 2} has {len(cells)} cells, expected {len(header)}")
        try:
            for c, name in enumerate(wanted):
                table[r, c] = float(cells[columns[name]])
        except ValueError as exc:
            raise FileFormatError(f"{path}: row {r + 2}: {exc}") from None
    return Trajectory(
        times=table[:, 0],
        x=table[:, 1 : 1 + n],
        v=table[:, 1 + n : 1 + 2 * n],
        z=table[:, 1 + 2 * n],
    )
