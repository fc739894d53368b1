"""Herglotz problem definition, trajectory data model, admissibility.

A Herglotz problem asks for trajectories ``x`` on ``[a, b]`` whose
functional value ``z`` is defined through the differential equation
``z' = L(t, x, x', z)`` with ``x(a) = alpha`` and ``z(a) = gamma``; the
target is ``z(b)``.  When ``L`` does not mention ``z`` this reduces to
the classical variational problem with the integral functional.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MeshError, ToolkitError
from .expr import Const, Expression, compiled, differentiate, free_variables, parse
from .reports import ResidualReport

__all__ = [
    "ProblemError",
    "HerglotzProblem",
    "OCForm",
    "Trajectory",
    "Multipliers",
    "LagrangianPartials",
    "make_problem",
    "partials",
    "is_classical",
    "admissibility_residual",
    "admissibility_tolerance",
    "is_admissible",
    "breakpoint_window",
]


class ProblemError(ToolkitError):
    pass


def _allowed_names(n: int) -> frozenset[str]:
    names = {"t", "z"}
    for i in range(1, n + 1):
        names.add(f"x{i}")
        names.add(f"dx{i}")
    return frozenset(names)


@dataclass(frozen=True)
class HerglotzProblem:
    """State dimension ``n``, interval ``[a, b]``, Lagrangian, initial data."""

    n: int
    a: float
    b: float
    lagrangian: Expression
    alpha: tuple[float, ...]
    gamma: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ProblemError(f"state dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "gamma", float(self.gamma))
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.a >= self.b:
            raise ProblemError(f"interval endpoints must satisfy a < b, got [{self.a}, {self.b}]")
        if len(self.alpha) != self.n:
            raise ProblemError(f"alpha has length {len(self.alpha)}, expected {self.n}")
        stray = free_variables(self.lagrangian) - _allowed_names(self.n)
        if stray:
            raise ProblemError(
                f"Lagrangian uses {', '.join(sorted(stray))} outside the alphabet for dimension {self.n}"
            )

    @property
    def alpha_array(self) -> np.ndarray:
        return np.array(self.alpha, dtype=float)


def make_problem(n, a, b, lagrangian, alpha, gamma) -> HerglotzProblem:
    """Build and validate a problem; ``lagrangian`` may be source text."""
    if isinstance(lagrangian, str):
        lagrangian = parse(lagrangian)
    return HerglotzProblem(n, a, b, lagrangian, tuple(alpha), gamma)


def is_classical(p: HerglotzProblem) -> bool:
    """True when ``z`` does not occur in the Lagrangian tree.

    The test is structural, not semantic: a Lagrangian written as
    ``z - z`` counts as z-dependent even though it evaluates to zero.
    """
    return "z" not in free_variables(p.lagrangian)


@dataclass(frozen=True)
class OCForm:
    """Control-system view: state ``(x, z)``, control ``u = x'``.

    Dynamics are ``x' = u`` and ``z' = L(t, x, u, z)``, the payoff is the
    final ``z``, and the running cost is identically zero.  The control
    occupies the ``dx1..dxn`` slots of the expression alphabet.  Derived
    deterministically from the problem; carries no data of its own.
    """

    problem: HerglotzProblem

    @property
    def state_dim(self) -> int:
        return self.problem.n + 1

    @property
    def control_dim(self) -> int:
        return self.problem.n

    def dynamics(self, t: float, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        u = np.asarray(u, dtype=float)
        if state.shape != (self.state_dim,) or u.shape != (self.control_dim,):
            raise ProblemError("state/control dimension mismatch")
        tab = partials(self.problem)
        ldot = tab.value(t, state[:-1], u, state[-1])
        return np.concatenate([u, [ldot]])

    def payoff(self, state: np.ndarray) -> float:
        return float(np.asarray(state, dtype=float)[-1])

    def running_cost(self, t: float, state: np.ndarray, u: np.ndarray) -> float:
        return 0.0

    def dynamics_z_partial(self) -> tuple[Expression, ...]:
        """Symbolic z-partial of each dynamics component."""
        n = self.problem.n
        return tuple(Const(0.0) for _ in range(n)) + (differentiate(self.problem.lagrangian, "z"),)


@dataclass(frozen=True)
class Trajectory:
    """Sampled pair ``(x, z)`` with velocities on a strictly increasing mesh.

    ``breakpoints`` lists interior sample indices where the velocity may
    jump (piecewise-C1 trajectories); residual evaluators skip a one-
    interval window on each side of every breakpoint.
    """

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    z: np.ndarray
    breakpoints: tuple[int, ...] = ()

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        x = np.atleast_2d(np.array(self.x, dtype=float))
        v = np.atleast_2d(np.array(self.v, dtype=float))
        z = np.array(self.z, dtype=float)
        m = times.shape[0]
        if x.shape[0] != m and x.shape[1] == m:
            x = x.T
        if v.shape[0] != m and v.shape[1] == m:
            v = v.T
        if times.ndim != 1 or m < 2:
            raise MeshError("mesh needs at least two samples")
        if np.any(np.diff(times) <= 0.0):
            raise MeshError("mesh times must be strictly increasing")
        if x.shape != v.shape or x.shape[0] != m or z.shape != (m,):
            raise MeshError("sample arrays do not match the mesh")
        bps = tuple(sorted(int(i) for i in self.breakpoints))
        if any(i <= 0 or i >= m - 1 for i in bps):
            raise MeshError("breakpoints must be interior sample indices")
        for arr in (times, x, v, z):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "breakpoints", bps)

    @property
    def samples(self) -> int:
        return self.times.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def spacing(self) -> float:
        """Uniform mesh width; raises :class:`MeshError` if non-uniform."""
        steps = np.diff(self.times)
        h = float(steps[0])
        span = self.times[-1] - self.times[0]
        if np.max(np.abs(steps - h)) > 1e-9 * span:
            raise MeshError("mesh is not uniform")
        return h


@dataclass(frozen=True)
class Multipliers:
    """Costate samples on a trajectory mesh.

    ``psi_z`` is an exponential, hence positive, and ends at exactly 1;
    ``psi_x`` is minus ``psi_z`` times the velocity gradient of ``L``.
    """

    psi_x: np.ndarray
    psi_z: np.ndarray

    def __post_init__(self):
        psi_x = np.atleast_2d(np.array(self.psi_x, dtype=float))
        psi_z = np.array(self.psi_z, dtype=float)
        if psi_x.shape[0] != psi_z.shape[0] and psi_x.shape[1] == psi_z.shape[0]:
            psi_x = psi_x.T
        if psi_z.ndim != 1 or psi_x.shape[0] != psi_z.shape[0]:
            raise ProblemError("multiplier arrays do not match")
        if np.any(psi_z <= 0.0):
            raise ProblemError("psi_z must be positive everywhere")
        if abs(psi_z[-1] - 1.0) > 1e-12:
            raise ProblemError(f"psi_z must end at 1, got {psi_z[-1]!r}")
        for arr in (psi_x, psi_z):
            arr.flags.writeable = False
        object.__setattr__(self, "psi_x", psi_x)
        object.__setattr__(self, "psi_z", psi_z)


class LagrangianPartials:
    """Symbolic partials of a Lagrangian, compiled for fast evaluation.

    Holds first-order partials in ``t``, ``x``, ``dx``, ``z`` and the
    second-order partials against the velocities that the chain-rule
    expansion of ``d/dt (dL/dx')`` needs.
    """

    def __init__(self, problem: HerglotzProblem):
        n = problem.n
        L = problem.lagrangian
        xs = [f"x{i + 1}" for i in range(n)]
        vs = [f"dx{i + 1}" for i in range(n)]
        self.problem = problem
        self.n = n
        self.L = L
        self.Lt = differentiate(L, "t")
        self.Lz = differentiate(L, "z")
        self.Lx = tuple(differentiate(L, name) for name in xs)
        self.Lv = tuple(differentiate(L, name) for name in vs)
        self.Lvv = tuple(tuple(differentiate(lv, name) for name in vs) for lv in self.Lv)
        self.Ltv = tuple(differentiate(lv, "t") for lv in self.Lv)
        self.Lxv = tuple(tuple(differentiate(lv, name) for name in xs) for lv in self.Lv)
        self.Lzv = tuple(differentiate(lv, "z") for lv in self.Lv)
        self._names = ["t", "z", *xs, *vs]
        self.L_c = compiled(L)
        self.Lt_c = compiled(self.Lt)
        self.Lz_c = compiled(self.Lz)
        self.Lx_c = tuple(compiled(e) for e in self.Lx)
        self.Lv_c = tuple(compiled(e) for e in self.Lv)
        self.Lvv_c = tuple(tuple(compiled(e) for e in row) for row in self.Lvv)
        self.Ltv_c = tuple(compiled(e) for e in self.Ltv)
        self.Lxv_c = tuple(tuple(compiled(e) for e in row) for row in self.Lxv)
        self.Lzv_c = tuple(compiled(e) for e in self.Lzv)

    def env(self, t: float, x, v, z: float) -> dict:
        names = self._names
        out = {"t": t, "z": z}
        n = self.n
        for i in range(n):
            out[names[2 + i]] = x[i]
            out[names[2 + n + i]] = v[i]
        return out

    def value(self, t, x, v, z) -> float:
        return self.L_c(self.env(t, x, v, z))

    def grad_x(self, t, x, v, z) -> np.ndarray:
        env = self.env(t, x, v, z)
        return np.array([f(env) for f in self.Lx_c])

    def grad_v(self, t, x, v, z) -> np.ndarray:
        env = self.env(t, x, v, z)
        return np.array([f(env) for f in self.Lv_c])

    def dz(self, t, x, v, z) -> float:
        return self.Lz_c(self.env(t, x, v, z))

    def dt(self, t, x, v, z) -> float:
        return self.Lt_c(self.env(t, x, v, z))

    def velocity_hessian(self, t, x, v, z) -> np.ndarray:
        env = self.env(t, x, v, z)
        return np.array([[f(env) for f in row] for row in self.Lvv_c])


@lru_cache(maxsize=None)
def partials(p: HerglotzProblem) -> LagrangianPartials:
    return LagrangianPartials(p)


def breakpoint_window(traj: Trajectory) -> frozenset[int]:
    """Sample indices within one mesh interval of a breakpoint."""
    skipped = set()
    for b in traj.breakpoints:
        skipped.update(i for i in (b - 1, b, b + 1) if 0 <= i < traj.samples)
    return frozenset(skipped)


def _lagrangian_samples(p: HerglotzProblem, traj: Trajectory) -> np.ndarray:
    tab = partials(p)
    out = np.empty(traj.samples)
    for k in range(traj.samples):
        out[k] = tab.L_c(tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k]))
    return out


def admissibility_residual(p: HerglotzProblem, traj: Trajectory) -> ResidualReport:
    """Defect of the z-dynamics per Simpson panel, as a rate per unit time.

    The mesh intervals are paired into Simpson panels (with a cubic rule
    on the final interval when the interval count is odd) and each panel
    defect ``z(end) - z(start) - integral of L`` is divided by the panel
    width.  Endpoint condition defects ``|x(a) - alpha|`` and
    ``|z(a) - gamma|`` are reported in ``extras``.  Panels touching a
    breakpoint window are excluded from the norms.
    """
    if abs(traj.times[0] - p.a) > 0.0 or abs(traj.times[-1] - p.b) > 0.0:
        raise MeshError(f"trajectory mesh must cover [{p.a}, {p.b}] exactly")
    m = traj.samples
    if m < 3:
        raise MeshError("admissibility needs at least three samples")
    h = traj.spacing()
    L = _lagrangian_samples(p, traj)
    z = traj.z
    window = breakpoint_window(traj)

    times = []
    defects = []
    panel_samples = []
    intervals = m - 1
    pairs = intervals // 2
    for j in range(pairs):
        k = 2 * j
        integral = h * (L[k] + 4.0 * L[k + 1] + L[k + 2]) / 3.0
        times.append(traj.times[k + 1])
        defects.append((z[k + 2] - z[k] - integral) / (2.0 * h))
        panel_samples.append((k, k + 1, k + 2))
    if intervals % 2 == 1:
        # Cubic rule over the final interval using the last four samples.
        integral = h * (L[m - 4] - 5.0 * L[m - 3] + 19.0 * L[m - 2] + 9.0 * L[m - 1]) / 24.0
        times.append(0.5 * (traj.times[m - 2] + traj.times[m - 1]))
        defects.append((z[m - 1] - z[m - 2] - integral) / h)
        panel_samples.append((m - 4, m - 3, m - 2, m - 1))

    excluded = tuple(
        i for i, touched in enumerate(panel_samples) if any(k in window for k in touched)
    )
    extras = {
        "x0_defect": float(np.max(np.abs(traj.x[0] - p.alpha_array))),
        "z0_defect": float(abs(z[0] - p.gamma)),
    }
    return ResidualReport(
        "admissibility",
        np.array(times),
        np.array(defects),
        excluded=excluded,
        extras=extras,
    )


def admissibility_tolerance(p: HerglotzProblem, traj: Trajectory) -> float:
    """Default acceptance threshold, scaled so large-|z| problems stay testable."""
    return 1e-8 * (1.0 + abs(p.gamma) + float(np.max(np.abs(traj.z))))


def is_admissible(p: HerglotzProblem, traj: Trajectory, tol: float | None = None) -> bool:
    report = admissibility_residual(p, traj)
    if tol is None:
        tol = admissibility_tolerance(p, traj)
    worst = max(report.max_abs, report.extras["x0_defect"], report.extras["z0_defect"])
    return worst <= tol
