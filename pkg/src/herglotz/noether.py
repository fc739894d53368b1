"""Invariance of a Herglotz problem under one-parameter transformations
and the associated conserved quantities.

A transformation family deforms time, state, and functional value
through expressions in ``(t, x, x', z, s)`` that reduce to the identity
at ``s = 0``.  Its generators are the ``s``-derivatives at 0, sampled
along a trajectory.  For invariant problems the quantity

    ``psi_z * (dL/dx' . X - Z + (L - dL/dx' . x') * T)``

is constant along every extremal; with no transformation of ``z`` the
classical weighted form using ``lambda(t) = exp(-integral of dL/dz from
a to t)`` is conserved as well, and the two differ by the constant
factor ``exp(integral of dL/dz over [a, b])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ToolkitError
from .expr import Expression, compiled, differentiate, free_variables, parse
from .integrate import cumulative_integral, sampled_derivative
from .problem import HerglotzProblem, Multipliers, Trajectory, partials

__all__ = [
    "NoetherError",
    "FamilyError",
    "XiUndefinedError",
    "TimeMapError",
    "TransformationFamily",
    "Generators",
    "InvarianceReport",
    "ConstancyResult",
    "make_family",
    "generators",
    "check_invariance",
    "conserved_quantity",
    "georgieva_quantity",
    "xi_constancy_check",
    "constancy",
]

DEFAULT_S_VALUES = (1e-2, -1e-2, 1e-3, -1e-3)
DEFAULT_FLOOR = 1e-5
ORDER_THRESHOLD = 1.5
RATE_TOLERANCE = 1e-8
IDENTITY_TOLERANCE = 1e-12


class NoetherError(ToolkitError):
    pass


class FamilyError(NoetherError):
    """The family is malformed or is not the identity at ``s = 0``."""


class XiUndefinedError(NoetherError):
    """The time generator has a non-constant rate, so no constant drift
    can satisfy the time-invariance identity."""


class TimeMapError(NoetherError):
    """The deformed time is not increasing, so the reparameterization is
    not invertible at this ``s``."""


@dataclass(frozen=True)
class TransformationFamily:
    """Maps ``(time_map, space_maps, z_map)`` over ``(t, x, x', z, s)``."""

    name: str
    time_map: Expression
    space_maps: tuple[Expression, ...]
    z_map: Expression

    def __post_init__(self):
        if len(self.space_maps) < 1:
            raise FamilyError("family needs at least one space map")
        names = free_variables(self.time_map) | free_variables(self.z_map)
        for e in self.space_maps:
            names |= free_variables(e)
        if "s" not in names:
            # Legal (a family may be constant in s) but almost surely a typo.
            pass


def make_family(name: str, time_map, space_maps, z_map) -> TransformationFamily:
    """Build a family; map arguments may be source text."""

    def as_expr(v):
        return parse(v) if isinstance(v, str) else v

    return TransformationFamily(
        name, as_expr(time_map), tuple(as_expr(e) for e in space_maps), as_expr(z_map)
    )


@dataclass(frozen=True)
class Generators:
    """Sampled ``s``-derivatives of the maps at ``s = 0`` plus the drift ``xi``."""

    times: np.ndarray
    T: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    xi: float

    def __post_init__(self):
        for arr in (self.times, self.T, self.X, self.Z):
            if not np.all(np.isfinite(arr)):
                raise NoetherError("generator samples must be finite")


class ConstancyResult(NamedTuple):
    passed: bool
    deviation: float
    mean: float


def constancy(samples, tol: float) -> ConstancyResult:
    """Max deviation from the mean, checked against ``tol``."""
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise NoetherError("constancy needs at least one sample")
    mean = float(values.mean())
    deviation = float(np.max(np.abs(values - mean)))
    return ConstancyResult(deviation <= tol, deviation, mean)


def _family_env(traj: Trajectory, k: int, s: float) -> dict:
    env = {"t": float(traj.times[k]), "z": float(traj.z[k]), "s": s}
    for i in range(traj.n):
        env[f"x{i + 1}"] = float(traj.x[k, i])
        env[f"dx{i + 1}"] = float(traj.v[k, i])
    return env


def verify_identity_at_zero(
    fam: TransformationFamily,
    traj: Trajectory,
    tol: float = IDENTITY_TOLERANCE,
    points: int = 20,
) -> None:
    """Check the maps reduce to the identity at ``s = 0``.

    Evaluated at ``points`` samples drawn along the trajectory with a
    fixed-seed generator, so repeated runs are identical.
    """
    if len(fam.space_maps) != traj.n:
        raise FamilyError(
            f"family {fam.name!r} has {len(fam.space_maps)} space maps for dimension {traj.n}"
        )
    rng = np.random.default_rng(20)
    indices = rng.choice(traj.samples, size=min(points, traj.samples), replace=False)
    t_c = compiled(fam.time_map)
    x_c = [compiled(e) for e in fam.space_maps]
    z_c = compiled(fam.z_map)
    for k in sorted(int(i) for i in indices):
        env = _family_env(traj, k, 0.0)
        if abs(t_c(env) - env["t"]) > tol:
            raise FamilyError(f"family {fam.name!r}: time map is not the identity at s=0")
        for i, f in enumerate(x_c):
            if abs(f(env) - env[f"x{i + 1}"]) > tol:
                raise FamilyError(f"family {fam.name!r}: space map {i + 1} is not the identity at s=0")
        if abs(z_c(env) - env["z"]) > tol:
            raise FamilyError(f"family {fam.name!r}: z map is not the identity at s=0")


def generators(
    fam: TransformationFamily, traj: Trajectory, rate_tol: float = RATE_TOLERANCE
) -> Generators:
    """Sampled generators along ``traj`` and the fitted drift constant.

    The drift is ``xi = -(z(b) / (b - a)) * dT/dt`` where ``dT/dt`` is
    the sampled time derivative of the time generator; it must be
    constant along the mesh (within ``rate_tol``), otherwise the
    time-invariance identity cannot hold with any constant drift and
    :class:`XiUndefinedError` is raised.
    """
    verify_identity_at_zero(fam, traj)
    m, n = traj.samples, traj.n
    t_c = compiled(differentiate(fam.time_map, "s"))
    x_c = [compiled(differentiate(e, "s")) for e in fam.space_maps]
    z_c = compiled(differentiate(fam.z_map, "s"))
    T = np.empty(m)
    X = np.empty((m, n))
    Z = np.empty(m)
    for k in range(m):
        env = _family_env(traj, k, 0.0)
        T[k] = t_c(env)
        Z[k] = z_c(env)
        for i, f in enumerate(x_c):
            X[k, i] = f(env)

    rate = sampled_derivative(T, traj.spacing())
    spread = float(rate.max() - rate.min())
    if spread > rate_tol:
        raise XiUndefinedError(
            f"family {fam.name!r}: time-generator rate varies by {spread:.3e} along the mesh, "
            "no constant drift satisfies the time-invariance identity"
        )
    a, b = float(traj.times[0]), float(traj.times[-1])
    xi = -(float(traj.z[-1]) / (b - a)) * float(rate.mean())
    return Generators(times=traj.times, T=T, X=X, Z=Z, xi=xi)


@dataclass(frozen=True)
class InvarianceReport:
    """Residuals of the two invariance identities over a set of ``s`` values."""

    family: str
    xi: float | None
    s_values: tuple[float, ...]
    eq_time_max: tuple[float, ...]
    eq_rate_max: tuple[float, ...]
    order_time: float | None
    order_rate: float | None
    floor: float
    invariant: bool
    reason: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "invariant": self.invariant,
            "xi": self.xi,
            "floor": self.floor,
            "residuals": [
                {"s": s, "time_identity_max": r14, "rate_identity_max": r15}
                for s, r14, r15 in zip(self.s_values, self.eq_time_max, self.eq_rate_max)
            ],
            "order_time_identity": self.order_time,
            "order_rate_identity": self.order_rate,
            "reason": self.reason,
        }


def _fit_order(s_values, norms, floor) -> tuple[float | None, bool]:
    """Least-squares slope of log-residual against log |s|.

    Returns ``(order, passed)``; residuals entirely below ``floor``
    count as passing with no order estimate (they sit at numerical
    noise, where asymptotic fits are meaningless).
    """
    mags = {}
    for s, r in zip(s_values, norms):
        mag = abs(s)
        mags[mag] = max(mags.get(mag, 0.0), r)
    if max(mags.values()) <= floor:
        return None, True
    if len(mags) < 2:
        return None, False
    xs = np.log(np.array(sorted(mags)))
    ys = np.log(np.maximum([mags[m] for m in sorted(mags)], 1e-300))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return slope, slope >= ORDER_THRESHOLD


def check_invariance(
    p: HerglotzProblem,
    fam: TransformationFamily,
    traj: Trajectory,
    s_values: tuple[float, ...] = DEFAULT_S_VALUES,
    floor: float = DEFAULT_FLOOR,
) -> InvarianceReport:
    """Evaluate both invariance identities at each ``s``.

    The time identity requires the deformed time rate to cancel the
    drift term ``xi * s`` up to ``o(s)``; the rate identity requires the
    deformed functional value to follow the Lagrangian of the deformed
    arguments.  Derivatives of the composed maps are central differences
    along the trajectory.  The verdict is invariant when each identity's
    residual either stays below ``floor`` or shrinks in ``s`` at a
    fitted order of at least ``ORDER_THRESHOLD``.
    """
    tab = partials(p)
    h = traj.spacing()
    m, n = traj.samples, traj.n
    try:
        gen = generators(fam, traj)
    except XiUndefinedError as exc:
        return InvarianceReport(
            family=fam.name,
            xi=None,
            s_values=tuple(s_values),
            eq_time_max=(),
            eq_rate_max=(),
            order_time=None,
            order_rate=None,
            floor=floor,
            invariant=False,
            reason=str(exc),
        )

    a, b = float(traj.times[0]), float(traj.times[-1])
    level = float(traj.z[-1]) / (b - a)
    t_c = compiled(fam.time_map)
    x_c = [compiled(e) for e in fam.space_maps]
    z_c = compiled(fam.z_map)

    time_norms = []
    rate_norms = []
    for s in s_values:
        Ts = np.empty(m)
        Xs = np.empty((m, n))
        Zs = np.empty(m)
        for k in range(m):
            env = _family_env(traj, k, s)
            Ts[k] = t_c(env)
            Zs[k] = z_c(env)
            for i, f in enumerate(x_c):
                Xs[k, i] = f(env)
        dTs = sampled_derivative(Ts, h)
        if np.any(dTs <= 0.0):
            raise TimeMapError(
                f"family {fam.name!r}: deformed time is non-increasing at s={s!r}"
            )
        dXs = sampled_derivative(Xs, h)
        dZs = sampled_derivative(Zs, h)
        u_s = dXs / dTs[:, None]

        composed_L = np.empty(m)
        for k in range(m):
            env = {"t": Ts[k], "z": Zs[k]}
            for i in range(n):
                env[f"x{i + 1}"] = Xs[k, i]
                env[f"dx{i + 1}"] = u_s[k, i]
            composed_L[k] = tab.L_c(env)

        time_residual = (level + gen.xi * s) * dTs - level
        rate_residual = dZs - composed_L * dTs
        time_norms.append(float(np.max(np.abs(time_residual))))
        rate_norms.append(float(np.max(np.abs(rate_residual))))

    order_time, pass_time = _fit_order(s_values, time_norms, floor)
    order_rate, pass_rate = _fit_order(s_values, rate_norms, floor)
    return InvarianceReport(
        family=fam.name,
        xi=gen.xi,
        s_values=tuple(s_values),
        eq_time_max=tuple(time_norms),
        eq_rate_max=tuple(rate_norms),
        order_time=order_time,
        order_rate=order_rate,
        floor=floor,
        invariant=pass_time and pass_rate,
        reason=None if (pass_time and pass_rate) else "residuals do not vanish fast enough in s",
    )


def _bracket_terms(
    p: HerglotzProblem, traj: Trajectory, gen: Generators
) -> np.ndarray:
    """Shared kernel ``dL/dx' . X - Z + (L - dL/dx' . x') * T``."""
    tab = partials(p)
    m = traj.samples
    out = np.empty(m)
    for k in range(m):
        env = tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k])
        lv = np.array([f(env) for f in tab.Lv_c])
        lval = tab.L_c(env)
        out[k] = (
            float(lv @ gen.X[k])
            - gen.Z[k]
            + (lval - float(lv @ traj.v[k])) * gen.T[k]
        )
    return out


def conserved_quantity(
    p: HerglotzProblem, traj: Trajectory, mult: Multipliers, gen: Generators
) -> np.ndarray:
    """Noether quantity samples; constant along extremals of invariant problems."""
    return mult.psi_z * _bracket_terms(p, traj, gen)


def georgieva_quantity(
    p: HerglotzProblem, traj: Trajectory, gen: Generators
) -> np.ndarray:
    """Weighted conserved quantity for families that leave ``z`` untouched.

    Uses the forward weight ``lambda(t) = exp(-integral of dL/dz from a
    to t)`` and omits the ``Z`` term, which must vanish identically.
    """
    if float(np.max(np.abs(gen.Z))) > IDENTITY_TOLERANCE:
        raise NoetherError("the weighted quantity requires a family with no z transformation")
    tab = partials(p)
    m = traj.samples
    g = np.empty(m)
    for k in range(m):
        g[k] = tab.Lz_c(tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k]))
    lam = np.exp(-cumulative_integral(g, traj.spacing()))
    return lam * _bracket_terms(p, traj, gen)


def xi_constancy_check(gen: Generators, z_b: float, a: float, b: float) -> float:
    """Total variation of ``(b - t) * xi - z(b)/(b - a) * T(t)`` over the mesh.

    Zero (to quadrature noise) for every family satisfying the time-
    invariance identity.
    """
    q = (b - gen.times) * gen.xi - (z_b / (b - a)) * gen.T
    return float(np.sum(np.abs(np.diff(q))))
