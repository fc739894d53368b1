"""Explicit form of the generalized Euler-Lagrange equation and shooting.

The generalized Euler-Lagrange equation couples the classical one with
the z-partial of the Lagrangian.  For a regular Lagrangian (invertible
velocity Hessian) it is solved for the acceleration and integrated as a
first-order system in ``(x, x', z)``; the free terminal state turns the
boundary condition into a root-finding problem for the initial velocity:
the velocity gradient of ``L`` must vanish at ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ToolkitError
from .integrate import compute_psi_z, rk4_ivp
from .problem import HerglotzProblem, Multipliers, Trajectory, partials

__all__ = [
    "IrregularLagrangianError",
    "ShootingError",
    "ShootingResult",
    "el_explicit_form",
    "shoot",
]

CONDITION_LIMIT = 1e12


class IrregularLagrangianError(ToolkitError):
    """The velocity Hessian of the Lagrangian is (numerically) singular."""


class ShootingError(ToolkitError):
    pass


def el_explicit_form(
    p: HerglotzProblem,
) -> Callable[[float, np.ndarray, np.ndarray, float], tuple[np.ndarray, float]]:
    """Second-order field ``(t, x, v, z) -> (acceleration, z-rate)``.

    Expands ``d/dt (dL/dx')`` by the chain rule, substitutes the
    z-dynamics for ``z'``, and solves the velocity Hessian against the
    remaining terms.  Raises :class:`IrregularLagrangianError` at points
    where the Hessian has a 1-norm condition estimate above
    ``CONDITION_LIMIT``.
    """
    tab = partials(p)
    n = p.n

    if n == 1:
        lv = tab.Lv_c[0]
        lx = tab.Lx_c[0]
        lz = tab.Lz_c
        lvv = tab.Lvv_c[0][0]
        ltv = tab.Ltv_c[0]
        lxv = tab.Lxv_c[0][0]
        lzv = tab.Lzv_c[0]
        lval = tab.L_c

        def field_1d(t: float, x, v, z: float):
            env = tab.env(t, x, v, z)
            hess = lvv(env)
            if hess == 0.0 or not np.isfinite(hess):
                raise IrregularLagrangianError(
                    f"singular velocity Hessian at t={t!r}, x={float(x[0])!r}, "
                    f"v={float(v[0])!r}, z={z!r}"
                )
            ldot = lval(env)
            rhs = lx(env) + lz(env) * lv(env) - ltv(env) - lxv(env) * v[0] - lzv(env) * ldot
            return np.array([rhs / hess]), ldot

        return field_1d

    def field(t: float, x, v, z: float):
        env = tab.env(t, x, v, z)
        hess = np.array([[f(env) for f in row] for row in tab.Lvv_c])
        ldot = tab.L_c(env)
        rhs = np.array(
            [
                tab.Lx_c[i](env)
                + tab.Lz_c(env) * tab.Lv_c[i](env)
                - tab.Ltv_c[i](env)
                - sum(tab.Lxv_c[i][j](env) * v[j] for j in range(n))
                - tab.Lzv_c[i](env) * ldot
                for i in range(n)
            ]
        )
        try:
            inv = np.linalg.inv(hess)
        except np.linalg.LinAlgError:
            raise IrregularLagrangianError(
                f"singular velocity Hessian at t={t!r}, x={x.tolist()!r}, "
                f"v={v.tolist()!r}, z={z!r}"
            ) from None
        cond = np.linalg.norm(hess, 1) * np.linalg.norm(inv, 1)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise IrregularLagrangianError(
                f"velocity Hessian condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e} "
                f"at t={t!r}, x={x.tolist()!r}, v={v.tolist()!r}, z={z!r}"
            )
        return inv @ rhs, ldot

    return field


@dataclass(frozen=True)
class ShootingResult:
    """Outcome of shooting on the terminal velocity-gradient condition."""

    v_star: np.ndarray
    trajectory: Trajectory
    multipliers: Multipliers | None
    transversality_norm: float
    iterations: int
    converged: bool
    residual_history: tuple[float, ...] = ()


def _integrate_candidate(p: HerglotzProblem, field, v0: np.ndarray, steps: int) -> Trajectory:
    n = p.n

    def ode(t, y):
        acc, ldot = field(t, y[:n], y[n : 2 * n], y[2 * n])
        return np.concatenate([y[n : 2 * n], acc, [ldot]])

    y0 = np.concatenate([p.alpha_array, v0, [p.gamma]])
    times, ys = rk4_ivp(ode, p.a, y0, p.b, steps)
    return Trajectory(times, ys[:, :n], ys[:, n : 2 * n], ys[:, 2 * n])


def shoot(
    p: HerglotzProblem,
    v0,
    steps: int = 1000,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> ShootingResult:
    """Newton iteration on the terminal condition ``dL/dx'(b) = 0``.

    Starting from the initial-velocity guess ``v0``, each candidate
    trajectory is integrated with RK4 and the Jacobian of the terminal
    velocity gradient is formed by forward differences with step
    ``1e-6 * (1 + |v_i|)``.  On convergence the costates are filled in;
    after ``max_iter`` updates the result is returned with
    ``converged=False`` and no multipliers.
    """
    tab = partials(p)
    field = el_explicit_form(p)
    v = np.atleast_1d(np.array(v0, dtype=float))
    if v.shape != (p.n,):
        raise ShootingError(f"initial velocity guess has shape {v.shape}, expected ({p.n},)")

    def terminal_gradient(traj: Trajectory) -> np.ndarray:
        return tab.grad_v(traj.times[-1], traj.x[-1], traj.v[-1], traj.z[-1])

    history = []
    iterations = 0
    traj = _integrate_candidate(p, field, v, steps)
    residual = terminal_gradient(traj)
    norm = float(np.max(np.abs(residual)))
    history.append(norm)
    while norm > tol and iterations < max_iter:
        jac = np.empty((p.n, p.n))
        for i in range(p.n):
            dv = 1e-6 * (1.0 + abs(v[i]))
            vp = v.copy()
            vp[i] += dv
            jac[:, i] = (terminal_gradient(_integrate_candidate(p, field, vp, steps)) - residual) / dv
        try:
            delta = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError:
            raise ShootingError(
                f"singular finite-difference Jacobian at v={v.tolist()!r} "
                f"(|residual|={norm:.3e})"
            ) from None
        v = v + delta
        iterations += 1
        traj = _integrate_candidate(p, field, v, steps)
        residual = terminal_gradient(traj)
        norm = float(np.max(np.abs(residual)))
        history.append(norm)

    converged = norm <= tol
    multipliers = compute_psi_z(p, traj) if converged else None
    return ShootingResult(
        v_star=v,
        trajectory=traj,
        multipliers=multipliers,
        transversality_norm=norm,
        iterations=iterations,
        converged=converged,
        residual_history=tuple(history),
    )
