"""Necessary optimality conditions as pointwise residuals.

Every checker takes a sampled trajectory (plus costates where needed)
and reports the defect of one condition on the full mesh.  Time
derivatives of sampled quantities use central differences on interior
points and second-order one-sided stencils at the ends; samples within
one mesh interval of a trajectory breakpoint are excluded from the
norms, since the differential conditions only hold off corners for
piecewise-C1 trajectories.
"""

from __future__ import annotations

import numpy as np

from .errors import MeshError, ToolkitError
from .integrate import sampled_derivative
from .problem import (
    HerglotzProblem,
    Multipliers,
    Trajectory,
    breakpoint_window,
    is_classical,
    partials,
)
from .reports import ResidualReport

__all__ = [
    "ConditionError",
    "el_residual",
    "classical_el_residual",
    "transversality_residual",
    "dubois_reymond_residual",
    "pmp_residuals",
    "hamiltonian",
]


class ConditionError(ToolkitError):
    pass


def _require_mesh(traj: Trajectory) -> float:
    if traj.samples < 5:
        raise MeshError("condition residuals need at least five samples")
    return traj.spacing()


def _mesh_tables(p: HerglotzProblem, traj: Trajectory, second_order: bool) -> dict[str, np.ndarray]:
    """Evaluate the Lagrangian and its partials on every mesh sample."""
    tab = partials(p)
    m, n = traj.samples, p.n
    out = {
        "L": np.empty(m),
        "Lt": np.empty(m),
        "Lz": np.empty(m),
        "Lx": np.empty((m, n)),
        "Lv": np.empty((m, n)),
    }
    if second_order:
        out["Lvv"] = np.empty((m, n, n))
        out["Ltv"] = np.empty((m, n))
        out["Lxv"] = np.empty((m, n, n))
        out["Lzv"] = np.empty((m, n))
    for k in range(m):
        env = tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k])
        out["L"][k] = tab.L_c(env)
        out["Lt"][k] = tab.Lt_c(env)
        out["Lz"][k] = tab.Lz_c(env)
        for i in range(n):
            out["Lx"][k, i] = tab.Lx_c[i](env)
            out["Lv"][k, i] = tab.Lv_c[i](env)
        if second_order:
            for i in range(n):
                out["Ltv"][k, i] = tab.Ltv_c[i](env)
                out["Lzv"][k, i] = tab.Lzv_c[i](env)
                for j in range(n):
                    out["Lvv"][k, i, j] = tab.Lvv_c[i][j](env)
                    out["Lxv"][k, i, j] = tab.Lxv_c[i][j](env)
    return out


def _el_values(p: HerglotzProblem, traj: Trajectory, with_z_coupling: bool) -> np.ndarray:
    h = _require_mesh(traj)
    tables = _mesh_tables(p, traj, second_order=True)
    accel = sampled_derivative(traj.v, h)
    # d/dt (dL/dx') by the chain rule; the only numeric derivative is the
    # sampled acceleration, every other factor is an exact partial.
    total = (
        tables["Ltv"]
        + np.einsum("kij,kj->ki", tables["Lxv"], traj.v)
        + np.einsum("kij,kj->ki", tables["Lvv"], accel)
        + tables["Lzv"] * tables["L"][:, None]
    )
    residual = tables["Lx"] - total
    if with_z_coupling:
        residual = residual + tables["Lz"][:, None] * tables["Lv"]
    return residual


def el_residual(p: HerglotzProblem, traj: Trajectory) -> ResidualReport:
    """Defect of the generalized Euler-Lagrange equation.

    Residual per sample and state component:
    ``dL/dx - d/dt (dL/dx') + dL/dz * dL/dx'``.
    """
    values = _el_values(p, traj, with_z_coupling=True)
    return ResidualReport("el", traj.times, values, excluded=tuple(sorted(breakpoint_window(traj))))


def classical_el_residual(p: HerglotzProblem, traj: Trajectory) -> ResidualReport:
    """Classical Euler-Lagrange defect; only valid for z-independent problems."""
    if not is_classical(p):
        raise ConditionError("classical Euler-Lagrange residual requires a z-independent Lagrangian")
    values = _el_values(p, traj, with_z_coupling=False)
    return ResidualReport(
        "classical-el", traj.times, values, excluded=tuple(sorted(breakpoint_window(traj)))
    )


def transversality_residual(p: HerglotzProblem, traj: Trajectory) -> float:
    """Max-norm of the velocity gradient of ``L`` at the final time."""
    tab = partials(p)
    grad = tab.grad_v(traj.times[-1], traj.x[-1], traj.v[-1], traj.z[-1])
    return float(np.max(np.abs(grad)))


def dubois_reymond_residual(
    p: HerglotzProblem, traj: Trajectory, mult: Multipliers
) -> ResidualReport:
    """DuBois-Reymond defect along the trajectory.

    The total time derivative of the bracket
    ``psi_z * (L - dL/dx' . x')`` (by central differences of its
    samples) must equal ``psi_z * dL/dt`` pointwise.
    """
    h = _require_mesh(traj)
    tables = _mesh_tables(p, traj, second_order=False)
    bracket = mult.psi_z * (tables["L"] - np.einsum("ki,ki->k", tables["Lv"], traj.v))
    lhs = sampled_derivative(bracket, h)
    rhs = mult.psi_z * tables["Lt"]
    return ResidualReport(
        "dubois-reymond",
        traj.times,
        lhs - rhs,
        excluded=tuple(sorted(breakpoint_window(traj))),
    )


def pmp_residuals(
    p: HerglotzProblem, traj: Trajectory, mult: Multipliers
) -> list[ResidualReport]:
    """Pontryagin-condition defects for the control-system form.

    Four reports: the optimality condition ``psi_x + psi_z dL/dx'``, the
    adjoint equations for ``psi_x`` and ``psi_z``, and the endpoint
    conditions ``psi_x(b) = 0``, ``psi_z(b) = 1``.
    """
    h = _require_mesh(traj)
    tables = _mesh_tables(p, traj, second_order=False)
    excluded = tuple(sorted(breakpoint_window(traj)))

    optimality = mult.psi_x + mult.psi_z[:, None] * tables["Lv"]
    adjoint_x = sampled_derivative(mult.psi_x, h) + mult.psi_z[:, None] * tables["Lx"]
    adjoint_z = sampled_derivative(mult.psi_z, h) + mult.psi_z * tables["Lz"]
    endpoint = np.array(
        [[float(np.max(np.abs(mult.psi_x[-1]))), abs(float(mult.psi_z[-1]) - 1.0)]]
    )
    return [
        ResidualReport("pmp-optimality", traj.times, optimality, excluded=excluded),
        ResidualReport("pmp-adjoint-x", traj.times, adjoint_x, excluded=excluded),
        ResidualReport("pmp-adjoint-z", traj.times, adjoint_z, excluded=excluded),
        ResidualReport("pmp-endpoints", traj.times[-1:], endpoint),
    ]


def hamiltonian(p: HerglotzProblem, traj: Trajectory, mult: Multipliers) -> np.ndarray:
    """Sampled control Hamiltonian ``psi_x . x' + psi_z * L``."""
    tables = _mesh_tables(p, traj, second_order=False)
    return np.einsum("ki,ki->k", mult.psi_x, traj.v) + mult.psi_z * tables["L"]
