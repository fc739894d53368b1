"""Fixed-step ODE integration, quadrature on uniform meshes, costates.

Everything here is deterministic: fixed meshes, no adaptivity, stable
summation order, so repeated runs produce bit-identical arrays.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import MeshError, ToolkitError
from .problem import HerglotzProblem, Multipliers, Trajectory, partials

__all__ = [
    "IntegrationError",
    "QuadratureError",
    "rk4_ivp",
    "simpson",
    "cumulative_integral",
    "sampled_derivative",
    "compute_psi_z",
    "compute_psi_z_quadrature",
]


class IntegrationError(ToolkitError):
    pass


class QuadratureError(ToolkitError):
    pass


def rk4_ivp(
    field: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t1: float,
    steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical 4th-order Runge-Kutta on a uniform mesh of ``steps`` steps.

    Integrates ``y' = field(t, y)`` from ``t0`` to ``t1``; ``t1 < t0``
    integrates backward with a negative step.  Returns ``(times, ys)``
    with ``ys[k]`` the state at ``times[k]``.  A non-finite field value
    aborts with :class:`IntegrationError` reporting ``t`` and ``y``.
    """
    if steps < 1:
        raise IntegrationError(f"steps must be >= 1, got {steps}")
    y = np.atleast_1d(np.array(y0, dtype=float))
    h = (t1 - t0) / steps
    times = t0 + h * np.arange(steps + 1)
    times[-1] = t1
    ys = np.empty((steps + 1, y.shape[0]))
    ys[0] = y

    def stage(t, yv):
        k = np.asarray(field(t, yv), dtype=float)
        if not np.all(np.isfinite(k)):
            raise IntegrationError(f"non-finite field value at t={t!r}, y={yv.tolist()!r}")
        return k

    for i in range(steps):
        t = times[i]
        k1 = stage(t, y)
        k2 = stage(t + h / 2.0, y + (h / 2.0) * k1)
        k3 = stage(t + h / 2.0, y + (h / 2.0) * k2)
        k4 = stage(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    return times, ys


def simpson(values, dx: float) -> float:
    """Composite Simpson rule on uniformly spaced samples.

    Requires an odd sample count (an even number of intervals); callers
    with an odd interval count must refine their mesh.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.shape[0] < 3:
        raise QuadratureError("need at least three samples")
    if values.shape[0] % 2 == 0:
        raise QuadratureError(f"even sample count {values.shape[0]}; Simpson needs an odd count")
    acc = values[0] + values[-1] + 4.0 * np.sum(values[1:-1:2]) + 2.0 * np.sum(values[2:-2:2])
    return float(acc * dx / 3.0)


# Cubic-interpolant integrals over one mesh interval (4th order):
# leading interval, interior interval, trailing interval.
_EDGE_W = np.array([9.0, 19.0, -5.0, 1.0]) / 24.0
_MID_W = np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0


def cumulative_integral(values, dx: float) -> np.ndarray:
    """Running integral of uniformly spaced samples, 4th-order accurate.

    Each mesh interval is integrated with the cubic interpolant through
    the four nearest samples.  ``out[k]`` approximates the integral from
    the first sample to sample ``k``; ``out[0]`` is 0.
    """
    f = np.asarray(values, dtype=float)
    m = f.shape[0]
    if f.ndim != 1 or m < 2:
        raise QuadratureError("need at least two samples")
    out = np.empty(m)
    out[0] = 0.0
    if m == 2:
        out[1] = 0.5 * dx * (f[0] + f[1])
        return out
    if m == 3:
        quad_first = dx * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0
        quad_last = dx * (-f[0] + 8.0 * f[1] + 5.0 * f[2]) / 12.0
        out[1] = quad_first
        out[2] = quad_first + quad_last
        return out
    out[1] = out[0] + dx * float(_EDGE_W @ f[:4])
    for k in range(1, m - 2):
        out[k + 1] = out[k] + dx * float(_MID_W @ f[k - 1 : k + 3])
    out[m - 1] = out[m - 2] + dx * float(_EDGE_W @ f[m - 1 : m - 5 : -1])
    return out


def sampled_derivative(values, dx: float) -> np.ndarray:
    """Second-order time derivative of sampled values on a uniform mesh.

    Central differences on interior samples, one-sided three-point
    stencils at the ends.  ``values`` may be ``(m,)`` or ``(m, k)``.
    """
    f = np.asarray(values, dtype=float)
    if f.shape[0] < 3:
        raise MeshError("derivative stencils need at least three samples")
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return out


def _half_samples(f: np.ndarray) -> np.ndarray:
    """Cubic interpolation of samples at the midpoints of each interval."""
    m = f.shape[0]
    if m < 4:
        raise MeshError("midpoint interpolation needs at least four samples")
    half = np.empty(m - 1)
    half[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    for k in range(1, m - 2):
        half[k] = (-f[k - 1] + 9.0 * f[k] + 9.0 * f[k + 1] - f[k + 2]) / 16.0
    half[m - 2] = (f[m - 4] - 5.0 * f[m - 3] + 15.0 * f[m - 2] + 5.0 * f[m - 1]) / 16.0
    return half


def _z_partial_samples(p: HerglotzProblem, traj: Trajectory) -> np.ndarray:
    tab = partials(p)
    g = np.empty(traj.samples)
    for k in range(traj.samples):
        g[k] = tab.Lz_c(tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k]))
    if not np.all(np.isfinite(g)):
        raise IntegrationError("non-finite z-partial of the Lagrangian along the trajectory")
    return g


def compute_psi_z(p: HerglotzProblem, traj: Trajectory) -> Multipliers:
    """Costates along a trajectory.

    ``psi_z`` solves the backward linear equation
    ``psi_z' = -psi_z * dL/dz`` from the terminal value 1, stepped with
    RK4 on the trajectory mesh (midpoint coefficient values come from
    cubic interpolation of the sampled z-partial, keeping 4th order).
    ``psi_x`` is filled as ``-psi_z * dL/dx'``.
    """
    h = traj.spacing()
    m = traj.samples
    g = _z_partial_samples(p, traj)
    ghalf = _half_samples(g)
    psi = np.empty(m)
    psi[-1] = 1.0
    y = 1.0
    step = -h
    for k in range(m - 2, -1, -1):
        k1 = -g[k + 1] * y
        k2 = -ghalf[k] * (y + 0.5 * step * k1)
        k3 = -ghalf[k] * (y + 0.5 * step * k2)
        k4 = -g[k] * (y + step * k3)
        y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        psi[k] = y
    if not np.all(np.isfinite(psi)) or np.any(psi <= 0.0):
        raise IntegrationError("psi_z integration left the positive range")

    tab = partials(p)
    psi_x = np.empty((m, p.n))
    for k in range(m):
        env = tab.env(traj.times[k], traj.x[k], traj.v[k], traj.z[k])
        for i, f in enumerate(tab.Lv_c):
            psi_x[k, i] = -psi[k] * f(env)
    return Multipliers(psi_x, psi)


def compute_psi_z_quadrature(p: HerglotzProblem, traj: Trajectory) -> np.ndarray:
    """Cross-check route for ``psi_z``: exponential of the tail integral.

    Evaluates ``exp(integral of dL/dz from t to b)`` directly by
    quadrature of the sampled z-partial.  Independent of the backward
    ODE route in :func:`compute_psi_z`; the two agree to the meshes'
    convergence order.
    """
    g = _z_partial_samples(p, traj)
    running = cumulative_integral(g, traj.spacing())
    return np.exp(running[-1] - running)
