"""Shared fixtures: canonical problems, families, analytic trajectories.

Fixture problems
----------------
FREE  L = dx1^2/2 on [0,1], alpha=1          classical free particle
GRAV  L = dx1^2/2 - x1                        classical uniform field
DAMP  L = dx1^2/2 - x1^2/2 - 0.1*z            damped oscillator via z-coupling
EXPZ  L = dx1^2/2 - 0.5*z                     velocity decay via z-coupling
ZLIN  L = -z, gamma=2                         pure exponential decay of z
"""

import numpy as np
import pytest

from herglotz import Trajectory, make_family, make_problem


@pytest.fixture
def free():
    return make_problem(1, 0.0, 1.0, "dx1^2/2", [1.0], 0.0)


@pytest.fixture
def grav():
    return make_problem(1, 0.0, 1.0, "dx1^2/2 - x1", [1.0], 0.0)


@pytest.fixture
def damp():
    return make_problem(1, 0.0, 1.0, "dx1^2/2 - x1^2/2 - 0.1*z", [1.0], 0.0)


@pytest.fixture
def expz():
    return make_problem(1, 0.0, 1.0, "dx1^2/2 - 0.5*z", [2.0], 0.0)


@pytest.fixture
def zlin():
    return make_problem(1, 0.0, 1.0, "-z", [1.0], 2.0)


@pytest.fixture
def time_shift():
    return make_family("time-shift", "t + s", ["x1"], "z")


@pytest.fixture
def space_translation():
    return make_family("space-translation", "t", ["x1 + s"], "z")


@pytest.fixture
def z_scaling():
    return make_family("z-scaling", "t", ["x1"], "z*exp(s)")


def sampled_trajectory(fx, fv, fz, a=0.0, b=1.0, steps=1000, breakpoints=()):
    """Trajectory from closed-form callables of t (scalar dimension)."""
    ts = np.linspace(a, b, steps + 1)
    return Trajectory(
        times=ts,
        x=np.vectorize(fx)(ts)[:, None],
        v=np.vectorize(fv)(ts)[:, None],
        z=np.vectorize(fz)(ts),
        breakpoints=breakpoints,
    )


def grav_extremal(steps=1000):
    """Analytic extremal of GRAV: x = 1 + t - t^2/2, z = t^3/3 - t^2 - t/2."""
    return sampled_trajectory(
        lambda t: 1.0 + t - t * t / 2.0,
        lambda t: 1.0 - t,
        lambda t: t ** 3 / 3.0 - t * t - t / 2.0,
        steps=steps,
    )


def free_rest_extremal(steps=1000):
    """Analytic extremal of FREE: the particle sits at x = 1."""
    return sampled_trajectory(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, steps=steps)


def zlin_trajectory(steps=1000, gamma=2.0):
    """Admissible pair for ZLIN: x constant, z = gamma * exp(-t)."""
    return sampled_trajectory(
        lambda t: 1.0, lambda t: 0.0, lambda t: gamma * np.exp(-t), steps=steps
    )
