from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from airylayer import Potential

settings.register_profile(
    "airylayer",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("airylayer")


@pytest.fixture(scope="session")
def osc():
    return Potential.isotropic(1, 1.0)


@pytest.fixture(scope="session")
def cosine():
    return Potential.cosine_perturbed(1, 0.1)


def builtin_potentials():
    return [Potential.isotropic(1, 1.0), Potential.cosine_perturbed(1, 0.1)]


def surface(pot, E, theta):
    """Point of Sigma_E in direction theta of the (q, p) plane (d = 1)."""
    from airylayer.config import surface_point
    return surface_point(pot, E, theta)


def tube_query(pot, E, theta, s):
    """Point with H = s E on the ray from the minimum through surface(theta)."""
    from airylayer.airy_predictor import ray_point
    return ray_point(surface(pot, E, theta), pot, s * E)


SQRT_S = [0.5, 0.75, 0.9, 0.99]
ACOS_TPLUS = {s: 2 * math.acos(math.sqrt(s)) for s in SQRT_S}


# acceptance verdicts, echoed in the terminal summary so they survive output capture
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE[key])
