from __future__ import annotations

import math

import numpy as np
import pytest

from airylayer import (
    DegenerateGeometryError,
    DomainError,
    PhasePoint,
    Potential,
    arc_action,
    chord_area,
    dt_dE,
    dt_dE_jacobi,
    flow,
    fold_diagnostics,
    hamilton_vector_field,
    hamiltonian,
    inverse_midpoint,
    midpoint_map,
    oscillator_inverse_midpoint,
    solve_midpoint,
)

from .conftest import ACOS_TPLUS, SQRT_S, builtin_potentials, surface, tube_query


def _osc_query(s, E=1.0):
    return [math.sqrt(2 * E * s)], [0.0]


def test_midpoint_map_identity_and_oscillator(osc):
    pt = PhasePoint([0.4], [-1.1])
    np.testing.assert_allclose(midpoint_map(pt, osc, 0.0).as_vector(), pt.as_vector())
    R, t = 1.3, 0.9
    m = midpoint_map(PhasePoint([R], [0.0]), osc, t)
    np.testing.assert_allclose(m.as_vector(), [0.5 * R * (1 + math.cos(t)), -0.5 * R * math.sin(t)],
                               atol=1e-12)


@pytest.mark.parametrize("pot", builtin_potentials(), ids=["osc", "cos"])
def test_midpoint_map_reversal_symmetry(pot):
    pt = PhasePoint([0.8], [0.5])
    t = 0.7
    end = flow(pt, pot, t).endpoint
    np.testing.assert_allclose(midpoint_map(pt, pot, t).as_vector(),
                               midpoint_map(end, pot, -t).as_vector(), atol=1e-12)


def test_oscillator_inverse_formula(osc):
    # q = x - tan(t/2) xi, p = xi + tan(t/2) x, checked by composing with Theta^t
    x, xi, t = np.array([0.7]), np.array([-0.4]), 1.1
    q, p = oscillator_inverse_midpoint(x, xi, t)
    np.testing.assert_allclose(q, x - math.tan(t / 2) * xi)
    np.testing.assert_allclose(p, xi + math.tan(t / 2) * x)
    m = midpoint_map(PhasePoint(q, p), osc, t)
    np.testing.assert_allclose(m.as_vector(), [0.7, -0.4], atol=1e-12)


def test_inverse_midpoint_newton(cosine):
    w = np.array([0.9, 0.3])
    z, fr = inverse_midpoint(w, cosine, 0.8)
    np.testing.assert_allclose(0.5 * (z + fr.endpoint.as_vector()), w, atol=1e-12)


@pytest.mark.parametrize("s", SQRT_S)
def test_oscillator_critical_time(osc, s):
    sol = solve_midpoint(*_osc_query(s), 1.0, osc)
    assert abs(sol.t_plus - ACOS_TPLUS[s]) <= 1e-9
    assert sol.t_minus == -sol.t_plus
    assert abs(hamiltonian(sol.base, osc) - 1.0) <= 1e-12
    mid = 0.5 * (sol.base.as_vector() + sol.endpoint.as_vector())
    np.testing.assert_allclose(mid, sol.query.as_vector(), atol=1e-12)


def test_s_three_quarters_gives_pi_over_three(osc):
    sol = solve_midpoint(*_osc_query(0.75), 1.0, osc)
    assert sol.t_plus == pytest.approx(math.pi / 3, abs=1e-12)


def test_query_on_surface_is_fold_point(osc):
    x, xi = _osc_query(1.0)
    sol = solve_midpoint(x, xi, 1.0, osc)
    assert sol.t_plus == 0.0
    np.testing.assert_array_equal(sol.base.as_vector(), sol.query.as_vector())
    assert chord_area(sol) == 0.0
    with pytest.raises(DegenerateGeometryError):
        dt_dE(sol, osc)


def test_cosine_forward_substitution(cosine):
    # normal distance 0.05 inside Sigma_E along grad H
    z = surface(cosine, 1.0, 0.4)
    n = np.array([float(cosine.gradient(z[:1])[0]), z[1]])
    w = z - 0.05 * n / np.linalg.norm(n)
    sol = solve_midpoint(w[:1], w[1:], 1.0, cosine)
    m = midpoint_map(sol.base, cosine, sol.t_plus)
    assert np.linalg.norm(m.as_vector() - w) <= 1e-9
    assert abs(hamiltonian(sol.base, cosine) - 1.0) <= 1e-10


def test_domain_errors(osc):
    with pytest.raises(DomainError):
        solve_midpoint(*_osc_query(1.2), 1.0, osc)
    with pytest.raises(DomainError):
        solve_midpoint(*_osc_query(0.3), 1.0, osc)  # outside the default tube


def test_exterior_branch_is_imaginary(osc):
    s = 1.1
    sol = solve_midpoint(*_osc_query(s), 1.0, osc, allow_exterior=True)
    assert sol.exterior
    assert complex(sol.t_plus).imag == pytest.approx(2 * math.acosh(math.sqrt(s)), abs=1e-9)


def test_dt_dE_oscillator(osc):
    sol = solve_midpoint(*_osc_query(0.75), 1.0, osc)
    assert sol.dt_dE == pytest.approx(math.sqrt(3), rel=1e-8)
    assert dt_dE_jacobi(sol, osc) == pytest.approx(math.sqrt(3), rel=1e-10)


def test_dt_dE_cosine_routes_agree(cosine):
    w = tube_query(cosine, 1.0, 0.7, 0.9)
    sol = solve_midpoint(w[:1], w[1:], 1.0, cosine)
    fd_fine = dt_dE(sol, cosine, rel_step=5e-7)
    assert abs(sol.dt_dE - fd_fine) <= 1e-4 * abs(fd_fine)
    assert abs(sol.dt_dE - dt_dE_jacobi(sol, cosine)) <= 1e-6 * abs(sol.dt_dE)


def test_chord_area_oscillator(osc):
    sol = solve_midpoint(*_osc_query(0.75), 1.0, osc)
    expected = math.pi / 3 - math.sin(math.pi / 3)
    assert chord_area(sol) == pytest.approx(expected, rel=1e-10)
    # circle-segment form R^2 acos(r/R) - r R sqrt(1 - r^2/R^2), R^2 = 2E, r = |w|
    R, r = math.sqrt(2.0), math.sqrt(1.5)
    seg = R * R * math.acos(r / R) - r * R * math.sqrt(1 - r * r / (R * R))
    assert chord_area(sol) == pytest.approx(seg, rel=1e-10)


@pytest.mark.parametrize("pot", builtin_potentials(), ids=["osc", "cos"])
def test_chord_area_green_theorem(pot):
    from airylayer import green_area
    for theta, s in ((0.3, 0.8), (2.0, 0.95), (4.0, 0.6)):
        w = tube_query(pot, 1.0, theta, s)
        sol = solve_midpoint(w[:1], w[1:], 1.0, pot, with_dt_dE=False)
        a, g = chord_area(sol), green_area(sol, pot)
        assert abs(a - g) <= 1e-8 * abs(g)
        # doubled arc sampling agrees
        assert abs(chord_area(sol, nodes=128) - a) <= 1e-10 * abs(a)


@pytest.mark.parametrize("pot", builtin_potentials(), ids=["osc", "cos"])
def test_branch_symmetry_and_action_oddness(pot):
    w = tube_query(pot, 1.0, 1.1, 0.85)
    plus = solve_midpoint(w[:1], w[1:], 1.0, pot, with_dt_dE=False)
    minus = solve_midpoint(w[:1], w[1:], 1.0, pot, with_dt_dE=False, branch=-1)
    assert abs(minus.t + plus.t_plus) <= 1e-9
    # the minus branch starts where the plus arc ends
    np.testing.assert_allclose(minus.base.as_vector(), plus.endpoint.as_vector(), atol=1e-9)
    rev = plus.reverse()
    np.testing.assert_allclose(rev.base.as_vector(), minus.base.as_vector(), atol=1e-9)
    assert abs(arc_action(plus) + arc_action(rev)) <= 1e-9


def test_fold_diagnostics(osc, cosine):
    for theta in np.linspace(0, 2 * math.pi, 5, endpoint=False):
        z = surface(osc, 1.0, theta)
        fd = fold_diagnostics(z, osc, energy=1.0)
        assert 0 <= fd.kernel_residual <= 1e-6
    rng = np.random.default_rng(3)
    for theta in rng.uniform(0, 2 * math.pi, 20):
        z = surface(cosine, 1.0, theta)
        assert fold_diagnostics(z, cosine, energy=1.0).kernel_residual <= 1e-6


def test_fold_wrong_direction_gives_half_vector_field(cosine):
    z = surface(cosine, 1.0, 0.9)
    fd = fold_diagnostics(z, cosine, energy=1.0, direction="time")
    half = 0.5 * np.linalg.norm(hamilton_vector_field(PhasePoint.from_vector(z), cosine))
    assert fd.kernel_residual == pytest.approx(half, rel=1e-6)


def test_fold_requires_surface_point(cosine):
    with pytest.raises(DomainError):
        fold_diagnostics([0.1, 0.1], cosine, energy=1.0)
