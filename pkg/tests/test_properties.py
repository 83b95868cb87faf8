"""Randomised invariants across the modules."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from airylayer import Potential, build_window, oscillator_wigner_exact
from airylayer.airy_predictor import Convention, ray_point, rho_at, tube_energy
from airylayer.classical import PhasePoint, flow, hamiltonian, symplectic_matrix
from airylayer.config import surface_point
from airylayer.midpoint import inverse_midpoint, midpoint_map, solve_midpoint
from airylayer.specfun import airy_ai_and_prime, laguerre_scaled_sequence

COS = Potential.cosine_perturbed(1, 0.2)
ANI = Potential.anisotropic([1.0, 1.7])

coord = st.floats(-1.2, 1.2)
times = st.floats(0.05, 2.5)


def _pt(*v):
    v = np.array(v, dtype=float)
    d = v.size // 2
    return PhasePoint(v[:d], v[d:])


@given(coord, coord, times)
def test_energy_conserved(q, p, t):
    pt = _pt(q, p)
    fr = flow(pt, COS, t)
    assert hamiltonian(fr.endpoint, COS) == pytest.approx(hamiltonian(pt, COS), abs=1e-11)


@given(coord, coord, coord, coord, times)
def test_monodromy_symplectic(q1, q2, p1, p2, t):
    fr = flow(_pt(q1, q2, p1, p2), ANI, t)
    J = symplectic_matrix(2)
    np.testing.assert_allclose(fr.M.T @ J @ fr.M, J, atol=1e-10)


@given(coord, coord, times)
def test_flow_is_time_reversible(q, p, t):
    fwd = flow(_pt(q, p), COS, t)
    back = flow(fwd.endpoint, COS, -t)
    np.testing.assert_allclose(back.endpoint.as_vector(), [q, p], atol=1e-10)
    # action is additive and odd under reversal of the path
    assert back.action == pytest.approx(-fwd.action, abs=1e-10)


@given(coord, coord, st.floats(0.05, 1.5))
def test_inverse_midpoint_inverts_forward_map(x, xi, t):
    z, _ = inverse_midpoint(np.array([x, xi]), COS, t)
    w = midpoint_map(PhasePoint.from_vector(z), COS, t).as_vector()
    np.testing.assert_allclose(w, [x, xi], atol=1e-12)


@given(coord, coord, st.floats(0.05, 1.5))
def test_midpoint_map_time_reversal(q, p, t):
    # Theta^{-t} at Phi^t(z) has the same midpoint
    fr = flow(_pt(q, p), COS, t)
    a = midpoint_map(_pt(q, p), COS, t).as_vector()
    b = midpoint_map(fr.endpoint, COS, -t).as_vector()
    np.testing.assert_allclose(a, b, atol=1e-11)


@settings(max_examples=15)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.55, 0.95))
def test_critical_arc_lies_on_shell_with_query_midpoint(theta, s):
    E = 1.0
    x, xi = ray_point(surface_point(COS, E, theta), COS, s * E)
    sol = solve_midpoint([x], [xi], E, COS, with_dt_dE=False)
    assert hamiltonian(sol.base, COS) == pytest.approx(E, abs=1e-10)
    mid = 0.5 * (sol.base.as_vector() + sol.endpoint.as_vector())
    np.testing.assert_allclose(mid, [x, xi], atol=1e-10)
    assert sol.t_plus.real > 0 and abs(sol.t_plus.imag) < 1e-14


@settings(max_examples=15)
@given(st.floats(0.0, 2 * math.pi), st.floats(-4.0, 4.0))
def test_rho_sign_follows_energy_ball(theta, u):
    assume(abs(u) > 0.05)
    E, hbar = 1.0, 0.01
    H = tube_energy(u, E, hbar)
    r = math.sqrt(2 * H)
    rho = rho_at([r * math.cos(theta)], [r * math.sin(theta)], E, Potential.isotropic(1))
    # inside the ball (u < 0) rho > 0, outside rho < 0
    assert math.copysign(1.0, rho) == -math.copysign(1.0, u)


@given(st.floats(-30, 30))
def test_airy_energy_identity(x):
    # d/dx (Ai'^2 - x Ai^2) = -Ai^2, checked by a centred difference
    h = 1e-3
    f = lambda y: airy_ai_and_prime(y)[1] ** 2 - y * airy_ai_and_prime(y)[0] ** 2  # noqa: E731
    lhs = (f(x + h) - f(x - h)) / (2 * h)
    ai = airy_ai_and_prime(x)[0]
    assert lhs == pytest.approx(-ai ** 2, abs=1e-6)


@given(st.integers(2, 60), st.floats(0.0, 40.0))
def test_laguerre_three_term_recurrence(n, x):
    L = np.asarray(laguerre_scaled_sequence(n, x))
    # scaled sequence: L_k(x) e^{-x/2}
    lhs = (n) * L[n]
    rhs = (2 * n - 1 - x) * L[n - 1] - (n - 1) * L[n - 2]
    assert lhs == pytest.approx(rhs, abs=1e-9 * max(1.0, np.max(np.abs(L)) * (2 * n + x)))


@given(st.integers(0, 60), st.floats(-2, 2), st.floats(-2, 2))
def test_wigner_of_eigenstate_bounded(n, x, xi):
    hbar = 0.05
    assert abs(oscillator_wigner_exact(n, hbar, x, xi)) <= 1 / (math.pi * hbar) * (1 + 1e-12)


@settings(max_examples=6)
@given(st.floats(0.5, 5.0))
def test_window_peak_between_plateau_and_support(a):
    w = build_window(a)
    assert a / (2 * math.pi) < w.f(0.0) < a / math.pi


@given(st.text(min_size=1, max_size=20), st.floats(0.1, 1.0))
def test_convention_dict_round_trip(cid, c):
    conv = Convention(convention_id=cid, prefactor=c)
    assert Convention.from_dict(conv.to_dict()) == conv
