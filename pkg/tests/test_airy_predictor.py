from __future__ import annotations

import math

import numpy as np
import pytest

from airylayer import (
    AIRY_AI_ZEROS,
    DEFAULT_CONVENTION,
    PREFACTOR_DERIVED,
    Convention,
    DegenerateGeometryError,
    DomainError,
    InputError,
    airy_ai,
    cfu_extract,
    chord_area,
    fit_prefactor,
    oscillator_closed_forms,
    phase_profile,
    predict_airy_layer,
    predict_nondegenerate,
    psi_E,
    rho_from_area,
    solve_midpoint,
    u00_coefficient,
    with_prefactor,
)
from airylayer.airy_predictor import tube_energy

from .conftest import tube_query

X34 = [math.sqrt(1.5)]  # H = 3/4 on the q-axis of the oscillator
XI0 = [0.0]


def _osc_sol(osc, s, E=1.0):
    x = [math.sqrt(2 * E * s)]
    return solve_midpoint(x, XI0, E, osc), phase_profile(x, XI0, E, osc)


def test_psi_closed_form(osc):
    t = math.pi / 3
    assert psi_E(t, X34, XI0, 1.0, osc) == pytest.approx(
        t - 2 * math.tan(t / 2) * 0.75, abs=1e-12)
    # rounded reference value; pi/3 - sin(pi/3) = 0.18117215
    assert psi_E(t, X34, XI0, 1.0, osc) == pytest.approx(0.1811724, abs=1e-6)
    assert psi_E(0.0, X34, XI0, 1.0, osc) == 0.0
    # off-critical times follow tE - 2 tan(t/2) H as well
    for t in (0.3, -0.8, 1.4):
        assert psi_E(t, X34, XI0, 1.0, osc) == pytest.approx(
            t - 2 * math.tan(t / 2) * 0.75, abs=1e-11)


def test_psi_stationary_at_critical_time(osc, cosine):
    for pot in (osc, cosine):
        w = tube_query(pot, 1.0, 0.6, 0.8)
        sol = solve_midpoint(w[:1], w[1:], 1.0, pot)
        prof = phase_profile(w[:1], w[1:], 1.0, pot)
        assert abs(prof.derivative(sol.t_plus, 1, step=1e-4)) <= 1e-8
        assert abs(prof.first_derivative(sol.t_plus)) <= 1e-10


def test_first_derivative_identity(cosine):
    # dPsi/dt = E - H(gamma(0)) against finite differences of Psi
    prof = phase_profile([1.1], [0.3], 1.0, cosine)
    for t in (0.2, 0.7):
        fd = prof.derivative(t, 1, step=1e-4)
        assert fd == pytest.approx(prof.first_derivative(t), abs=1e-8)


def test_cfu_oscillator_three_quarters(osc):
    sol, prof = _osc_sol(osc, 0.75)
    c = cfu_extract(prof, sol)
    assert c.phi_plus == pytest.approx(-0.1811724, abs=1e-6)
    assert c.phi_minus == pytest.approx(0.1811724, abs=1e-6)
    assert c.rho32 == pytest.approx(0.75 * 0.3623449, abs=1e-6)
    assert abs(c.mu) <= 1e-12
    assert c.rho32 == pytest.approx(1.5 * chord_area(sol), rel=1e-10)


def test_cfu_on_surface(osc):
    sol, prof = _osc_sol(osc, 1.0)
    c = cfu_extract(prof, sol)
    assert (c.rho, c.mu) == (0.0, 0.0)


def test_mu_vanishes_and_area_consistency(osc, cosine):
    rng = np.random.default_rng(11)
    for pot in (osc, cosine):
        for _ in range(8):
            w = tube_query(pot, 1.0, rng.uniform(0, 2 * math.pi), rng.uniform(0.7, 0.999))
            sol = solve_midpoint(w[:1], w[1:], 1.0, pot, with_dt_dE=False)
            c = cfu_extract(phase_profile(w[:1], w[1:], 1.0, pot), sol)
            assert abs(c.mu) <= 1e-8
            assert abs(c.rho32 - 1.5 * chord_area(sol)) <= 1e-6 * c.rho32
            assert rho_from_area(sol) == pytest.approx(c.rho, rel=1e-6)


def test_second_derivative_is_inverse_dt_dE(cosine):
    w = tube_query(cosine, 1.0, 2.2, 0.85)
    sol = solve_midpoint(w[:1], w[1:], 1.0, cosine)
    prof = phase_profile(w[:1], w[1:], 1.0, cosine)
    # in the normal-form orientation t' = -t the critical point t_+ sits at t' = -t_plus
    d2 = prof.derivative(-sol.t_plus, 2, method="first", step=1e-4, orientation="cfu")
    assert d2 == pytest.approx(1.0 / sol.dt_dE, rel=1e-4)


def test_third_derivative_positive_on_surface(osc, cosine):
    from .conftest import surface
    for pot in (osc, cosine):
        for theta in (0.0, 1.0, 2.5, 4.0):
            z = surface(pot, 1.0, theta)
            prof = phase_profile(z[:1], z[1:], 1.0, pot)
            d3 = prof.derivative(0.0, 3, method="first", step=1e-2, orientation="cfu")
            assert d3 > 0.1


def test_oscillator_third_derivative_value(osc):
    # Psi = tE - 2 tan(t/2) H on the surface H = E: Psi''' (0) = -E/2 in time,
    # so +E/2 in the normal-form orientation
    prof = phase_profile([math.sqrt(2.0)], [0.0], 1.0, osc)
    d3 = prof.derivative(0.0, 3, method="first", step=1e-3, orientation="cfu")
    assert d3 == pytest.approx(0.5, rel=1e-5)


def test_u00_oscillator(osc):
    sol, prof = _osc_sol(osc, 0.75)
    rho = cfu_extract(prof, sol).rho
    expected = math.sqrt(math.pi) * rho ** 0.25 * math.sqrt(math.sqrt(3)) / math.sqrt(3)
    assert u00_coefficient(sol, osc) == pytest.approx(expected, rel=1e-7)
    joint = u00_coefficient(sol, osc, placement="joint")
    assert joint == pytest.approx(math.sqrt(math.pi) * rho ** 0.25 / math.sqrt(3 * math.sqrt(3)),
                                  rel=1e-7)


def test_u00_limit_at_fold(osc):
    vals = []
    for k in range(4, 14, 2):
        sol, _ = _osc_sol(osc, 1 - 2.0 ** -k)
        vals.append(u00_coefficient(sol, osc))
    vals = np.array(vals)
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)
    assert abs(vals[-1] - vals[-2]) < abs(vals[1] - vals[0])
    # oscillator limit sqrt(pi) 2^{-5/6} E^{-1/3}
    assert vals[-1] == pytest.approx(math.sqrt(math.pi) * 2 ** (-5 / 6), rel=1e-3)


def test_u00_undefined_on_fold(osc):
    sol, _ = _osc_sol(osc, 1.0)
    with pytest.raises(DegenerateGeometryError):
        u00_coefficient(sol, osc)


def test_det_one_plus_m_at_zero(osc):
    from airylayer import PhasePoint, flow
    fr = flow(PhasePoint([1.0], [0.0]), osc, 0.0)
    assert np.linalg.det(np.eye(2) + fr.M) == 4.0


def test_rho_fold_scaling(osc):
    # rho ~ 2^{2/3} E^{-1/3} (E - H) as H -> E
    for E in (0.5, 1.0, 2.0):
        gap = 1e-4 * E
        x = [math.sqrt(2 * (E - gap))]
        sol = solve_midpoint(x, XI0, E, osc, with_dt_dE=False)
        rho = cfu_extract(phase_profile(x, XI0, E, osc), sol).rho
        assert rho / gap == pytest.approx(2 ** (2 / 3) * E ** (-1 / 3), rel=1e-3)


def test_prediction_assembly(osc):
    hbar = 0.01
    H = tube_energy(-2.0, 1.0, hbar)
    pr = predict_airy_layer([math.sqrt(2 * H)], XI0, 1.0, hbar, osc)
    expected = DEFAULT_CONVENTION.prefactor * hbar ** (1 / 3 - 1) * airy_ai(pr.airy_argument) * pr.u00
    assert pr.value == expected
    assert pr.airy_argument == pytest.approx(-pr.rho * hbar ** (-2 / 3), rel=1e-15)
    assert pr.convention_id == DEFAULT_CONVENTION.convention_id
    assert pr.u10 is None


def test_prediction_on_surface_interpolates(osc):
    pr = predict_airy_layer([math.sqrt(2.0)], XI0, 1.0, 0.01, osc)
    assert pr.interpolated
    assert abs(pr.airy_argument) < 1e-2
    assert pr.u00 == pytest.approx(math.sqrt(math.pi) * 2 ** (-5 / 6), rel=1e-3)


def test_prediction_zero_locations(osc):
    # zeros of the prediction in the hbar^{-2/3} rho variable sit at Airy zeros
    from scipy.optimize import brentq
    hbar = 0.01

    def value(u):
        H = tube_energy(u, 1.0, hbar)
        return predict_airy_layer([math.sqrt(2 * H)], XI0, 1.0, hbar, osc)

    u0 = brentq(lambda u: value(u).value, -2.6, -1.6, xtol=1e-10)
    arg = value(u0).airy_argument
    assert arg == pytest.approx(AIRY_AI_ZEROS[0], rel=2e-2)


def test_prediction_outside_layer(osc):
    with pytest.raises(DomainError):
        predict_airy_layer([math.sqrt(1.2)], XI0, 1.0, 0.001, osc)


def test_exterior_prediction_close_to_exact(osc):
    # u = 1 outside the ball; exact oscillator smoothed sum from the quantum module
    from airylayer import OscillatorSpectrum, build_window, smoothed_spectral_wigner
    hbar = 0.01
    H = tube_energy(1.0, 1.0, hbar)
    x = [math.sqrt(2 * H)]
    pr = predict_airy_layer(x, XI0, 1.0, hbar, osc)
    ex = smoothed_spectral_wigner(1.0, hbar, OscillatorSpectrum(hbar), build_window(3.0), x, XI0)
    assert pr.rho < 0
    assert abs(pr.value - ex.values[0]) <= 1e-3 * abs(ex.values[0])


def test_nondegenerate_symmetry_and_refusal(osc):
    from airylayer import build_window
    window = build_window(3.0)
    x = [math.sqrt(1.2)]
    nd = predict_nondegenerate(x, XI0, 1.0, 0.005, window, osc)
    a, b = nd.contributions
    assert a.t_j == pytest.approx(-b.t_j, abs=1e-12)
    assert a.amplitude == pytest.approx(b.amplitude, rel=1e-6)
    assert a.S_j == pytest.approx(-b.S_j, abs=1e-10)
    # equal amplitudes, opposite phases: a pure cosine in S/hbar
    expected_ratio = math.cos(a.S_j / 0.005 + a.m_j) + math.cos(b.S_j / 0.005 + b.m_j)
    assert expected_ratio == pytest.approx(2 * math.cos(a.S_j / 0.005 + a.m_j), abs=1e-9)
    zero = predict_nondegenerate(x, XI0, 1.0, 0.005, lambda t: 0.0, osc)
    assert zero.value == 0.0
    with pytest.raises(DegenerateGeometryError):
        predict_nondegenerate([math.sqrt(1.98)], XI0, 1.0, 0.005, window, osc)


def test_closed_forms():
    cf = oscillator_closed_forms(0.75)
    assert cf.beta == pytest.approx(0.5 * (math.pi / 6 - math.sqrt(3) / 4), rel=1e-14)
    assert cf.beta == pytest.approx(0.0452931, abs=1e-7)
    assert cf.t_plus == pytest.approx(math.pi / 3, rel=1e-14)
    assert cf.det_1pM == pytest.approx(3.0, rel=1e-14)
    assert cf.dt_dE == pytest.approx(math.sqrt(3), rel=1e-14)
    for eps in (1e-3, 1e-5):
        c = oscillator_closed_forms(1 - eps)
        assert c.B2 / (-(2 ** (-2 / 3)) * eps) == pytest.approx(1.0, abs=10 * eps ** 0.5 + 1e-3)
        assert c.alpha0 == pytest.approx(2 ** (1 / 3), rel=10 * eps)
    with pytest.raises(InputError):
        oscillator_closed_forms(1.5)


def test_closed_forms_match_numerics(osc):
    for s in (0.6, 0.9):
        cf = oscillator_closed_forms(s)
        sol, prof = _osc_sol(osc, s)
        assert sol.t_plus == pytest.approx(cf.t_plus, abs=1e-10)
        assert sol.dt_dE == pytest.approx(cf.dt_dE, rel=1e-7)
        assert chord_area(sol) == pytest.approx(cf.area, rel=1e-10)
        assert cfu_extract(prof, sol).rho == pytest.approx(cf.rho, rel=1e-9)


def test_convention_io(tmp_path):
    conv = with_prefactor(DEFAULT_CONVENTION, 0.3, convention_id="test", points=3)
    conv.save(tmp_path / "c.json")
    back = Convention.load(tmp_path / "c.json")
    assert back == conv and back.calibration == {"points": 3}
    assert conv.constant(2) == pytest.approx(0.3 / math.pi)
    with pytest.raises(InputError):
        Convention(prefactor=-1.0)


def test_calibrated_constant_near_analytic():
    # the frozen calibration agrees with pi^{-1} sqrt(2/pi) to 1e-5
    assert DEFAULT_CONVENTION.prefactor == pytest.approx(PREFACTOR_DERIVED, rel=1e-5)
    assert PREFACTOR_DERIVED == pytest.approx(math.sqrt(2 / math.pi) / math.pi, rel=1e-15)


def test_fit_prefactor():
    p = np.array([1.0, -2.0, 0.5])
    assert fit_prefactor(p, 0.7 * p) == pytest.approx(0.7, rel=1e-15)
    with pytest.raises(InputError):
        fit_prefactor([], [])
