from __future__ import annotations

import math

import numpy as np
import pytest

from airylayer import (
    DEFAULT_SPEC,
    InputError,
    IntegrationError,
    IntegratorSpec,
    PhasePoint,
    Potential,
    action_partials,
    flow,
    hamilton_vector_field,
    hamiltonian,
    symplectic_block_residuals,
    symplectic_residual,
)

from .conftest import builtin_potentials


def test_hamiltonian_values(osc, cosine):
    assert hamiltonian(PhasePoint([0.0], [0.0]), osc) == 0.0
    assert hamiltonian(PhasePoint([1.0], [1.0]), osc) == pytest.approx(1.0, abs=1e-15)
    assert hamiltonian(PhasePoint([math.pi], [0.0]), cosine) == pytest.approx(
        0.5 * math.pi ** 2 + 0.2, rel=1e-15)


def test_hamiltonian_dimension_mismatch(osc):
    with pytest.raises(InputError):
        hamiltonian(PhasePoint([1.0, 2.0], [0.0, 0.0]), osc)


def test_vector_field(osc, cosine):
    np.testing.assert_allclose(hamilton_vector_field(PhasePoint([1.0], [0.0]), osc), [0, -1])
    np.testing.assert_allclose(hamilton_vector_field(PhasePoint([0.0], [1.0]), osc), [1, 0])
    np.testing.assert_allclose(hamilton_vector_field(PhasePoint([1.0], [2.0]), cosine),
                               [2.0, -(1 + 0.1 * math.sin(1.0))], rtol=1e-15)


def test_quartic_rejected():
    # unbounded Hessian
    with pytest.raises(InputError):
        Potential.polynomial([[0.0, 0.0, 0.5, 0.0, 1.0]])


def test_lambda_range():
    with pytest.raises(InputError):
        Potential.cosine_perturbed(1, 0.7)


def test_potential_dict_round_trip():
    for pot in builtin_potentials() + [Potential.anisotropic([1.0, 1.3])]:
        assert Potential.from_dict(pot.to_dict()) == pot


def test_confining_and_bounded_hessian():
    for pot in builtin_potentials():
        near = pot.value(np.array([0.1]))
        far = pot.value(np.array([50.0]))
        assert far > 100 * near
        grid = np.linspace(-100, 100, 2001)
        hess = np.array([pot.hessian(np.array([x]))[0, 0] for x in grid])
        assert np.all(np.isfinite(hess))
        assert np.max(np.abs(hess)) <= pot.hessian_bound() + 1e-12


def test_oscillator_quarter_period(osc):
    t = math.pi / 2
    fr = flow(PhasePoint([1.0], [0.0]), osc, t)
    np.testing.assert_allclose(fr.endpoint.q, [0.0], atol=1e-10)
    np.testing.assert_allclose(fr.endpoint.p, [-1.0], atol=1e-10)
    np.testing.assert_allclose(fr.M, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-10)


@pytest.mark.parametrize("pot", builtin_potentials(), ids=["osc", "cos"])
def test_zero_time_is_identity(pot):
    pt = PhasePoint([0.3], [-0.8])
    fr = flow(pt, pot, 0.0)
    np.testing.assert_array_equal(fr.endpoint.as_vector(), pt.as_vector())
    np.testing.assert_array_equal(fr.M, np.eye(2))
    assert fr.action == 0.0
    assert symplectic_residual(fr) == 0.0


def test_cosine_flow_against_taylor_oracle(cosine):
    # 30-digit Taylor-series ODE solution (mpmath.odefun), frozen
    fr = flow(PhasePoint([1.0], [0.0]), cosine, 1.0)
    np.testing.assert_allclose(fr.endpoint.q, [0.5042419995981380489], rtol=1e-11)
    np.testing.assert_allclose(fr.endpoint.p, [-0.90154741112615500896], rtol=1e-11)
    assert fr.action == pytest.approx(-0.22949853022965692617, rel=1e-11)
    fr = flow(PhasePoint([1.0], [1.0]), cosine, 0.7)
    np.testing.assert_allclose(fr.endpoint.q, [1.3873895036305439535], rtol=1e-11)
    assert fr.action == pytest.approx(-0.46523559222463287323, rel=1e-11)


def test_cosine_flow_tolerance_refinement(cosine):
    loose = flow(PhasePoint([1.0], [0.0]), cosine, 1.0)
    tight = flow(PhasePoint([1.0], [0.0]), cosine, 1.0, IntegratorSpec(rtol=3e-14, atol=1e-14))
    diff = np.max(np.abs(loose.endpoint.as_vector() - tight.endpoint.as_vector()))
    assert diff <= 10 * DEFAULT_SPEC.rtol


def test_oscillator_rotation_closed_form(osc):
    for t in np.linspace(-5, 5, 11):
        fr = flow(PhasePoint([0.7], [-0.2]), osc, t)
        c, s = math.cos(t), math.sin(t)
        R = np.array([[c, s], [-s, c]])
        np.testing.assert_allclose(fr.endpoint.as_vector(), R @ [0.7, -0.2], atol=1e-10)
        np.testing.assert_allclose(fr.M, R, atol=1e-10)


def test_symplectic_residual_levels(osc, cosine):
    assert symplectic_residual(flow(PhasePoint([0.4], [0.9]), osc, 1.3)) <= 1e-12
    fr = flow(PhasePoint([0.4], [0.9]), cosine, 5.0)
    assert symplectic_residual(fr) <= 1e-8
    blocks = symplectic_block_residuals(fr)
    assert set(blocks) == {"AtC_symmetric", "AtD_minus_CtB", "BtD_symmetric"}
    assert max(blocks.values()) <= 1e-8


def test_action_partials_at_zero(cosine):
    pt = PhasePoint([0.6], [0.8])
    dq, dp, dt = action_partials(pt, cosine, 0.0)
    np.testing.assert_allclose(dq, [0.0], atol=1e-15)
    np.testing.assert_allclose(dp, [0.0], atol=1e-15)
    assert dt == pytest.approx(0.5 * 0.8 ** 2 - float(cosine.value(np.array([0.6]))), rel=1e-14)


def _fd_partials(pt, pot, t, h=1e-5):
    def S(q, p, tt):
        return float(np.real(flow(PhasePoint([q], [p]), pot, tt).action))
    q, p = pt
    return (
        (S(q + h, p, t) - S(q - h, p, t)) / (2 * h),
        (S(q, p + h, t) - S(q, p - h, t)) / (2 * h),
        (S(q, p, t + h) - S(q, p, t - h)) / (2 * h),
    )


@pytest.mark.parametrize("pot,pt,t", [
    (Potential.isotropic(1), (1.0, 0.0), math.pi / 2),
    (Potential.cosine_perturbed(1, 0.1), (1.0, 1.0), 0.7),
])
def test_action_partials_finite_differences(pot, pt, t):
    dq, dp, dt = action_partials(PhasePoint([pt[0]], [pt[1]]), pot, t)
    fq, fp, ft = _fd_partials(pt, pot, t)
    for a, b in ((dq[0], fq), (dp[0], fp), (dt, ft)):
        assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_group_property_and_monodromy_composition(cosine):
    pt = PhasePoint([0.9], [-0.3])
    a = flow(pt, cosine, 0.6)
    b = flow(a.endpoint, cosine, 0.9)
    c = flow(pt, cosine, 1.5)
    np.testing.assert_allclose(b.endpoint.as_vector(), c.endpoint.as_vector(), atol=1e-10)
    np.testing.assert_allclose(b.M @ a.M, c.M, atol=1e-10)
    assert complex(a.action + b.action) == pytest.approx(complex(c.action), abs=1e-10)


def test_horizon_and_step_budget(cosine):
    with pytest.raises(InputError):
        flow(PhasePoint([1.0], [0.0]), cosine, 25.0)
    with pytest.raises(IntegrationError) as err:
        flow(PhasePoint([1.0], [0.0]), cosine, 10.0, IntegratorSpec(max_steps=5))
    assert err.value.diagnostics


def test_two_dimensional_anisotropic():
    pot = Potential.anisotropic([1.0, 1.5])
    fr = flow(PhasePoint([1.0, 0.5], [0.0, 0.2]), pot, 1.1)
    w = np.array([1.0, 1.5])
    q = np.array([1.0, 0.5]) * np.cos(w * 1.1) + np.array([0.0, 0.2]) * np.sin(w * 1.1) / w
    np.testing.assert_allclose(fr.endpoint.q, q, atol=1e-10)
    assert symplectic_residual(fr) <= 1e-10
