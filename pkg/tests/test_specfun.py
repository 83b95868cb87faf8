from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from airylayer import (
    AIRY_AI_PRIME_ZEROS,
    AIRY_AI_ZEROS,
    InputError,
    SpecFunAccuracy,
    airy_ai,
    airy_ai_and_prime,
    airy_ai_prime,
    hermite_state,
    hermite_states,
    laguerre,
    laguerre_scaled,
)

# (x, Ai(x), Ai'(x)) at 30 digits from mpmath, frozen
AIRY_TABLE = [
    (-20.0, -0.17640612707798468959, 0.8928628567364712384),
    (-7.5, 0.32177571638064787527, 0.31880950669855459621),
    (-3.0, -0.37881429367765807435, 0.31458376921659881365),
    (-1.0, 0.5355608832923521188, -0.010160567116645209395),
    (0.0, 0.35502805388781723926, -0.25881940379280679841),
    (0.5, 0.23169360648083348977, -0.22491053266468389314),
    (3.0, 0.0065911393574607191443, -0.011912976705951318474),
    (7.0, 7.4921288639971670808e-7, -2.0081508947387919912e-6),
    (12.0, 1.393184688875360839e-13, -4.854736554985308463e-13),
]


@pytest.mark.parametrize("x,ai,aip", AIRY_TABLE)
def test_airy_frozen_table(x, ai, aip):
    a, b = airy_ai_and_prime(x)
    assert abs(a - ai) <= 1e-10
    assert abs(b - aip) <= 1e-10 * max(1.0, abs(x))


def test_airy_at_zero_closed_form():
    assert airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), abs=1e-14)
    assert airy_ai_prime(0.0) == pytest.approx(-(3 ** (-1 / 3)) / math.gamma(1 / 3), abs=1e-14)


def test_airy_oscillatory_asymptote():
    t = 20.0
    approx = math.cos(2 / 3 * t ** 1.5 - math.pi / 4) / (math.sqrt(math.pi) * t ** 0.25)
    assert abs(airy_ai(-t) / approx - 1) <= 2e-3


@given(st.floats(min_value=-50.0, max_value=50.0))
def test_airy_against_mpmath(x):
    a, b = airy_ai_and_prime(x)
    assert abs(a - float(mpmath.airyai(x))) <= 1e-10
    # Ai' grows like |x|^{1/4} on the negative axis; absolute target scaled
    assert abs(b - float(mpmath.airyai(x, 1))) <= 1e-10 * max(1.0, abs(x) ** 0.25)


def test_airy_ode_residual():
    x = np.linspace(-20, 8, 561)
    ai = airy_ai(x)
    # five-point stencil; the step balances roundoff against O(h^4 x^3) truncation
    h = 5e-3
    d2 = (-airy_ai(x + 2 * h) + 16 * airy_ai(x + h) - 30 * ai + 16 * airy_ai(x - h)
          - airy_ai(x - 2 * h)) / (12 * h ** 2)
    assert np.max(np.abs(d2 - x * ai)) <= 1e-7


def test_airy_prime_consistent_with_fd():
    x = np.linspace(-20, 8, 281)
    h = 2e-3
    fd = (-airy_ai(x + 2 * h) + 8 * airy_ai(x + h) - 8 * airy_ai(x - h)
          + airy_ai(x - 2 * h)) / (12 * h)
    assert np.max(np.abs(fd - airy_ai_prime(x))) <= 1e-7


def test_airy_continuous_at_switch_radius():
    r = SpecFunAccuracy().switch_radius
    for x0 in (-r, r):
        lo, hi = airy_ai_and_prime(np.array([x0 - 1e-12, x0 + 1e-12]))
        assert abs(lo[0] - lo[1]) <= 1e-10
        assert abs(hi[0] - hi[1]) <= 1e-10


def test_airy_zero_tables():
    for z in AIRY_AI_ZEROS[:3]:
        assert abs(airy_ai(z)) <= 1e-10
    for z in AIRY_AI_PRIME_ZEROS[:3]:
        assert abs(airy_ai_prime(z)) <= 1e-10
    assert AIRY_AI_ZEROS[0] == pytest.approx(-2.338107410459767, abs=1e-12)


def test_accuracy_validation():
    with pytest.raises(InputError):
        SpecFunAccuracy(target=-1.0)


def test_hermite_ground_state_and_parity():
    x = np.linspace(-1, 1, 11)
    hbar = 0.05
    np.testing.assert_allclose(hermite_state(0, x, hbar),
                               (math.pi * hbar) ** -0.25 * np.exp(-x ** 2 / (2 * hbar)),
                               rtol=1e-14)
    assert hermite_state(1, 0.0, hbar) == 0.0
    np.testing.assert_allclose(hermite_state(7, -x, hbar), -hermite_state(7, x, hbar), rtol=1e-13)


def test_hermite_orthonormality():
    hbar = 0.1
    x = np.linspace(-6, 6, 8001)
    phi = hermite_states(50, x, hbar)
    gram = phi @ phi.T * (x[1] - x[0])
    assert np.max(np.abs(gram - np.eye(51))) <= 1e-8


def test_hermite_norms_up_to_1000():
    hbar = 1.0
    x = np.linspace(-50, 50, 40001)
    phi = hermite_states(1000, x, hbar)
    norms = np.sum(phi ** 2, axis=1) * (x[1] - x[0])
    assert np.all(np.abs(norms - 1) <= 1e-7)


def test_hermite_eigen_equation():
    # -hbar^2/2 phi'' + x^2/2 phi = hbar (n + 1/2) phi via finite differences
    hbar, n = 0.05, 12
    x = np.linspace(-1.5, 1.5, 3001)
    h = x[1] - x[0]
    phi = hermite_state(n, x, hbar)
    lap = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h ** 2
    res = -0.5 * hbar ** 2 * lap + 0.5 * x[1:-1] ** 2 * phi[1:-1] - hbar * (n + 0.5) * phi[1:-1]
    assert np.max(np.abs(res)) <= 1e-4 * np.max(np.abs(phi))


def test_laguerre_low_orders():
    x = np.linspace(0, 10, 7)
    np.testing.assert_array_equal(laguerre(0, x), np.ones_like(x))
    np.testing.assert_allclose(laguerre(1, x), 1 - x)
    # coefficient expansion: (-x^5 + 25x^4 - 200x^3 + 600x^2 - 600x + 120)/120
    assert laguerre(5, 2.0) == pytest.approx(88 / 120, rel=1e-14)


@given(st.integers(min_value=0, max_value=400), st.floats(min_value=0.0, max_value=200.0))
def test_laguerre_scaled_against_mpmath(n, x):
    ref = float(mpmath.laguerre(n, 0, x) * mpmath.exp(-x / 2))
    assert abs(laguerre_scaled(n, x) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_bad_orders():
    with pytest.raises(InputError):
        laguerre(-1, 1.0)
    with pytest.raises(InputError):
        hermite_states(3, 0.0, -1.0)
