"""
Real-argument Airy function, oscillator eigenfunctions and Laguerre polynomials.

Ai and Ai' use the Maclaurin series inside ``|x| <= switch_radius`` and the
standard large-argument expansions outside.  The series terms grow like
exp(2/3 |x|^{3/2}) before cancelling, so beyond |x| = 2 they are summed in
40-digit decimal arithmetic; the switch radius 7 is then set by the optimal
truncation error of the asymptotic series alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .errors import InputError

__all__ = [
    "SpecFunAccuracy",
    "airy_ai",
    "airy_ai_prime",
    "airy_ai_and_prime",
    "AIRY_AI_ZEROS",
    "AIRY_AI_PRIME_ZEROS",
    "hermite_state",
    "hermite_states",
    "laguerre",
    "laguerre_scaled",
    "laguerre_scaled_sequence",
]

AI0 = 0.355028053887817239260063186004      # 3^{-2/3} / Gamma(2/3)
AIP0 = -0.258819403792806798405183560189    # -3^{-1/3} / Gamma(1/3)
_AI0_DEC = Decimal("0.355028053887817239260063186004183176398")
_MAIP0_DEC = Decimal("0.2588194037928067984051835601892039634791")
_DECIMAL_FROM = 2.0

# first zeros of Ai and Ai' (negative real axis)
AIRY_AI_ZEROS = (-2.338107410459767, -4.087949444130971, -5.520559828095551)
AIRY_AI_PRIME_ZEROS = (-1.018792971647471, -3.248197582179837, -4.820099211178736)


@dataclass(frozen=True)
class SpecFunAccuracy:
    target: float = 1e-10
    switch_radius: float = 7.0

    def __post_init__(self):
        if not (self.target > 0 and self.switch_radius > 0):
            raise InputError("accuracy target and switch radius must be positive")


DEFAULT_ACCURACY = SpecFunAccuracy()


def _asymptotic_coefficients(n):
    u = [1.0]
    for k in range(1, n):
        # u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / ((2k-1) 216 k)
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return np.array(u), np.array(v)


_U, _V = _asymptotic_coefficients(40)


def _series(x):
    """Maclaurin series for (Ai, Ai') at scalar x."""
    if abs(x) > _DECIMAL_FROM:
        return _series_decimal(x)
    f, g, fp, gp = 1.0, x, 0.0, 1.0
    a, b = 1.0, 1.0
    x3 = x * x * x
    xk = 1.0          # x^{3k}
    k = 0
    while True:
        k += 1
        a /= (3 * k - 1) * (3 * k)
        b /= (3 * k) * (3 * k + 1)
        xk_prev = xk
        xk *= x3
        tf = a * xk
        tg = b * xk * x
        tfp = 3 * k * a * xk_prev * x * x
        tgp = (3 * k + 1) * b * xk
        f += tf
        g += tg
        fp += tfp
        gp += tgp
        if max(abs(tf), abs(tg), abs(tfp), abs(tgp)) < 1e-18 * max(1.0, abs(f), abs(g)) or k > 200:
            break
    c1, c2 = AI0, -AIP0
    return c1 * f - c2 * g, c1 * fp - c2 * gp


def _series_decimal(x):
    with localcontext() as ctx:
        ctx.prec = 40
        X = Decimal(x)          # exact conversion of the double
        X3 = X * X * X
        f, g, fp, gp = Decimal(1), X, Decimal(0), Decimal(1)
        tf, tg = Decimal(1), X
        k = 0
        tiny = Decimal("1e-36")
        while True:
            k += 1
            # d/dx of the new f term uses the previous one: 3k a_k x^{3k-1}
            tfp = tf * X * X / (3 * k - 1)
            tgp = tg * X * X / (3 * k)
            tf = tf * X3 / ((3 * k - 1) * (3 * k))
            tg = tg * X3 / ((3 * k) * (3 * k + 1))
            f += tf
            g += tg
            fp += tfp
            gp += tgp
            if max(abs(tf), abs(tg), abs(tfp), abs(tgp)) < tiny or k > 300:
                break
        ai = _AI0_DEC * f - _MAIP0_DEC * g
        aip = _AI0_DEC * fp - _MAIP0_DEC * gp
        return float(ai), float(aip)


def _truncated(coeffs, z, signs):
    """Sum sign_k c_k z^{-k}, stopping at the smallest term."""
    total = 0.0
    prev = math.inf
    zk = 1.0
    for k, c in enumerate(coeffs):
        term = signs[k] * c * zk
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-17 * abs(total):
            break
        zk /= z
    return total


def _asymptotic(x):
    if x > 0:
        zeta = 2.0 / 3.0 * x ** 1.5
        alt = [(-1) ** k for k in range(len(_U))]
        su = _truncated(_U, zeta, alt)
        sv = _truncated(_V, zeta, alt)
        e = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
        return e * su / x ** 0.25, -e * x ** 0.25 * sv
    y = -x
    zeta = 2.0 / 3.0 * y ** 1.5
    # even / odd parts of the series in 1/zeta
    ue, uo = _U[0::2], _U[1::2]
    ve, vo = _V[0::2], _V[1::2]
    alt = [(-1) ** k for k in range(len(ue))]
    z2 = zeta * zeta
    pu = _truncated(ue, z2, alt)
    qu = _truncated(uo, z2, alt) / zeta
    pv = _truncated(ve, z2, alt)
    qv = _truncated(vo, z2, alt) / zeta
    ph = zeta - math.pi / 4.0
    c, s = math.cos(ph), math.sin(ph)
    ai = (c * pu + s * qu) / (math.sqrt(math.pi) * y ** 0.25)
    aip = y ** 0.25 * (s * pv - c * qv) / math.sqrt(math.pi)
    return ai, aip


def _scalar(x, acc):
    if not math.isfinite(x):
        raise InputError("Airy argument must be finite")
    if abs(x) <= acc.switch_radius:
        return _series(x)
    return _asymptotic(x)


def airy_ai_and_prime(x, accuracy: SpecFunAccuracy = DEFAULT_ACCURACY):
    """(Ai(x), Ai'(x)) for real scalar or array x."""
    xa = np.asarray(x, dtype=float)
    flat = xa.ravel()
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    for i, v in enumerate(flat):
        ai[i], aip[i] = _scalar(float(v), accuracy)
    if xa.ndim == 0:
        return float(ai[0]), float(aip[0])
    return ai.reshape(xa.shape), aip.reshape(xa.shape)


def airy_ai(x, accuracy: SpecFunAccuracy = DEFAULT_ACCURACY):
    return airy_ai_and_prime(x, accuracy)[0]


def airy_ai_prime(x, accuracy: SpecFunAccuracy = DEFAULT_ACCURACY):
    return airy_ai_and_prime(x, accuracy)[1]


# ---------------------------------------------------------------------------
# Oscillator eigenfunctions
# ---------------------------------------------------------------------------

_BIG = 1e150


def hermite_states(nmax: int, x, hbar: float) -> np.ndarray:
    """
    Normalized eigenfunctions phi_0 .. phi_nmax of -hbar^2/2 d^2 + x^2/2.

    Returns an array of shape (nmax + 1,) + shape(x).  The three-term
    recurrence runs on mantissas with a per-point log scale, so the Gaussian
    factor never underflows for large n.
    """
    if not hbar > 0:
        raise InputError("hbar must be positive")
    if nmax < 0 or nmax > 100_000:
        raise InputError("n must lie in [0, 1e5]")
    x = np.asarray(x, dtype=float)
    y = (x / math.sqrt(hbar)).ravel()
    logscale = -0.5 * y * y
    prev = np.zeros_like(y)
    cur = np.full_like(y, (math.pi * hbar) ** -0.25)
    out = np.empty((nmax + 1, y.size))
    out[0] = cur * np.exp(logscale)
    for k in range(nmax):
        nxt = math.sqrt(2.0 / (k + 1)) * y * cur - math.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if np.any(big):
            prev[big] /= _BIG
            cur[big] /= _BIG
            logscale[big] += math.log(_BIG)
        out[k + 1] = cur * np.exp(logscale)
    return out.reshape((nmax + 1,) + x.shape)


def hermite_state(n: int, x, hbar: float):
    """The L2-normalized n-th oscillator eigenfunction at x."""
    v = hermite_states(n, x, hbar)[n]
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# Laguerre
# ---------------------------------------------------------------------------

def laguerre(n: int, x):
    """L_n(x) by forward recurrence."""
    if n < 0 or n > 100_000:
        raise InputError("n must lie in [0, 1e5]")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if x.ndim else float(prev)
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur if x.ndim else float(cur)


def laguerre_scaled(n: int, x):
    """L_n(x) * exp(-x/2), stable for large n and x (log-scaled recurrence)."""
    if n < 0 or n > 100_000:
        raise InputError("n must lie in [0, 1e5]")
    x = np.asarray(x, dtype=float)
    xs = x.ravel()
    logscale = -0.5 * xs
    prev = np.ones_like(xs)
    cur = 1.0 - xs
    if n == 0:
        out = np.exp(logscale)
    else:
        for k in range(1, n):
            prev, cur = cur, ((2 * k + 1 - xs) * cur - k * prev) / (k + 1)
            big = np.abs(cur) > _BIG
            if np.any(big):
                prev[big] /= _BIG
                cur[big] /= _BIG
                logscale[big] += math.log(_BIG)
        with np.errstate(under="ignore"):
            out = cur * np.exp(logscale)
    out = out.reshape(x.shape)
    return out if x.ndim else float(out)


def laguerre_scaled_sequence(nmax: int, x) -> np.ndarray:
    """All L_n(x) exp(-x/2) for n = 0..nmax, shape (nmax + 1,) + shape(x)."""
    if nmax < 0 or nmax > 100_000:
        raise InputError("n must lie in [0, 1e5]")
    x = np.asarray(x, dtype=float)
    xs = x.ravel()
    logscale = -0.5 * xs
    out = np.empty((nmax + 1, xs.size))
    prev = np.ones_like(xs)
    cur = 1.0 - xs
    with np.errstate(under="ignore"):
        out[0] = np.exp(logscale)
        if nmax >= 1:
            out[1] = cur * np.exp(logscale)
        for k in range(1, nmax):
            prev, cur = cur, ((2 * k + 1 - xs) * cur - k * prev) / (k + 1)
            big = np.abs(cur) > _BIG
            if np.any(big):
                prev[big] /= _BIG
                cur[big] /= _BIG
                logscale[big] += math.log(_BIG)
            out[k + 1] = cur * np.exp(logscale)
    return out.reshape((nmax + 1,) + x.shape)
