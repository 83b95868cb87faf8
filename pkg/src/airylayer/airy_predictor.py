"""
Asymptotic predictions for smoothed spectral Wigner sums.

Covers the reduced time phase Psi_E, extraction of the cubic normal-form
parameters (rho, mu), the uniform Airy-layer leading term and the
two-critical-point (non-degenerate) stationary-phase formula, plus closed
forms for the isotropic oscillator.

Orientation.  The phase is parametrized by the flow time t; the positive
critical time ``t_plus`` carries the larger critical value.  The cubic normal
form T^3/3 - rho T + mu is written in the reversed variable t' = -t, so that
its "+" critical point (the smaller critical value) is t = -t_plus and
rho >= 0 inside the energy ball.  :meth:`PhaseProfile.cfu` evaluates the
phase in that variable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .classical import DEFAULT_SPEC, IntegratorSpec, PhasePoint, Potential, flow, hamiltonian
from .errors import (
    ConsistencyError,
    DegenerateGeometryError,
    DomainError,
    InputError,
)
from .midpoint import (
    MidpointSolution,
    chord_area,
    inverse_midpoint,
    solve_midpoint,
)
from .specfun import airy_ai

__all__ = [
    "Convention",
    "DEFAULT_CONVENTION",
    "PREFACTOR_DERIVED",
    "PhaseProfile",
    "CfuNormalForm",
    "AiryLayerPrediction",
    "NondegContribution",
    "NondegPrediction",
    "OscillatorClosedForms",
    "psi_E",
    "phase_profile",
    "cfu_extract",
    "u00_coefficient",
    "predict_airy_layer",
    "predict_nondegenerate",
    "oscillator_closed_forms",
    "fit_prefactor",
    "with_prefactor",
    "rho_from_area",
    "tube_energy",
    "rho_at",
    "ray_point",
    "locate_airy_argument",
]

# pi^{-1} sqrt(2/pi): matching the nondegenerate stationary-phase sum to the
# oscillatory Airy asymptote fixes this value.  This is what the oscillator comparison gives analytically for d = 1; the
# shipped default is the value calibrated against exact data (see
# DEFAULT_CONVENTION), which agrees with it to a few parts in 1e5.
PREFACTOR_DERIVED = math.sqrt(2.0 / math.pi) / math.pi

FOLD_GAP = 2e-4        # |1 - s| below which rho and u00 are interpolated across the fold
MAX_AIRY_ARG = 25.0    # largest |hbar^{-2/3} rho| accepted by the Airy route


# ---------------------------------------------------------------------------
# Convention ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Convention:
    """
    Frozen record of the normalization choices behind a prediction.

    ``prefactor`` is the d = 1 constant C in C * hbar^{1/3 - d} * Ai(.) * u00;
    dimension d uses C * pi^{1 - d}, the (2 pi hbar)^{-d} scaling of a
    Wigner function.
    """

    convention_id: str = "cfu-rho/split-u00/osc-cal-v1"
    prefactor: float = 0.2539747776876121
    rho_source: str = "critical-values"
    u00_placement: str = "split"
    calibrated: bool = True
    calibration: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.prefactor) and self.prefactor > 0):
            raise InputError("prefactor must be positive and finite")
        if self.rho_source not in ("critical-values", "area"):
            raise InputError(f"unknown rho source {self.rho_source!r}")
        if self.u00_placement not in ("split", "joint"):
            raise InputError(f"unknown u00 placement {self.u00_placement!r}")

    def constant(self, d: int) -> float:
        return self.prefactor * math.pi ** (1 - d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Convention":
        known = {k: data[k] for k in ("convention_id", "prefactor", "rho_source",
                                      "u00_placement", "calibrated", "calibration") if k in data}
        return cls(**known)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Convention":
        return cls.from_dict(json.loads(Path(path).read_text()))


DEFAULT_CONVENTION = Convention()


# ---------------------------------------------------------------------------
# Reduced phase
# ---------------------------------------------------------------------------

def _real_if_real(v):
    v = complex(v)
    return v.real if v.imag == 0.0 else v


def _psi_from_flow(fr, xi, t, E):
    dq = fr.endpoint.q - fr.start.q
    return fr.action - np.dot(xi, dq) + t * E


def psi_E(t, x, xi, E: float, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
          seed=None):
    """
    Reduced time phase Psi_E(t, x, xi) = integral over the closed chord-arc
    loop of p.dq, minus t H(gamma(0)), plus t E, for the arc whose chord has
    midpoint (x, xi) after time t.

    The arc solves Theta^t(q, p) = (x, xi) at fixed t, so its energy floats
    with t; ``dPsi/dt = E - H(gamma(0))``.  Complex t gives the imaginary-time
    continuation used outside the energy ball.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if t == 0:
        return 0.0
    w = np.concatenate([x, xi])
    _, fr = inverse_midpoint(w, pot, t, spec, seed=seed)
    return _real_if_real(_psi_from_flow(fr, xi, t, E))


@dataclass(frozen=True)
class PhaseProfile:
    """t -> Psi_E(t, x, xi) for a fixed query, with derivative estimates."""

    query: PhasePoint
    energy: float
    pot: Potential
    spec: IntegratorSpec = DEFAULT_SPEC
    t_domain: tuple = (-math.pi, math.pi)

    def __call__(self, t):
        if not isinstance(t, complex) and not (self.t_domain[0] < t < self.t_domain[1]):
            raise DomainError(f"t = {t} outside the phase domain {self.t_domain}")
        return psi_E(t, self.query.q, self.query.p, self.energy, self.pot, self.spec)

    def cfu(self, tp):
        """Phase in the normal-form variable t' = -t."""
        return self(-tp)

    def first_derivative(self, t):
        """Exact dPsi/dt = E - H(gamma(0)) from the inverse midpoint solve."""
        if t == 0:
            return self.energy - hamiltonian(self.query, self.pot)
        w = self.query.as_vector()
        z, _ = inverse_midpoint(w, self.pot, t, self.spec)
        return _real_if_real(self.energy - hamiltonian(PhasePoint.from_vector(z), self.pot))

    def derivative(self, t, order: int, step: float = 1e-3, method: str = "fd",
                   orientation: str = "time"):
        """
        Central finite-difference estimate of d^k Psi / dt^k.

        ``method="fd"`` differences phase values only; ``"first"``
        differences the exact first derivative.  ``orientation="cfu"``
        differentiates in t' = -t (odd orders change sign).
        """
        if order not in (1, 2, 3):
            raise InputError("order must be 1, 2 or 3")
        h = step
        if method == "fd":
            f = self
            if order == 1:
                val = (f(t + h) - f(t - h)) / (2 * h)
            elif order == 2:
                val = (f(t + h) - 2 * f(t) + f(t - h)) / h ** 2
            else:
                val = (f(t + 2 * h) - 2 * f(t + h) + 2 * f(t - h) - f(t - 2 * h)) / (2 * h ** 3)
        elif method == "first":
            g = self.first_derivative
            if order == 1:
                val = g(t)
            elif order == 2:
                val = (g(t + h) - g(t - h)) / (2 * h)
            else:
                val = (g(t + h) - 2 * g(t) + g(t - h)) / h ** 2
        else:
            raise InputError(f"unknown method {method!r}")
        if orientation == "cfu" and order % 2 == 1:
            val = -val
        elif orientation not in ("time", "cfu"):
            raise InputError(f"unknown orientation {orientation!r}")
        return val


def phase_profile(x, xi, E: float, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                  t_domain=(-math.pi, math.pi)) -> PhaseProfile:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return PhaseProfile(PhasePoint(x, xi), float(E), pot, spec, tuple(t_domain))


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CfuNormalForm:
    """
    Parameters of T^3/3 - rho T + mu.  ``rho < 0`` outside the energy ball,
    where the critical points are complex and ``phi_plus``/``phi_minus`` are
    imaginary.
    """

    rho: float
    mu: float
    phi_plus: complex
    phi_minus: complex

    @property
    def rho32(self) -> float:
        return math.copysign(abs(self.rho) ** 1.5, self.rho)


def cfu_extract(profile: PhaseProfile, sol: MidpointSolution, tol: float = 1e-12) -> CfuNormalForm:
    """
    (rho, mu) from the two critical values.

    rho^{3/2} = (3/4)(phi_- - phi_+) and mu = (phi_- + phi_+)/2, where phi_+
    is the smaller critical value (attained at t = -t_plus).  Outside the
    ball the gap is imaginary and rho = -((3/4)|gap|)^{2/3}.
    """
    if sol.tau == 0.0:
        return CfuNormalForm(0.0, 0.0, 0.0, 0.0)
    tp = sol.t_plus
    seed_plus = sol.base.as_vector() if sol.branch > 0 else sol.endpoint.as_vector()
    phi_minus = psi_E(tp, profile.query.q, profile.query.p, profile.energy, profile.pot,
                      profile.spec, seed=seed_plus)
    phi_plus = psi_E(-tp, profile.query.q, profile.query.p, profile.energy, profile.pot,
                     profile.spec, seed=sol.endpoint.as_vector() if sol.branch > 0
                     else sol.base.as_vector())
    gap = phi_minus - phi_plus
    if sol.tau > 0:
        r32 = 0.75 * float(np.real(gap))
        if r32 < -tol:
            raise ConsistencyError(f"negative rho^(3/2) = {r32:.3e} after orientation")
        rho = max(r32, 0.0) ** (2.0 / 3.0)
        mu = 0.5 * float(np.real(phi_minus + phi_plus))
    else:
        r32 = 0.75 * abs(complex(gap).imag)
        rho = -(r32 ** (2.0 / 3.0))
        mu = 0.5 * float(np.real(phi_minus + phi_plus))
    return CfuNormalForm(rho, mu, phi_plus, phi_minus)


def rho_from_area(sol: MidpointSolution) -> float:
    """rho from the chord-arc area, rho^{3/2} = (3/2) area (cross-check route)."""
    a = chord_area(sol)
    if isinstance(a, complex):
        return -((1.5 * abs(a.imag)) ** (2.0 / 3.0))
    return (1.5 * max(a, 0.0)) ** (2.0 / 3.0)


def _det1pM(sol: MidpointSolution) -> complex:
    d = sol.flow.A.shape[0]
    return np.linalg.det(np.eye(2 * d) + sol.flow.M)


def u00_coefficient(sol: MidpointSolution, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                    rho: Optional[float] = None, placement: str = "split") -> float:
    """
    Leading Airy amplitude sqrt(pi) |rho|^{1/4} |dt/dE|^{1/2} |det(1+M)|^{-1/2}.

    ``placement="joint"`` uses |rho|^{1/4} |dt/dE * det(1+M)|^{-1/2} instead,
    which vanishes at the fold; it is kept for comparison only.
    """
    if sol.tau == 0.0:
        raise DegenerateGeometryError("u00 needs t_plus != 0; interpolate across the fold")
    dtde = sol.dt_dE
    if dtde is None:
        from .midpoint import dt_dE as _dt
        dtde = _dt(sol, pot, spec)
    if rho is None:
        rho = cfu_extract(phase_profile(sol.query.q, sol.query.p, sol.energy, pot, spec), sol).rho
    det = abs(_det1pM(sol))
    if det == 0:
        raise DegenerateGeometryError("det(1 + M) vanishes on the critical arc")
    if placement == "split":
        return math.sqrt(math.pi) * abs(rho) ** 0.25 * abs(dtde) ** 0.5 * det ** -0.5
    if placement == "joint":
        return math.sqrt(math.pi) * abs(rho) ** 0.25 * abs(dtde * det) ** -0.5
    raise InputError(f"unknown u00 placement {placement!r}")


# ---------------------------------------------------------------------------
# Airy-layer prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AiryLayerPrediction:
    rho: float
    mu: float
    u00: float
    hbar: float
    value: float
    convention_id: str
    s: float
    airy_argument: float
    interpolated: bool = False
    u10: Optional[float] = None     # slot for the Ai' coefficient (not computed)


def _local_data(x, xi, E, pot, spec, convention):
    """rho, mu, u00 and s at a query strictly off the fold."""
    sol = solve_midpoint(x, xi, E, pot, spec, allow_exterior=True)
    prof = phase_profile(x, xi, E, pot, spec)
    cfu = cfu_extract(prof, sol)
    rho = cfu.rho if convention.rho_source == "critical-values" else rho_from_area(sol)
    u00 = u00_coefficient(sol, pot, spec, rho=rho, placement=convention.u00_placement)
    return rho, cfu.mu, u00, sol.s


def tube_energy(u: float, E: float, hbar: float) -> float:
    """H on the tube level u: H = E + u (hbar / 2E)^{2/3}."""
    return E + u * (hbar / (2.0 * E)) ** (2.0 / 3.0)


def rho_at(x, xi, E: float, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC) -> float:
    """rho at a query off the fold (no dt/dE, so cheaper than a full prediction)."""
    sol = solve_midpoint(x, xi, E, pot, spec, allow_exterior=True, with_dt_dE=False)
    return cfu_extract(phase_profile(x, xi, E, pot, spec), sol).rho


def ray_point(w, pot: Potential, target_H: float) -> np.ndarray:
    """Point on the grad-H ray through w (extended as a straight line) with H = target_H."""
    return _ray_point(np.asarray(w, dtype=float), pot, target_H)


def locate_airy_argument(w, E: float, hbar: float, target: float, pot: Potential,
                         spec: IntegratorSpec = DEFAULT_SPEC) -> np.ndarray:
    """
    Point on the grad-H ray through w at which -hbar^{-2/3} rho equals
    ``target`` (negative: inside the ball).  Bracketed from the oscillator
    estimate rho ~ 2^{2/3} E^{-1/3} (E - H).
    """
    from scipy.optimize import brentq

    if not target < 0:
        raise InputError("target Airy argument must be negative")
    d = pot.dimension
    guess = -target * hbar ** (2.0 / 3.0) * E ** (1.0 / 3.0) * 2.0 ** (-2.0 / 3.0)

    def f(gap):
        z = _ray_point(w, pot, E - gap)
        return -rho_at(z[:d], z[d:], E, pot, spec) * hbar ** (-2.0 / 3.0) - target

    lo, hi = 0.5 * guess, 2.0 * guess
    for _ in range(20):
        if f(lo) * f(hi) < 0:
            break
        lo, hi = 0.5 * lo, 2.0 * hi
    else:
        raise DomainError("could not bracket the requested Airy argument on the ray")
    gap = brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)
    return _ray_point(w, pot, E - gap)


def _ray_point(w, pot, target_H):
    """Move from w along grad H to the level target_H (Newton along the ray)."""
    d = pot.dimension
    grad = np.concatenate([pot.gradient(w[:d]), w[d:]])
    n = grad / np.dot(grad, grad)
    sigma = 0.0
    for _ in range(30):
        z = w + sigma * n
        H = 0.5 * np.dot(z[d:], z[d:]) + pot.value(z[:d])
        g = np.concatenate([pot.gradient(z[:d]), z[d:]])
        step = (H - target_H) / np.dot(g, n)
        sigma -= step
        if abs(step) < 1e-16 * max(1.0, abs(sigma)):
            break
    return w + sigma * n


def predict_airy_layer(x, xi, E: float, hbar: float, pot: Potential,
                       spec: IntegratorSpec = DEFAULT_SPEC,
                       convention: Convention = DEFAULT_CONVENTION,
                       max_argument: float = MAX_AIRY_ARG,
                       fold_gap: float = FOLD_GAP) -> AiryLayerPrediction:
    """
    Leading Airy-layer term C hbar^{1/3-d} Ai(-hbar^{-2/3} rho) u00.

    Queries with ``|1 - s| < fold_gap`` take rho and u00 by linear
    interpolation in H between the two points of the grad-H ray at
    s = 1 -/+ fold_gap, because dt/dE is singular exactly on the fold.

    Raises
    ------
    DomainError
        If ``|hbar^{-2/3} rho|`` exceeds ``max_argument`` (use
        :func:`predict_nondegenerate` there) or the query leaves the tube.
    """
    if not hbar > 0:
        raise InputError("hbar must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = pot.dimension
    w = np.concatenate([x, xi])
    H = 0.5 * np.dot(xi, xi) + pot.value(x)
    s = H / E
    interpolated = abs(1.0 - s) < fold_gap
    if interpolated:
        vals = []
        for sgn in (-1.0, 1.0):
            Hk = E * (1.0 + sgn * fold_gap)
            zk = _ray_point(w, pot, Hk)
            vals.append((Hk,) + _local_data(zk[:d], zk[d:], E, pot, spec, convention))
        (H0, r0, m0, u0, _), (H1, r1, m1, u1, _) = vals
        lam = (H - H0) / (H1 - H0)
        rho = r0 + lam * (r1 - r0)
        mu = m0 + lam * (m1 - m0)
        u00 = u0 + lam * (u1 - u0)
    else:
        rho, mu, u00, s = _local_data(x, xi, E, pot, spec, convention)
    arg = -rho * hbar ** (-2.0 / 3.0)
    if abs(arg) > max_argument:
        raise DomainError(f"|hbar^(-2/3) rho| = {abs(arg):.3g} exceeds {max_argument}; "
                          "outside the Airy layer")
    value = convention.constant(d) * hbar ** (1.0 / 3.0 - d) * airy_ai(arg) * u00
    return AiryLayerPrediction(rho=float(rho), mu=float(mu), u00=float(u00), hbar=hbar,
                               value=float(value), convention_id=convention.convention_id,
                               s=float(s), airy_argument=float(arg),
                               interpolated=bool(interpolated))


# ---------------------------------------------------------------------------
# Non-degenerate (two separated critical times) formula
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NondegContribution:
    t_j: float
    S_j: float
    m_j: float
    amplitude: float
    weight: float
    crossings: int = 0


@dataclass(frozen=True)
class NondegPrediction:
    value: float
    contributions: tuple
    rho: float
    hbar: float
    convention_id: str


def _window_fhat(window) -> Callable:
    if callable(window) and not hasattr(window, "fhat"):
        return window
    return window.fhat


def _det_crossings(sol: MidpointSolution, pot, spec, samples: int = 64) -> int:
    """Sign changes of det(1 + M_s) for s between 0 and the branch time."""
    fr = sol.flow
    if fr.dense is None:
        fr = flow(sol.base, pot, sol.t, spec, dense=True)
    d = fr.A.shape[0]
    sig = np.linspace(0.0, 1.0, samples + 1)
    dets = np.real(np.linalg.det(np.eye(2 * d)[None] + fr.monodromy_at(sig)))
    return int(np.sum(np.signbit(dets[1:]) != np.signbit(dets[:-1])))


def predict_nondegenerate(x, xi, E: float, hbar: float, window, pot: Potential,
                          spec: IntegratorSpec = DEFAULT_SPEC,
                          convention: Convention = DEFAULT_CONVENTION,
                          min_argument: float = 20.0) -> NondegPrediction:
    """
    Two-critical-time stationary-phase prediction

        C/C0 (2 pi hbar)^{-d} 2^d sqrt(hbar / 2 pi)
            sum_j fhat(t_j) |dt_j/dE|^{1/2} |det(1+M_j)|^{-1/2} cos(S_j/hbar + m_j)

    with S_j = Psi_E(t_j), m_j = sgn(Psi''(t_j)) pi/4 - (pi/2) n_j where n_j
    counts zeros of det(1 + M_s) along the arc, and C/C0 the ratio of the
    active to the analytic Airy prefactor (one constant for both routes).

    Raises
    ------
    DegenerateGeometryError
        When fhat(0) != 0 and the query sits inside the Airy layer
        (``hbar^{-2/3} rho < min_argument``).
    DomainError
        Outside the energy ball (no real critical times).
    """
    fhat = _window_fhat(window)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = pot.dimension
    sol = solve_midpoint(x, xi, E, pot, spec)
    prof = phase_profile(x, xi, E, pot, spec)
    cfu = cfu_extract(prof, sol)
    if fhat(0.0) != 0.0 and cfu.rho * hbar ** (-2.0 / 3.0) < min_argument:
        raise DegenerateGeometryError(
            "critical times too close to coalescence for the non-degenerate formula; "
            "use predict_airy_layer")
    contribs = []
    total = 0.0
    for branch_sol, S in ((sol, cfu.phi_minus), (sol.reverse(), cfu.phi_plus)):
        t_j = float(np.real(branch_sol.t))
        wgt = float(fhat(t_j))
        dtde = branch_sol.dt_dE
        det = abs(_det1pM(branch_sol))
        if det == 0:
            raise DegenerateGeometryError("det(1 + M) vanishes at a critical time")
        amp = abs(dtde) ** 0.5 * det ** -0.5
        # Psi'' = -(dt_j/dE)^{-1} in the time variable
        m = -math.copysign(1.0, dtde) * math.pi / 4.0
        n = _det_crossings(branch_sol, pot, spec) if wgt != 0.0 else 0
        m -= n * math.pi / 2.0
        contribs.append(NondegContribution(t_j, float(np.real(S)), m, amp, wgt, n))
        total += wgt * amp * math.cos(float(np.real(S)) / hbar + m)
    scale = convention.constant(d) / (PREFACTOR_DERIVED * math.pi ** (1 - d))
    value = scale * (2 * math.pi * hbar) ** (-d) * 2 ** d * math.sqrt(hbar / (2 * math.pi)) * total
    return NondegPrediction(float(value), tuple(contribs), cfu.rho, hbar,
                            convention.convention_id)


# ---------------------------------------------------------------------------
# Oscillator closed forms and calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatorClosedForms:
    s: float
    E: float
    beta: float
    B2: float
    alpha0: float
    t_plus: float
    det_1pM: float
    dt_dE: float
    area: float
    rho: float


def oscillator_closed_forms(s: float, E: float = 1.0, d: int = 1,
                            alpha: float = 1.0) -> OscillatorClosedForms:
    """
    Closed forms for H = (|p|^2 + |q|^2)/2 at s = H(x, xi)/E in (0, 1].

    ``alpha`` is the unspecified exponent in the s^{(1-alpha)/2} factor of
    alpha0; the default 1 drops that factor.  At s = 1 the limits are
    returned (alpha0 = 2^{1/3}, dt/dE = inf).
    """
    if not 0.0 < s <= 1.0:
        raise InputError("s must lie in (0, 1]")
    if not E > 0:
        raise InputError("E must be positive")
    rs = math.sqrt(s)
    beta = 0.5 * (math.acos(rs) - math.sqrt(s - s * s))
    B2 = -((1.5 * beta) ** (2.0 / 3.0))
    t = 2.0 * math.acos(rs)
    if s < 1.0:
        alpha0 = s ** ((1 - alpha) / 2) * math.sqrt(2 * math.sqrt(-B2)) / ((1 - s) ** 0.25 * s ** 0.75)
        dtde = rs / (E * math.sqrt(1.0 - s))
    else:
        alpha0 = 2.0 ** (1.0 / 3.0)
        dtde = math.inf
    det = (2.0 * (1.0 + math.cos(t))) ** d
    area = E * (t - math.sin(t))
    rho = (1.5 * area) ** (2.0 / 3.0)
    return OscillatorClosedForms(s, E, beta, B2, alpha0, t, det, dtde, area, rho)


def fit_prefactor(unit_predictions, exact) -> float:
    """
    Least-squares constant C minimizing sum (C p_i - e_i)^2 for predictions
    p_i made with C = 1.
    """
    p = np.asarray(unit_predictions, dtype=float)
    e = np.asarray(exact, dtype=float)
    if p.shape != e.shape or p.size == 0:
        raise InputError("need matching non-empty prediction and exact arrays")
    den = float(np.dot(p, p))
    if den == 0:
        raise InputError("all unit predictions vanish")
    return float(np.dot(p, e) / den)


def with_prefactor(convention: Convention, prefactor: float, convention_id: Optional[str] = None,
                   **info) -> Convention:
    """Copy of ``convention`` with a fitted prefactor; ``info`` records the calibration data."""
    return replace(convention, prefactor=float(prefactor), calibrated=True,
                   convention_id=convention_id or convention.convention_id,
                   calibration=dict(info))
