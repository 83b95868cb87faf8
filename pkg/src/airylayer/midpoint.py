"""
Midpoint map Theta^t = (I + Phi^t)/2, its inversion near the energy surface,
critical times, dt/dE, chord-arc areas and fold diagnostics.

The critical-time problem ``Theta^t(q, p) = (x, xi), H(q, p) = E`` is solved
as a scalar root-finding problem in ``tau = t^2``: for fixed t the inverse
midpoint map is well posed near the energy surface, and the energy of the
inverted base point is an even, smooth function of t.  Writing it in ``tau``
makes the fold regular, and lets the same iteration cross to the exterior of
the energy ball, where ``tau < 0`` and the arcs run in imaginary time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .classical import (
    DEFAULT_SPEC,
    FlowResult,
    IntegratorSpec,
    PhasePoint,
    Potential,
    flow,
    hamilton_vector_field,
    hamiltonian,
)
from .errors import DegenerateGeometryError, DomainError, InputError, SolverError

__all__ = [
    "ArcSamples",
    "MidpointSolution",
    "FoldDiagnostics",
    "midpoint_map",
    "inverse_midpoint",
    "solve_midpoint",
    "dt_dE",
    "dt_dE_jacobi",
    "chord_area",
    "green_area",
    "arc_action",
    "fold_diagnostics",
    "oscillator_inverse_midpoint",
]

DEFAULT_TUBE = 0.5
ARC_NODES = 64


@dataclass(frozen=True)
class ArcSamples:
    """Gauss-Legendre samples of a Hamiltonian arc, in units of the arc fraction."""

    sigma: np.ndarray
    weights: np.ndarray
    q: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class MidpointSolution:
    """
    Critical arc through a query point.

    ``t_plus`` is real and positive inside the energy ball and purely
    imaginary (positive imaginary part) outside it; ``tau = t_plus**2``.
    """

    t_plus: complex
    t_minus: complex
    tau: float
    base: PhasePoint
    endpoint: PhasePoint
    energy: float
    query: PhasePoint
    s: float
    flow: FlowResult
    arc: Optional[ArcSamples] = None
    dt_dE: Optional[complex] = None
    iterations: int = 0
    branch: int = 1

    @property
    def exterior(self) -> bool:
        return self.tau < 0

    @property
    def t(self):
        """Signed time of this branch (t_plus for branch +1, t_minus for -1)."""
        return self.t_plus if self.branch > 0 else self.t_minus

    def reverse(self) -> "MidpointSolution":
        """The same arc traversed backwards: the other critical time."""
        arc = None
        if self.arc is not None:
            arc = ArcSamples(1.0 - self.arc.sigma[::-1], self.arc.weights[::-1],
                             self.arc.q[::-1], self.arc.p[::-1])
        fr = self.flow
        M = np.linalg.inv(fr.M)
        d = fr.A.shape[0]
        rev = FlowResult(t=-fr.t, start=fr.endpoint, endpoint=fr.start,
                         A=M[:d, :d], B=M[:d, d:], C=M[d:, :d], D=M[d:, d:],
                         action=-fr.action, energy=fr.energy,
                         integrator_error_estimate=fr.integrator_error_estimate)
        dt = None if self.dt_dE is None else -self.dt_dE
        return replace(self, base=self.endpoint, endpoint=self.base, flow=rev, arc=arc,
                       dt_dE=dt, branch=-self.branch)


@dataclass(frozen=True)
class FoldDiagnostics:
    kernel_residual: float
    jacobian_det_theta: float
    fold_jacobian_det: float
    direction: str = "kernel"


# ---------------------------------------------------------------------------

def _vec(pt) -> np.ndarray:
    if isinstance(pt, PhasePoint):
        return pt.as_vector()
    return np.asarray(pt)


def midpoint_map(pt, pot: Potential, t, spec: IntegratorSpec = DEFAULT_SPEC) -> PhasePoint:
    """Theta^t(q, p) = ((q, p) + Phi^t(q, p)) / 2."""
    fr = flow(pt, pot, t, spec)
    return PhasePoint.from_vector(0.5 * (fr.start.as_vector() + fr.endpoint.as_vector()))


def oscillator_inverse_midpoint(x, xi, t, omega=1.0):
    """
    Exact inverse of Theta^t for H = (p^2 + omega^2 q^2)/2 (componentwise):
    q = x - tan(omega t/2) xi / omega,  p = xi + omega tan(omega t/2) x.
    """
    k = np.tan(0.5 * np.asarray(omega) * t)
    return x - k * xi / omega, xi + omega * k * x


def _local_omega(pot: Potential, x):
    h = np.real(pot.hessian_diagonal(np.real(x)))
    return np.sqrt(np.maximum(h, 1e-2 * pot.hessian_bound()))


def _seed(w, pot: Potential, t):
    d = pot.dimension
    x, xi = w[:d], w[d:]
    if pot.kind == "user_polynomial_bounded":
        c = np.array(pot.coeffs)
        centre = -c[:, 1] / (2.0 * c[:, 2])
        omega = np.sqrt(2.0 * c[:, 2])
    else:
        centre = 0.0
        omega = _local_omega(pot, x) if pot.kind == "cosine_perturbed" else np.array(pot.omegas)
    q, p = oscillator_inverse_midpoint(x - centre, xi, t, omega)
    return np.concatenate([q + centre, p])


def inverse_midpoint(w, pot: Potential, t, spec: IntegratorSpec = DEFAULT_SPEC,
                     seed=None, tol: float = 1e-14, max_iter: int = 40):
    """
    Solve Theta^t(z) = w for z by Newton's method at fixed (possibly complex) t.

    Returns ``(z, flow_result)`` where ``flow_result`` is the flow of z for
    time t.  The Jacobian is (I + M_t)/2, regular away from t = pi-type
    caustics.
    """
    w = _vec(w)
    d = pot.dimension
    is_complex = isinstance(t, complex) or np.iscomplexobj(t)
    dtype = complex if is_complex else float
    if seed is None:
        seed = _seed(w, pot, t)
    z = np.array(seed, dtype=dtype)
    if not is_complex:
        z = np.real(z)
    scale = max(1.0, float(np.max(np.abs(w))))
    trace = []
    for it in range(max_iter):
        fr = flow(PhasePoint.from_vector(z), pot, t, spec)
        F = 0.5 * (z + fr.endpoint.as_vector()) - w
        res = float(np.max(np.abs(F)))
        trace.append(res)
        if res <= tol * scale:
            return z, fr
        J = 0.5 * (np.eye(2 * d) + fr.M)
        step = np.linalg.solve(J, F)
        z = z - step
        if it > 2 and res > 0 and float(np.max(np.abs(step))) <= 4e-16 * max(1.0, float(np.max(np.abs(z)))):
            fr = flow(PhasePoint.from_vector(z), pot, t, spec)
            return z, fr
    if trace[-1] <= 1e3 * tol * scale:
        return z, fr
    raise SolverError(f"inverse midpoint map did not converge at t={t}", trace)


def _t_of_tau(tau, branch=1):
    if tau >= 0:
        return branch * math.sqrt(tau)
    return complex(0.0, branch * math.sqrt(-tau))


def _energy_and_slope(w, pot, tau, spec, seed, branch):
    """g(tau) = H(Theta^{-t}(w)) and dg/dtau, with t = sqrt(tau)."""
    t = _t_of_tau(tau, branch)
    z, fr = inverse_midpoint(w, pot, t, spec, seed=seed)
    d = pot.dimension
    H = hamiltonian(PhasePoint.from_vector(z), pot)
    grad = np.concatenate([pot.gradient(z[:d]), z[d:]])
    zdot = -np.linalg.solve(np.eye(2 * d) + fr.M, hamilton_vector_field(fr.endpoint, pot))
    dg_dt = grad @ zdot
    slope = dg_dt / (2.0 * t)
    return float(np.real(H)), float(np.real(slope)), z, fr, dg_dt


def _solve_tau(w, E, pot, spec, tau0, seed=None, branch=1, tol=1e-15, max_iter=60):
    """Newton in tau on g(tau) = H(Theta^{-sqrt(tau)}(w)) - E, with bracketing."""
    d = pot.dimension
    H0 = float(0.5 * np.dot(w[d:], w[d:]) + pot.value(w[:d]))
    g0 = H0 - E
    lo, hi = (0.0, math.inf) if g0 < 0 else (-math.inf, 0.0)
    tau = tau0
    z = seed
    trace = []
    for it in range(max_iter):
        H, slope, z, fr, dg_dt = _energy_and_slope(w, pot, tau, spec, z, branch)
        g = H - E
        trace.append(abs(g))
        if abs(g) <= tol * max(1.0, abs(E)):
            return tau, z, fr, it + 1, dg_dt
        if g < 0:
            lo = max(lo, tau)
        else:
            hi = min(hi, tau)
        new = tau - g / slope if slope > 0 else math.nan
        if not (lo < new < hi) or not math.isfinite(new):
            if math.isfinite(lo) and math.isfinite(hi):
                new = 0.5 * (lo + hi)
            elif math.isfinite(lo):
                new = lo + 2.0 * (abs(tau - lo) + 1e-3)
            else:
                new = hi - 2.0 * (abs(hi - tau) + 1e-3)
            z = None
        if abs(new - tau) <= 1e-16 * max(1.0, abs(tau)) and it > 2:
            tau = new
            H, slope, z, fr, dg_dt = _energy_and_slope(w, pot, tau, spec, z, branch)
            return tau, z, fr, it + 1, dg_dt
        tau = new
    if trace and trace[-1] <= 1e-12 * max(1.0, abs(E)):
        return tau, z, fr, max_iter, dg_dt
    raise SolverError("critical-time iteration did not converge", trace)


def _tau_seed(pot: Potential, w, s):
    d = pot.dimension
    omega = float(np.mean(_local_omega(pot, w[:d])))
    if s <= 1.0:
        t0 = 2.0 * math.acos(math.sqrt(max(s, 0.0)))
        return (t0 / omega) ** 2
    t0 = 2.0 * math.acosh(math.sqrt(s))
    return -(t0 / omega) ** 2


def _arc_samples(fr: FlowResult, nodes: int) -> ArcSamples:
    x, wts = np.polynomial.legendre.leggauss(nodes)
    sigma = 0.5 * (x + 1.0)
    q, p = fr.state_at(sigma)
    return ArcSamples(sigma, 0.5 * wts, q, p)


def _query_energy(w, pot):
    d = pot.dimension
    return float(0.5 * np.dot(w[d:], w[d:]) + pot.value(w[:d]))


def solve_midpoint(x, xi, E: float, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                   tube: float = DEFAULT_TUBE, allow_exterior: bool = False,
                   with_dt_dE: bool = True, arc_nodes: int = ARC_NODES,
                   branch: int = 1) -> MidpointSolution:
    """
    Critical arc on Sigma_E whose chord midpoint is (x, xi).

    Parameters
    ----------
    x, xi : array_like
        Query point.
    E : float
        Energy of the arc.
    tube : float
        Largest accepted ``|1 - s|``, ``s = H(x, xi)/E``.
    allow_exterior : bool
        Accept queries outside the energy ball and return the imaginary-time
        arc instead of raising :class:`DomainError`.
    with_dt_dE : bool
        Also compute dt/dE by differentiating the solver (costs four solves).
    branch : {1, -1}
        Solve directly for the positive or the negative critical time.

    Raises
    ------
    DomainError
        Query outside the tube or outside the energy ball.
    SolverError
        Newton iteration failed; carries the residual trace.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if x.shape != (pot.dimension,) or xi.shape != (pot.dimension,):
        raise InputError("query dimension does not match the potential")
    if branch not in (1, -1):
        raise InputError("branch must be +1 or -1")
    w = np.concatenate([x, xi])
    if not E > pot.minimum_energy():
        raise DomainError("energy must exceed the minimum of H")
    Hw = _query_energy(w, pot)
    s = Hw / E
    if s > 1.0 + 1e-14 and not allow_exterior:
        raise DomainError(f"query lies outside the energy ball (s = {s:.6g})")
    if abs(1.0 - s) > tube:
        raise DomainError(f"query outside the tube |1 - s| <= {tube} (s = {s:.6g})")
    query = PhasePoint(x, xi)

    if abs(1.0 - s) <= 1e-14:
        fr = flow(query, pot, 0.0, spec, dense=True)
        return MidpointSolution(t_plus=0.0, t_minus=0.0, tau=0.0, base=query, endpoint=query,
                                energy=E, query=query, s=s, flow=fr,
                                arc=_arc_samples(fr, arc_nodes), dt_dE=None, branch=branch)

    tau, z, fr, iters, _ = _solve_tau(w, E, pot, spec, _tau_seed(pot, w, s), branch=branch)
    t = _t_of_tau(tau, branch)
    fr = flow(PhasePoint.from_vector(z), pot, t, spec, dense=True)
    t_plus = _t_of_tau(tau, 1)
    sol = MidpointSolution(t_plus=t_plus, t_minus=-t_plus, tau=tau, base=fr.start,
                           endpoint=fr.endpoint, energy=E, query=query, s=s, flow=fr,
                           arc=_arc_samples(fr, arc_nodes), iterations=iters, branch=branch)
    if with_dt_dE:
        sol = replace(sol, dt_dE=dt_dE(sol, pot, spec))
    return sol


def _t_at_energy(sol: MidpointSolution, E, pot, spec):
    w = sol.query.as_vector()
    tau, *_ = _solve_tau(w, E, pot, spec, sol.tau, seed=sol.base.as_vector()
                         if sol.branch > 0 else None, branch=1)
    return _t_of_tau(tau, 1)


def dt_dE(sol: MidpointSolution, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
          rel_step: float = 1e-6):
    """
    d t_plus / dE by Richardson-extrapolated central differences of the solver.

    Real inside the energy ball, purely imaginary outside.  The sign refers
    to ``sol.t`` (so the reversed branch gets the opposite sign).
    """
    E = sol.energy
    h = rel_step * abs(E)
    Hw = sol.s * E
    if sol.tau == 0.0 or abs(E - Hw) <= 8.0 * h:
        raise DegenerateGeometryError("dt/dE diverges at the fold (query on Sigma_E)")
    t = {k: _t_at_energy(sol, E + k * h, pot, spec) for k in (-2, -1, 1, 2)}
    d1 = (t[1] - t[-1]) / (2.0 * h)
    d2 = (t[2] - t[-2]) / (4.0 * h)
    val = (4.0 * d1 - d2) / 3.0
    if not np.isfinite(val) or val == 0:
        raise DegenerateGeometryError("vanishing dt/dE denominator")
    val = val if isinstance(val, complex) and val.imag != 0 else float(np.real(val))
    return val if sol.branch > 0 else -val


def dt_dE_jacobi(sol: MidpointSolution, pot: Potential):
    """
    dt/dE from the Jacobi field J(0) = d/dt (Theta^t)^{-1}(x, xi):
    (dt/dE)^{-1} = dH(gamma(0)) J(0).  Cross-check for :func:`dt_dE`.
    """
    if sol.tau == 0.0:
        raise DegenerateGeometryError("dt/dE diverges at the fold (query on Sigma_E)")
    d = pot.dimension
    z = sol.base.as_vector()
    grad = np.concatenate([pot.gradient(z[:d]), z[d:]])
    zdot = -np.linalg.solve(np.eye(2 * d) + sol.flow.M,
                            hamilton_vector_field(sol.endpoint, pot))
    val = 1.0 / (grad @ zdot)
    return val if np.iscomplexobj(val) and np.imag(val) != 0 else float(np.real(val))


def _arc_for(sol: MidpointSolution, nodes: int, pot=None, spec=DEFAULT_SPEC) -> ArcSamples:
    if sol.arc is not None and sol.arc.sigma.size == nodes:
        return sol.arc
    if sol.flow.dense is None:
        if pot is None:
            raise InputError("need the potential to resample the arc")
        fr = flow(sol.base, pot, sol.t, spec, dense=True)
    else:
        fr = sol.flow
    return _arc_samples(fr, nodes)


def arc_action(sol: MidpointSolution, nodes: int = ARC_NODES):
    """Integral of p.dq along the arc (Gauss-Legendre on the sampled arc)."""
    arc = _arc_for(sol, nodes)
    integrand = np.sum(arc.p * arc.p, axis=-1)
    return sol.t * np.sum(arc.weights * integrand)


def chord_area(sol: MidpointSolution, nodes: int = ARC_NODES):
    """
    Oriented area between the critical arc and its chord:
    integral of p.dq along the arc minus <xi, q(t) - q(0)>.
    """
    if sol.tau == 0.0:
        return 0.0
    dq = sol.endpoint.q - sol.base.q
    val = arc_action(sol, nodes) - np.dot(sol.query.p, dq)
    return val if np.iscomplexobj(val) and np.imag(val) != 0 else float(np.real(val))


def green_area(sol: MidpointSolution, pot: Potential, nodes: int = ARC_NODES):
    """Same area as :func:`chord_area` via (1/2) closed integral of (p dq - q dp)."""
    if sol.tau == 0.0:
        return 0.0
    arc = _arc_for(sol, nodes)
    integrand = np.sum(arc.p * arc.p, axis=-1) + np.sum(arc.q * pot.gradient(arc.q), axis=-1)
    along = 0.5 * sol.t * np.sum(arc.weights * integrand)
    qa, pa = sol.endpoint.q, sol.endpoint.p
    dq = sol.base.q - qa
    dp = sol.base.p - pa
    chord = 0.5 * (np.dot(pa, dq) - np.dot(qa, dp))
    val = along + chord
    return val if np.iscomplexobj(val) and np.imag(val) != 0 else float(np.real(val))


def fold_diagnostics(pt, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                     energy: Optional[float] = None, step: float = 1e-3,
                     direction: str = "kernel", tol: float = 1e-9) -> FoldDiagnostics:
    """
    Fold structure of (t, z) -> Theta^t(z) along {0} x Sigma_E.

    ``direction="kernel"`` differentiates along the curve s -> (2s, Phi^{-s}(z)),
    whose image has zero velocity at s = 0; ``direction="time"`` differentiates
    along s -> (s, z), whose velocity is Xi_H(z)/2.
    """
    pt = pt if isinstance(pt, PhasePoint) else PhasePoint.from_vector(np.asarray(pt))
    H = hamiltonian(pt, pot)
    if energy is not None and abs(H - energy) > tol * max(1.0, abs(energy)):
        raise DomainError("fold diagnostics need a point on Sigma_E")
    d = pot.dimension

    def curve(s):
        if direction == "kernel":
            z = flow(pt, pot, -s, spec).endpoint if s != 0 else pt
            return midpoint_map(z, pot, 2.0 * s, spec).as_vector()
        if direction == "time":
            return midpoint_map(pt, pot, s, spec).as_vector()
        raise InputError(f"unknown direction {direction!r}")

    deriv = (curve(step) - curve(-step)) / (2.0 * step)
    residual = float(np.linalg.norm(deriv))
    det_theta = float(np.linalg.det(0.5 * (np.eye(2 * d) + np.eye(2 * d))))

    # Jacobian of (t, z on Sigma_E) -> Theta^t(z) at t = 0: columns are
    # Xi_H / 2 and an orthonormal basis of the tangent space of Sigma_E.
    grad = np.concatenate([pot.gradient(pt.q), pt.p])
    _, _, vt = np.linalg.svd(grad[None, :])
    tangent = vt[1:].T
    jac = np.column_stack([0.5 * hamilton_vector_field(pt, pot), tangent])
    fold_det = float(np.linalg.det(jac))
    return FoldDiagnostics(residual, det_theta, fold_det, direction)
