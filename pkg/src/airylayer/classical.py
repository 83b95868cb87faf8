"""
Hamiltonians H(q, p) = |p|^2/2 + V(q), their flows, monodromy blocks and actions.

Everything downstream (midpoint geometry, Herman-Kluk quadrature, Airy-layer
predictions) consumes the :func:`flow` of this module.  The flow integrates
Hamilton's equations, the variational equations for the monodromy matrix
``M_t = [[A, B], [C, D]]`` and the action ``dS/ds = q'.p - H`` as one system
with an adaptive 8th order Runge-Kutta method (DOP853).

Times may be complex.  The system is then integrated along the straight
segment ``s = sigma * t``, ``sigma in [0, 1]``, which is how the midpoint
solver continues arcs to the exterior of the energy ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853, OdeSolution

from .errors import InputError, IntegrationError

__all__ = [
    "Potential",
    "PhasePoint",
    "IntegratorSpec",
    "FlowResult",
    "BatchFlow",
    "DEFAULT_SPEC",
    "hamiltonian",
    "hamilton_vector_field",
    "flow",
    "flow_batch",
    "action_partials",
    "symplectic_residual",
    "symplectic_block_residuals",
    "symplectic_matrix",
]

KINDS = ("isotropic", "anisotropic", "cosine_perturbed", "user_polynomial_bounded")


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """
    Separable confining potential with globally bounded second derivatives.

    All builtin kinds are sums of one-dimensional terms ``v_j(q_j)``:

    * ``isotropic``        v = omega^2 q^2 / 2 (same omega in every direction)
    * ``anisotropic``      v = omega_j^2 q^2 / 2
    * ``cosine_perturbed`` v = omega_j^2 q^2 / 2 + lam (1 - cos q),  0 <= lam <= 0.5
    * ``user_polynomial_bounded``  v = c0 + c1 q + c2 q^2 with c2 > 0

    Use the classmethod constructors rather than the raw initializer.
    """

    kind: str
    dimension: int
    omegas: tuple = ()
    lam: float = 0.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown potential kind {self.kind!r}")
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise InputError("dimension must be a positive integer")
        if self.kind == "user_polynomial_bounded":
            if len(self.coeffs) != self.dimension:
                raise InputError("need one coefficient triple per dimension")
            for c in self.coeffs:
                if len(c) != 3 or not c[2] > 0:
                    raise InputError("polynomial terms must be c0 + c1 q + c2 q^2 with c2 > 0")
        else:
            if len(self.omegas) != self.dimension:
                raise InputError("need one frequency per dimension")
            if any(not w > 0 for w in self.omegas):
                raise InputError("frequencies must be positive")
        if self.kind == "cosine_perturbed" and not 0.0 <= self.lam <= 0.5:
            raise InputError("cosine perturbation strength must lie in [0, 0.5]")

    # constructors ----------------------------------------------------------
    @classmethod
    def isotropic(cls, dimension: int = 1, omega: float = 1.0) -> "Potential":
        return cls("isotropic", int(dimension), (float(omega),) * int(dimension))

    @classmethod
    def anisotropic(cls, omegas: Sequence[float]) -> "Potential":
        omegas = tuple(float(w) for w in omegas)
        return cls("anisotropic", len(omegas), omegas)

    @classmethod
    def cosine_perturbed(cls, dimension: int = 1, lam: float = 0.1,
                         omega: float = 1.0) -> "Potential":
        return cls("cosine_perturbed", int(dimension), (float(omega),) * int(dimension),
                   lam=float(lam))

    @classmethod
    def polynomial(cls, coeffs: Sequence[Sequence[float]]) -> "Potential":
        """Separable polynomial; each entry lists coefficients of 1, q, q^2, ...

        Terms of degree three or more make the Hessian unbounded and are
        rejected, as are non-confining quadratics.
        """
        triples = []
        for c in coeffs:
            c = [float(v) for v in c]
            if any(v != 0.0 for v in c[3:]):
                raise InputError("polynomial degree > 2 violates the bounded-Hessian class")
            c = (c + [0.0, 0.0, 0.0])[:3]
            triples.append(tuple(c))
        return cls("user_polynomial_bounded", len(triples), coeffs=tuple(triples))

    @classmethod
    def from_dict(cls, spec: dict) -> "Potential":
        kind = spec["kind"]
        d = int(spec.get("dimension", 1))
        if kind == "isotropic":
            return cls.isotropic(d, spec.get("omega", 1.0))
        if kind == "anisotropic":
            return cls.anisotropic(spec["omegas"])
        if kind == "cosine_perturbed":
            return cls.cosine_perturbed(d, spec.get("lam", 0.1), spec.get("omega", 1.0))
        if kind == "user_polynomial_bounded":
            return cls.polynomial(spec["coeffs"])
        raise InputError(f"unknown potential kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "isotropic":
            return {"kind": self.kind, "dimension": self.dimension, "omega": self.omegas[0]}
        if self.kind == "anisotropic":
            return {"kind": self.kind, "dimension": self.dimension, "omegas": list(self.omegas)}
        if self.kind == "cosine_perturbed":
            return {"kind": self.kind, "dimension": self.dimension, "lam": self.lam,
                    "omega": self.omegas[0]}
        return {"kind": self.kind, "dimension": self.dimension,
                "coeffs": [list(c) for c in self.coeffs]}

    # evaluation ------------------------------------------------------------
    @property
    def is_harmonic(self) -> bool:
        return self.kind in ("isotropic", "anisotropic") or (
            self.kind == "cosine_perturbed" and self.lam == 0.0)

    def _check(self, q):
        q = np.asarray(q)
        if q.shape[-1] != self.dimension:
            raise InputError(f"expected last axis of length {self.dimension}, got {q.shape}")
        return q

    def _quadratic(self):
        if self.kind == "user_polynomial_bounded":
            c = np.array(self.coeffs)
            return c[:, 0], c[:, 1], 2.0 * c[:, 2]
        w = np.array(self.omegas)
        return np.zeros_like(w), np.zeros_like(w), w * w

    def value(self, q):
        q = self._check(q)
        c0, c1, k = self._quadratic()
        v = np.sum(c0 + c1 * q + 0.5 * k * q * q, axis=-1)
        if self.kind == "cosine_perturbed":
            v = v + self.lam * np.sum(1.0 - np.cos(q), axis=-1)
        return v

    def gradient(self, q):
        q = self._check(q)
        _, c1, k = self._quadratic()
        g = c1 + k * q
        if self.kind == "cosine_perturbed":
            g = g + self.lam * np.sin(q)
        return g

    def hessian_diagonal(self, q):
        """Diagonal of the (diagonal) Hessian of V."""
        q = self._check(q)
        _, _, k = self._quadratic()
        h = np.broadcast_to(k, q.shape).astype(np.result_type(q, float))
        if self.kind == "cosine_perturbed":
            h = h + self.lam * np.cos(q)
        return h

    def hessian(self, q):
        h = self.hessian_diagonal(q)
        return h[..., :, None] * np.eye(self.dimension)

    def hessian_bound(self) -> float:
        """A global bound on |d^2 V| for this kind."""
        _, _, k = self._quadratic()
        return float(np.max(np.abs(k)) + (self.lam if self.kind == "cosine_perturbed" else 0.0))

    def minimum_energy(self) -> float:
        """Minimum of H over phase space (minimum of V)."""
        if self.kind == "user_polynomial_bounded":
            c = np.array(self.coeffs)
            return float(np.sum(c[:, 0] - c[:, 1] ** 2 / (4.0 * c[:, 2])))
        return 0.0


# ---------------------------------------------------------------------------
# Phase-space values
# ---------------------------------------------------------------------------

def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of T*R^d."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q))
        p = np.atleast_1d(np.asarray(self.p))
        dtype = np.result_type(q, p, float)
        if q.shape != p.shape or q.ndim != 1:
            raise InputError("q and p must be vectors of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise InputError("phase point has non-finite components")
        object.__setattr__(self, "q", _frozen(q, dtype))
        object.__setattr__(self, "p", _frozen(p, dtype))

    @property
    def dimension(self) -> int:
        return self.q.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, z) -> "PhasePoint":
        z = np.asarray(z)
        d = z.shape[0] // 2
        return cls(z[:d], z[d:])


@dataclass(frozen=True)
class IntegratorSpec:
    """Tolerances for the combined state/variational/action integration."""

    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-12
    max_steps: int = 100_000
    max_horizon: float = 20.0

    def __post_init__(self):
        if self.method != "DOP853":
            raise InputError("only the DOP853 integrator is supported")
        if not (self.rtol > 0 and self.atol > 0 and self.max_steps > 0 and self.max_horizon > 0):
            raise InputError("integrator tolerances and limits must be positive")


DEFAULT_SPEC = IntegratorSpec()


@dataclass(frozen=True)
class FlowResult:
    """Endpoint, monodromy blocks and action of one trajectory."""

    t: complex
    start: PhasePoint
    endpoint: PhasePoint
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    action: complex
    energy: complex
    integrator_error_estimate: float
    steps: int = 0
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def M(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def state_at(self, sigma):
        """(q, p) at fractions ``sigma`` of the trajectory (needs ``dense=True``)."""
        if self.dense is None:
            raise InputError("flow was computed without dense output")
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        d = self.start.dimension
        y = self.dense(sigma)
        return y[:d].T, y[d:2 * d].T

    def monodromy_at(self, sigma):
        """Monodromy matrices at fractions ``sigma``, shape (n, 2d, 2d)."""
        if self.dense is None:
            raise InputError("flow was computed without dense output")
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        d = self.start.dimension
        y = self.dense(sigma)
        return y[2 * d:2 * d + 4 * d * d].T.reshape(-1, 2 * d, 2 * d)


@dataclass(frozen=True)
class BatchFlow:
    """Flows of many initial points for one common time."""

    t: complex
    q0: np.ndarray
    p0: np.ndarray
    q: np.ndarray
    p: np.ndarray
    M: np.ndarray
    action: np.ndarray
    steps: int


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _as_point(pt, pot: Potential) -> PhasePoint:
    if not isinstance(pt, PhasePoint):
        pt = PhasePoint.from_vector(np.asarray(pt))
    if pt.dimension != pot.dimension:
        raise InputError(f"phase point dimension {pt.dimension} != potential dimension "
                         f"{pot.dimension}")
    return pt


def hamiltonian(pt, pot: Potential):
    """H = |p|^2 / 2 + V(q)."""
    pt = _as_point(pt, pot)
    return 0.5 * np.dot(pt.p, pt.p) + pot.value(pt.q)


def hamilton_vector_field(pt, pot: Potential) -> np.ndarray:
    """(dH/dp, -dH/dq) = (p, -grad V(q)), as one vector of length 2d."""
    pt = _as_point(pt, pot)
    return np.concatenate([pt.p, -pot.gradient(pt.q)])


def symplectic_matrix(d: int) -> np.ndarray:
    I = np.eye(d)
    Z = np.zeros((d, d))
    return np.block([[Z, I], [-I, Z]])


def _make_rhs(pot: Potential, n: int, t):
    d = pot.dimension
    m = 2 * d + 4 * d * d + 1

    def rhs(_sigma, y):
        Y = y.reshape(n, m)
        q = Y[:, :d]
        p = Y[:, d:2 * d]
        M = Y[:, 2 * d:2 * d + 4 * d * d].reshape(n, 2 * d, 2 * d)
        out = np.empty_like(Y)
        out[:, :d] = p
        out[:, d:2 * d] = -pot.gradient(q)
        hv = pot.hessian_diagonal(q)
        dM = np.empty_like(M)
        dM[:, :d, :] = M[:, d:, :]
        dM[:, d:, :] = -hv[:, :, None] * M[:, :d, :]
        out[:, 2 * d:2 * d + 4 * d * d] = dM.reshape(n, -1)
        out[:, -1] = 0.5 * np.sum(p * p, axis=-1) - pot.value(q)
        out *= t
        return out.ravel()

    return rhs, m


def _integrate(pot: Potential, z0: np.ndarray, t, spec: IntegratorSpec, dense: bool):
    """Integrate n trajectories (z0 has shape (n, 2d)) over time t."""
    d = pot.dimension
    n = z0.shape[0]
    if abs(t) > spec.max_horizon:
        raise InputError(f"|t| = {abs(t):.3g} exceeds the flow horizon {spec.max_horizon}")
    is_complex = np.iscomplexobj(z0) or isinstance(t, complex) or np.iscomplexobj(t)
    dtype = complex if is_complex else float
    t = complex(t) if is_complex else float(np.real(t))
    rhs, m = _make_rhs(pot, n, t)
    Y0 = np.zeros((n, m), dtype=dtype)
    Y0[:, :2 * d] = z0
    Y0[:, 2 * d:2 * d + 4 * d * d] = np.eye(2 * d).ravel()
    y0 = Y0.ravel()
    if t == 0:
        return y0.reshape(n, m), 0, (lambda s: np.repeat(y0[:, None], np.size(s), axis=1))

    solver = DOP853(rhs, 0.0, y0, 1.0, rtol=spec.rtol, atol=spec.atol)
    steps = 0
    nodes = [0.0]
    interpolants = []
    while solver.status == "running":
        if steps >= spec.max_steps:
            raise IntegrationError(
                f"step budget {spec.max_steps} exhausted at sigma={solver.t:.6g}",
                diagnostics={"sigma": solver.t, "state": solver.y.reshape(n, m)[:, :2 * d].copy(),
                             "steps": steps, "t": t})
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integrator failed: {message}",
                                   diagnostics={"sigma": solver.t, "steps": steps, "t": t})
        steps += 1
        if dense:
            interpolants.append(solver.dense_output())
            nodes.append(solver.t)
    sol = OdeSolution(nodes, interpolants) if dense else None
    return solver.y.reshape(n, m), steps, sol


def flow(pt, pot: Potential, t, spec: IntegratorSpec = DEFAULT_SPEC,
         dense: bool = False) -> FlowResult:
    """
    Flow ``pt`` for time ``t`` under H, with monodromy blocks and action.

    Parameters
    ----------
    pt : PhasePoint or array_like (q, p)
    pot : Potential
    t : float or complex
        Flow time.  ``|t|`` may not exceed ``spec.max_horizon``.
    spec : IntegratorSpec
    dense : bool
        Keep a continuous interpolant, so that :meth:`FlowResult.state_at`
        can sample the arc.

    Raises
    ------
    IntegrationError
        If the step budget runs out; the exception carries the partial state.
    """
    pt = _as_point(pt, pot)
    d = pot.dimension
    z0 = pt.as_vector()[None, :]
    if isinstance(t, complex) and t.imag == 0.0 and not np.iscomplexobj(z0):
        t = t.real
    Y, steps, sol = _integrate(pot, z0, t, spec, dense)
    y = Y[0]
    q_t, p_t = y[:d], y[d:2 * d]
    M = y[2 * d:2 * d + 4 * d * d].reshape(2 * d, 2 * d)
    end = PhasePoint(q_t, p_t)
    e0 = hamiltonian(pt, pot)
    e1 = hamiltonian(end, pot)
    J = symplectic_matrix(d)
    sym = float(np.max(np.abs(M.T @ J @ M - J)))
    err = max(float(abs(e1 - e0)) / max(1.0, float(abs(e0))), sym)
    dense_fn = None
    if sol is not None:
        dense_fn = sol
    elif t == 0 and dense:
        dense_fn = lambda s: np.repeat(y[:, None], np.size(s), axis=1)  # noqa: E731
    return FlowResult(t=t, start=pt, endpoint=end,
                      A=M[:d, :d], B=M[:d, d:], C=M[d:, :d], D=M[d:, d:],
                      action=y[-1], energy=e0, integrator_error_estimate=err,
                      steps=steps, dense=dense_fn)


def flow_batch(q0, p0, pot: Potential, t, spec: IntegratorSpec = DEFAULT_SPEC) -> BatchFlow:
    """Vectorised :func:`flow` for arrays of initial points of shape (n, d)."""
    q0 = np.atleast_2d(np.asarray(q0))
    p0 = np.atleast_2d(np.asarray(p0))
    if q0.shape != p0.shape or q0.shape[1] != pot.dimension:
        raise InputError("q0 and p0 must both have shape (n, d)")
    d = pot.dimension
    z0 = np.concatenate([q0, p0], axis=1)
    Y, steps, _ = _integrate(pot, z0, t, spec, dense=False)
    n = q0.shape[0]
    return BatchFlow(t=t, q0=q0, p0=p0, q=Y[:, :d], p=Y[:, d:2 * d],
                     M=Y[:, 2 * d:2 * d + 4 * d * d].reshape(n, 2 * d, 2 * d),
                     action=Y[:, -1], steps=steps)


def action_partials(pt, pot: Potential, t, spec: IntegratorSpec = DEFAULT_SPEC):
    """
    Partial derivatives of S(t, q, p) from the flow data:
    dS/dq = A^T p_t - p,  dS/dp = B^T p_t,  dS/dt = q_t'.p_t - H(q_t, p_t).
    """
    fr = flow(pt, pot, t, spec)
    p_t = fr.endpoint.p
    dq = fr.A.T @ p_t - fr.start.p
    dp = fr.B.T @ p_t
    dt = float(np.dot(p_t, p_t)) - hamiltonian(fr.endpoint, pot)
    return dq, dp, dt


def symplectic_block_residuals(fr: FlowResult) -> dict:
    """Max-norm residuals of A^T C, B^T D symmetry and A^T D - C^T B = I."""
    A, B, C, D = fr.A, fr.B, fr.C, fr.D
    I = np.eye(A.shape[0])
    return {
        "AtC_symmetric": float(np.max(np.abs(A.T @ C - C.T @ A))),
        "AtD_minus_CtB": float(np.max(np.abs(A.T @ D - C.T @ B - I))),
        "BtD_symmetric": float(np.max(np.abs(B.T @ D - D.T @ B))),
    }


def symplectic_residual(fr: FlowResult) -> float:
    """max |M^T J M - J| for the monodromy matrix of ``fr``."""
    M = fr.M
    J = symplectic_matrix(fr.A.shape[0])
    return float(np.max(np.abs(M.T @ J @ M - J)))


def period_estimate(pot: Potential, energy: float) -> float:
    """Lower bound on the minimal period at energy E (harmonic frequencies plus lam)."""
    if pot.kind == "user_polynomial_bounded":
        k = 2.0 * np.array([c[2] for c in pot.coeffs])
    else:
        k = np.array(pot.omegas) ** 2
        if pot.kind == "cosine_perturbed":
            k = k + pot.lam
    return 2.0 * math.pi / math.sqrt(float(np.max(k)))
