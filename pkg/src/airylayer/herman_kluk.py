"""
Herman-Kluk parametrix for the propagator and the phase-space integral for
the Wigner transform of the propagator.

The Wigner-propagator integrand is a Gaussian in the chord variable v, so
that integral is done in closed form (:func:`reduce_v`) and only the (q, p)
integral is done numerically, by the trapezoid rule on a box around the
dominant critical point.

Sign convention: the amplitude is det^{1/2}(A + D - i(B - C)), the choice
that matches the decaying Gaussian factor exp(-|x - q_t|^2 / 2 hbar) of
the phase below and makes the oscillator propagator exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classical import (
    DEFAULT_SPEC,
    FlowResult,
    IntegratorSpec,
    PhasePoint,
    Potential,
    flow,
    flow_batch,
)
from .errors import DegenerateGeometryError, InputError
from .midpoint import inverse_midpoint

log = logging.getLogger(__name__)

__all__ = [
    "HKQuadrature",
    "HKEvaluation",
    "CriticalPoint",
    "StationaryPhasePrediction",
    "HessianCheck",
    "hk_phase",
    "hk_amplitude",
    "amplitude_matrix",
    "wigner_phase",
    "reduce_v",
    "reduced_phase",
    "wigner_propagator",
    "stationary_phase_prediction",
    "find_critical_points",
    "hessian_blocks",
    "hessian_check",
    "coherent_state",
    "hk_propagate_state",
]

ERROR_FLAG_REL = 1e-3


# ---------------------------------------------------------------------------
# Phases and amplitude
# ---------------------------------------------------------------------------

def hk_phase(t, q, p, x, y, fr: FlowResult) -> complex:
    """S + p_t.(x - q_t) - p.(y - q) + (i/2)(|x - q_t|^2 + |y - q|^2)."""
    q, p, x, y = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (q, p, x, y))
    qt, pt = fr.endpoint.q, fr.endpoint.p
    return complex(fr.action + pt @ (x - qt) - p @ (y - q)
                   + 0.5j * (np.sum((x - qt) ** 2) + np.sum((y - q) ** 2)))


def wigner_phase(t, x, xi, q, p, v, fr: FlowResult) -> complex:
    """
    S + p_t.(x + v/2 - q_t) - p.(x - v/2 - q) - v.xi
      + (i/2)(|x + v/2 - q_t|^2 + |x - v/2 - q|^2).
    """
    x, xi, q, p, v = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (x, xi, q, p, v))
    qt, pt = fr.endpoint.q, fr.endpoint.p
    a = x + 0.5 * v - qt
    b = x - 0.5 * v - q
    return complex(fr.action + pt @ a - p @ b - v @ xi + 0.5j * (a @ a + b @ b))


def amplitude_matrix(A, B, C, D):
    """A + D - i(B - C)."""
    return A + D - 1j * (B - C)


def _sqrt_branch(values, start):
    """Square roots of a sequence of complex numbers, continued from ``start``."""
    values = np.asarray(values, dtype=complex)
    ang = np.unwrap(np.angle(values))
    ang += np.angle(start) - ang[0]
    return np.sqrt(np.abs(values)) * np.exp(0.5j * ang), np.diff(ang)


def hk_amplitude(t, q, p, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                 fr: Optional[FlowResult] = None, samples: int = 32,
                 max_refine: int = 8) -> complex:
    """
    a_0 = det^{1/2}(A_t + D_t - i(B_t - C_t)), with the square root continued
    in time from 2^{d/2} at t = 0.

    The determinant is sampled along the dense trajectory; the sampling is
    doubled until its argument moves by less than pi/4 per step.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    d = pot.dimension
    if fr is None or fr.dense is None:
        fr = flow(PhasePoint(q, p), pot, t, spec, dense=True)
    n = samples
    for _ in range(max_refine):
        sig = np.linspace(0.0, 1.0, n + 1)
        Ms = fr.monodromy_at(sig)
        X = Ms[:, :d, :d] + Ms[:, d:, d:] - 1j * (Ms[:, :d, d:] - Ms[:, d:, :d])
        dets = np.linalg.det(X)
        if np.min(np.abs(dets)) == 0:
            raise DegenerateGeometryError("amplitude determinant vanishes along the arc")
        roots, steps = _sqrt_branch(dets, 2.0 ** d)
        if steps.size == 0 or np.max(np.abs(steps)) < math.pi / 4:
            return complex(roots[-1])
        n *= 2
    raise DegenerateGeometryError("branch tracking did not resolve the determinant winding")


# ---------------------------------------------------------------------------
# v-reduction
# ---------------------------------------------------------------------------

def _reduced(x, xi, q, p, qt, pt, S):
    """Reduced phase after the exact v-integral, vectorised over leading axes."""
    a0 = x - qt
    b0 = x - q
    const = S + np.sum(pt * a0, axis=-1) - np.sum(p * b0, axis=-1) \
        + 0.5j * (np.sum(a0 * a0, axis=-1) + np.sum(b0 * b0, axis=-1))
    beta = 0.5 * (p + pt) - xi + 0.5j * (q - qt)
    return const + 1j * np.sum(beta * beta, axis=-1)


def reduced_phase(t, x, xi, q, p, fr: FlowResult) -> complex:
    """
    Phase after integrating out v:

        S + (p_t - p).(x - m) - xi.(q_t - q) + i(|x - m|^2 + |xi - pi|^2)

    with (m, pi) the midpoint of (q, p) and (q_t, p_t).
    """
    x, xi, q, p = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (x, xi, q, p))
    return complex(_reduced(x, xi, q, p, fr.endpoint.q, fr.endpoint.p, fr.action))


def reduce_v(t, x, xi, q, p, fr: FlowResult, hbar: float) -> complex:
    """
    Exact Gaussian integral over v in R^d of exp(i Psi / hbar), Psi the
    :func:`wigner_phase`: (4 pi hbar)^{d/2} exp(i Psi_red / hbar).
    """
    if not hbar > 0:
        raise InputError("hbar must be positive")
    d = fr.A.shape[0]
    return (4.0 * math.pi * hbar) ** (0.5 * d) * np.exp(1j * reduced_phase(t, x, xi, q, p, fr) / hbar)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HKQuadrature:
    """
    Tensor trapezoid rule on a (q, p) box.

    ``centre`` and ``half_width`` have shape (2d,); ``nodes`` is the node
    count per phase-space axis.
    """

    centre: np.ndarray
    half_width: np.ndarray
    nodes: tuple
    radius: float = 6.0

    def __post_init__(self):
        if any(n < 16 for n in self.nodes):
            raise InputError("need at least 16 nodes per axis")

    @property
    def spacing(self) -> np.ndarray:
        return 2.0 * np.asarray(self.half_width) / (np.asarray(self.nodes) - 1)

    def axes(self, stride: int = 1):
        return [c - w + (2 * w / (n - 1)) * np.arange(0, n, stride)
                for c, w, n in zip(self.centre, self.half_width, self.nodes)]

    @property
    def node_count(self) -> int:
        return int(np.prod(self.nodes))

    @classmethod
    def around(cls, centre, hbar: float, M=None, radius: float = 6.0,
               spacing: float = 0.5) -> "HKQuadrature":
        """
        Box of half-width radius sqrt(hbar)/sigma_min around ``centre``,
        where sigma_min is the smallest singular value of (I + M)/2 (the
        Gaussian decay rate of the integrand), and node spacing at most
        spacing * sqrt(hbar) / max(1, sigma_max).
        """
        centre = np.asarray(centre, dtype=float)
        n2 = centre.size
        if M is None:
            smin, smax = 1.0, 1.0
        else:
            sv = np.linalg.svd(0.5 * (np.eye(n2) + np.real(M)), compute_uv=False)
            smin, smax = float(sv[-1]), float(sv[0])
        if smin <= 1e-8:
            raise DegenerateGeometryError("(I + M)/2 is singular: caustic of the midpoint map")
        half = radius * math.sqrt(hbar) / smin
        h = spacing * math.sqrt(hbar) / max(1.0, smax)
        n = max(16, 2 * math.ceil(half / h) + 1)
        if n % 2 == 0:
            n += 1
        return cls(centre, np.full(n2, half), (n,) * n2, radius)


@dataclass(frozen=True)
class HKEvaluation:
    value: complex
    t: float
    x: np.ndarray
    xi: np.ndarray
    node_count: int
    error_estimate: float
    flagged: bool


def _batched_flow_with_amplitude(Q, P, pot, t, spec, chunks):
    """
    Flow many points for time t in ``chunks`` sub-steps, tracking the
    amplitude square root continuously through the sub-steps.
    """
    d = pot.dimension
    n = Q.shape[0]
    q, p = Q.copy(), P.copy()
    M = np.broadcast_to(np.eye(2 * d), (n, 2 * d, 2 * d)).copy()
    S = np.zeros(n)
    dt = t / chunks
    ang = np.zeros(n)
    prev = np.full(n, 2.0 ** d, dtype=complex)
    for _ in range(chunks):
        bf = flow_batch(q, p, pot, dt, spec)
        q, p = bf.q, bf.p
        S = S + np.real(bf.action)
        M = np.einsum("nij,njk->nik", bf.M, M)
        X = M[:, :d, :d] + M[:, d:, d:] - 1j * (M[:, :d, d:] - M[:, d:, :d])
        det = np.linalg.det(X)
        step = np.angle(det / prev)
        if np.max(np.abs(step)) > math.pi / 2:
            log.warning("amplitude phase moved by %.3f in one sub-step", np.max(np.abs(step)))
        ang = ang + step
        prev = det
    # the t = 0 value 2^d has argument 0, so ang is the continued argument
    amp = np.sqrt(np.abs(prev)) * np.exp(0.5j * ang)
    return q, p, M, S, amp


def _flow_chunks(t):
    return max(4, int(math.ceil(abs(t) / 0.1)))


def wigner_propagator(t: float, x, xi, pot: Potential, hbar: float,
                      quad: Optional[HKQuadrature] = None,
                      spec: IntegratorSpec = DEFAULT_SPEC) -> HKEvaluation:
    """
    Wigner transform of the Herman-Kluk propagator at (x, xi):

        U(t, x, xi) = (2 pi hbar)^{-d} 2^{d/2} (4 pi hbar)^{-d/2}
                      integral a_0(t, q, p) reduce_v(t, x, xi, q, p) dq dp

    which tends to 1 as t -> 0 and equals sec(t/2) exp(-2i tan(t/2) H / hbar)
    for the unit oscillator in d = 1.  The error estimate compares the full
    trapezoid sum with the sum on every other node.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = pot.dimension
    if x.shape != (d,) or xi.shape != (d,):
        raise InputError("query dimension does not match the potential")
    if quad is None:
        w = np.concatenate([x, xi])
        zc, frc = inverse_midpoint(w, pot, t, spec)
        quad = HKQuadrature.around(zc, hbar, frc.M)
    axes = quad.axes()
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    Q, P = pts[:, :d], pts[:, d:]
    qt, pt, M, S, amp = _batched_flow_with_amplitude(Q, P, pot, t, spec, _flow_chunks(t))
    psi = _reduced(x, xi, Q, P, qt, pt, S)
    integrand = (amp * np.exp(1j * psi / hbar)).reshape(grids[0].shape)
    h = quad.spacing
    norm = (2 * math.pi * hbar) ** (-d) * 2.0 ** (0.5 * d)
    full = norm * _trapezoid(integrand, h)
    sub = integrand[tuple(slice(None, None, 2) for _ in range(2 * d))]
    half = norm * _trapezoid(sub, 2 * h)
    err = abs(full - half)
    flagged = bool(err > ERROR_FLAG_REL * max(abs(full), 1e-300))
    edge = _edge_magnitude(integrand)
    if edge > 1e-10 * np.max(np.abs(integrand)):
        flagged = True
    return HKEvaluation(complex(full), float(t), x, xi, quad.node_count, float(err), flagged)


def _trapezoid(f, h):
    """Tensor trapezoid rule with endpoint weights 1/2 (Gaussian-decayed box)."""
    out = f
    for ax in range(f.ndim):
        w = np.ones(out.shape[0])
        w[0] = w[-1] = 0.5
        out = np.tensordot(w, out, axes=(0, 0)) * h[ax]
    return complex(out)


def _edge_magnitude(f):
    m = 0.0
    for ax in range(f.ndim):
        m = max(m, float(np.max(np.abs(np.take(f, [0, -1], axis=ax)))))
    return m


# ---------------------------------------------------------------------------
# Stationary phase
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    q: np.ndarray
    p: np.ndarray
    S: float
    det_IM: float
    eta: float


@dataclass(frozen=True)
class StationaryPhasePrediction:
    value: complex
    points: tuple
    found: bool


def find_critical_points(t, x, xi, pot: Potential, spec: IntegratorSpec = DEFAULT_SPEC,
                         seeds: int = 3, radius: Optional[float] = None, dedupe: float = 1e-6):
    """
    All (q, p) with Theta^t(q, p) = (x, xi) reachable by Newton from a small
    grid of seeds around (x, xi), deduplicated by distance.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    w = np.concatenate([x, xi])
    d = pot.dimension
    if radius is None:
        radius = 0.5 * abs(t) * max(1.0, float(np.linalg.norm(w)))
    found = []
    offsets = np.linspace(-radius, radius, seeds) if seeds > 1 else np.zeros(1)
    cand_seeds = [None]
    for off in offsets:
        for k in range(2 * d):
            e = np.zeros(2 * d)
            e[k] = off
            cand_seeds.append(w + e)
    for sd in cand_seeds:
        try:
            z, fr = inverse_midpoint(w, pot, t, spec, seed=sd)
        except Exception:  # noqa: BLE001 - a failed seed just contributes nothing
            continue
        if all(np.linalg.norm(z - f[0]) > dedupe for f in found):
            found.append((z, fr))
    return found


def stationary_phase_prediction(t, x, xi, pot: Potential, hbar: float,
                                spec: IntegratorSpec = DEFAULT_SPEC) -> StationaryPhasePrediction:
    """
    2^d sum_j exp(i[S_j/hbar + eta_j]) / |det(I + M_j)|^{1/2}, with
    S_j = S - xi.(q_t - q) at the critical point and eta_j = -(pi/2) times
    the number of sign changes of det(I + M_s), 0 < s < t.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = pot.dimension
    crit = find_critical_points(t, x, xi, pot, spec)
    if not crit:
        log.warning("no critical point found for t=%s", t)
        return StationaryPhasePrediction(0j, (), False)
    total = 0j
    pts = []
    for z, fr in crit:
        det = float(np.linalg.det(np.eye(2 * d) + fr.M))
        if abs(det) < 1e-12:
            raise DegenerateGeometryError("det(I + M) vanishes: caustic")
        frd = flow(fr.start, pot, t, spec, dense=True)
        sig = np.linspace(0.0, 1.0, 65)
        dets = np.linalg.det(np.eye(2 * d)[None] + frd.monodromy_at(sig))
        crossings = int(np.sum(np.signbit(dets[1:]) != np.signbit(dets[:-1])))
        eta = -0.5 * math.pi * crossings
        S = float(np.real(fr.action - xi @ (fr.endpoint.q - fr.start.q)))
        total += 2.0 ** d * np.exp(1j * (S / hbar + eta)) / math.sqrt(abs(det))
        pts.append(CriticalPoint(fr.start.q, fr.start.p, S, det, eta))
    return StationaryPhasePrediction(complex(total), tuple(pts), True)


# ---------------------------------------------------------------------------
# Hessian of the Wigner phase at a dominant critical point
# ---------------------------------------------------------------------------

def hessian_blocks(A, B, C, D) -> np.ndarray:
    """
    Complex Hessian of the Wigner phase in (v, q, p) at a dominant critical
    point, assembled from the monodromy blocks.
    """
    d = A.shape[0]
    I = np.eye(d)
    Hqq = -C.T @ A + 1j * (A.T @ A + I)
    Hqp = -C.T @ B + 1j * A.T @ B
    Hpp = -D.T @ B + 1j * B.T @ B
    Hqv = 0.5 * C.T - 0.5j * (A.T - I)
    Hpv = 0.5 * D.T + 0.5 * I - 0.5j * B.T
    Hvv = 0.5j * I
    return np.block([[Hvv, Hqv.T, Hpv.T], [Hqv, Hqq, Hqp], [Hpv, Hqp.T, Hpp]])


@dataclass(frozen=True)
class HessianCheck:
    assembled_det: complex
    factored_modulus: float
    ratio: complex
    hessian: np.ndarray


def hessian_check(t, q_c, p_c, v_c, fr: FlowResult) -> HessianCheck:
    """
    Compare det(Hessian) with det(I + M) det(A + D - i(B - C)); the ratio is
    a constant depending only on d.
    """
    Hm = hessian_blocks(fr.A, fr.B, fr.C, fr.D)
    d = fr.A.shape[0]
    det_h = complex(np.linalg.det(Hm))
    det_m = float(np.linalg.det(np.eye(2 * d) + fr.M))
    det_x = complex(np.linalg.det(amplitude_matrix(fr.A, fr.B, fr.C, fr.D)))
    return HessianCheck(det_h, abs(det_m) * abs(det_x), det_h / (det_m * det_x), Hm)


# ---------------------------------------------------------------------------
# State propagation probes
# ---------------------------------------------------------------------------

def coherent_state(x, q0: float, p0: float, hbar: float) -> np.ndarray:
    """(pi hbar)^{-1/4} exp(-(x - q0)^2 / 2 hbar + i p0 (x - q0) / hbar) in d = 1."""
    x = np.asarray(x, dtype=float)
    return (math.pi * hbar) ** -0.25 * np.exp(-(x - q0) ** 2 / (2 * hbar) + 1j * p0 * (x - q0) / hbar)


def hk_propagate_state(psi0: np.ndarray, x: np.ndarray, t: float, pot: Potential, hbar: float,
                       spacing: float = 0.35, radius: float = 6.0,
                       spec: IntegratorSpec = DEFAULT_SPEC) -> np.ndarray:
    """
    Herman-Kluk propagation of a d = 1 state sampled on a uniform grid x:

        psi_t(y) = (2 pi hbar)^{-1} integral R_t e^{i S / hbar} g_{q_t p_t}(y) <g_{q p}|psi0> dq dp

    with R_t = det^{1/2}((A + D - i(B - C))/2).  The (q, p) box covers the
    phase-space support of psi0 (its Husimi density above exp(-radius^2)).
    """
    if pot.dimension != 1:
        raise InputError("state propagation probe is one-dimensional")
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    psi0 = np.asarray(psi0, dtype=complex)
    h = spacing * math.sqrt(hbar)
    # Husimi support: q from |psi0|^2, p from the momentum density
    dens = np.abs(psi0) ** 2
    keep = dens > 1e-16 * dens.max()
    qlo, qhi = x[keep].min() - radius * math.sqrt(hbar), x[keep].max() + radius * math.sqrt(hbar)
    k = 2 * math.pi * np.fft.fftfreq(x.size, d=dx) * hbar
    pd = np.abs(np.fft.fft(psi0)) ** 2
    pk = pd > 1e-16 * pd.max()
    plo, phi = k[pk].min() - radius * math.sqrt(hbar), k[pk].max() + radius * math.sqrt(hbar)
    qs = np.arange(qlo, qhi + h / 2, h)
    ps = np.arange(plo, phi + h / 2, h)
    Qg, Pg = np.meshgrid(qs, ps, indexing="ij")
    Q = Qg.reshape(-1, 1)
    P = Pg.reshape(-1, 1)
    overlaps = np.empty(Q.shape[0], dtype=complex)
    for i0 in range(0, Q.shape[0], 2048):
        g = coherent_state(x[None, :], Q[i0:i0 + 2048], P[i0:i0 + 2048], hbar)
        overlaps[i0:i0 + 2048] = np.conj(g) @ psi0 * dx
    qt, pt, M, S, amp = _batched_flow_with_amplitude(Q, P, pot, t, spec, _flow_chunks(t))
    R = amp / math.sqrt(2.0)
    coef = R * np.exp(1j * S / hbar) * overlaps * h * h / (2 * math.pi * hbar)
    out = np.zeros(x.size, dtype=complex)
    big = np.abs(coef) > 1e-16 * np.max(np.abs(coef))
    idx = np.nonzero(big)[0]
    for i0 in range(0, idx.size, 2048):
        sel = idx[i0:i0 + 2048]
        g = coherent_state(x[None, :], qt[sel], pt[sel], hbar)
        out += coef[sel] @ g
    return out
