"""
Exact quantum reference data: eigenpairs of -hbar^2/2 d^2/dx^2 + V, Wigner
functions of eigenstates, and windowed or sharp spectral Wigner sums.

The eigensolver discretizes the Laplacian spectrally on a periodic box
[-L, L) that is large enough for the retained states to have negligible
tails at its edge.  Separable two-dimensional potentials are handled as
tensor products of one-dimensional bases.  The isotropic oscillator uses the
Laguerre closed form instead of any eigensolve.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh

from .classical import Potential
from .errors import DomainError, InputError, ReliabilityError
from .specfun import laguerre_scaled, laguerre_scaled_sequence

log = logging.getLogger(__name__)

__all__ = [
    "EigenBasis",
    "SeparableBasis",
    "OscillatorSpectrum",
    "WindowFunction",
    "WignerField",
    "eigensolve_1d",
    "eigensolve",
    "wigner_of_state",
    "oscillator_wigner_exact",
    "build_window",
    "smoothed_spectral_wigner",
    "sharp_spectral_wigner",
    "load_basis",
]

MAX_GRID = 8192
TAIL_TOL = 1e-8
UPSAMPLE = 4


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WignerField:
    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray
    hbar: float
    provenance: str


@dataclass(frozen=True)
class EigenBasis:
    """
    Eigenpairs of a one-dimensional Hamiltonian on a uniform periodic grid.

    ``vectors[j]`` samples the j-th eigenfunction at ``grid`` with
    ``sum |psi|^2 dx = 1``; its largest-magnitude sample is positive.
    """

    hbar: float
    potential: Potential
    L: float
    N: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    convergence_estimate: np.ndarray
    e_max: float

    @property
    def grid(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dimension(self) -> int:
        return 1

    def levels(self):
        """Iterate (eigenvalue, state label)."""
        return [(float(e), (j,)) for j, e in enumerate(self.eigenvalues)]

    def state_wigner(self, label, x, xi) -> np.ndarray:
        return wigner_of_state(self.vectors[label[0]], self, x, xi).values

    def wigner_many(self, labels, x, xi) -> np.ndarray:
        """Wigner functions of several states at common queries, shape (n, m)."""
        return _wigner_grid(self.vectors[[lab[0] for lab in labels]], self, x, xi)

    # serialization ---------------------------------------------------------
    def export(self, stem) -> tuple:
        """Write ``stem.json`` (header) and ``stem.csv`` (one eigenvector per column)."""
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "format": "airylayer-basis-1",
            "potential": self.potential.to_dict(),
            "hbar": self.hbar,
            "L": self.L,
            "N": self.N,
            "e_max": self.e_max,
            "eigenvalues": [repr(float(e)) for e in self.eigenvalues],
            "convergence_estimate": [repr(float(e)) for e in self.convergence_estimate],
        }
        jpath, cpath = _artifact_paths(stem)
        jpath.write_text(json.dumps(header, indent=1) + "\n")
        with open(cpath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in self.vectors.T:
                w.writerow([repr(float(v)) for v in row])
        return jpath, cpath


@dataclass(frozen=True)
class SeparableBasis:
    """Tensor product of one-dimensional bases for V(q) = sum_k v_k(q_k)."""

    factors: tuple
    hbar: float
    e_max: float
    labels: tuple
    eigenvalues: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.factors)

    def levels(self):
        return [(float(e), lab) for e, lab in zip(self.eigenvalues, self.labels)]

    def state_wigner(self, label, x, xi) -> np.ndarray:
        x = np.atleast_2d(x)
        xi = np.atleast_2d(xi)
        out = np.ones(x.shape[0])
        for k, (b, j) in enumerate(zip(self.factors, label)):
            out = out * b.state_wigner((j,), x[:, k], xi[:, k])
        return out

    def wigner_many(self, labels, x, xi) -> np.ndarray:
        x = np.atleast_2d(x)
        xi = np.atleast_2d(xi)
        cache = []
        for k, b in enumerate(self.factors):
            used = sorted({lab[k] for lab in labels})
            vals = b.wigner_many([(j,) for j in used], x[:, k], xi[:, k])
            cache.append(dict(zip(used, vals)))
        out = np.empty((len(labels), x.shape[0]))
        for i, lab in enumerate(labels):
            v = np.ones(x.shape[0])
            for k, j in enumerate(lab):
                v = v * cache[k][j]
            out[i] = v
        return out


@dataclass(frozen=True)
class OscillatorSpectrum:
    """
    Closed-form spectrum of the isotropic oscillator in d dimensions
    (no eigensolve).  Levels carry multi-indices (n_1, ..., n_d).
    """

    hbar: float
    dimension: int = 1
    omega: float = 1.0
    e_max: float = math.inf

    def levels_between(self, lo: float, hi: float):
        nlo = max(0, math.ceil(lo / (self.hbar * self.omega) - self.dimension / 2.0 - 1e-9))
        nhi = math.floor(hi / (self.hbar * self.omega) - self.dimension / 2.0 + 1e-9)
        out = []
        for n in range(nlo, nhi + 1):
            e = self.hbar * self.omega * (n + self.dimension / 2.0)
            if lo <= e <= hi:
                for lab in _compositions(n, self.dimension):
                    out.append((e, lab))
        return out

    def wigner_many(self, labels, x, xi) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if x.shape[1] != self.dimension:
            x, xi = x.T, xi.T
        nmax = max(max(lab) for lab in labels)
        per_dim = []
        for k in range(self.dimension):
            H = 0.5 * (xi[:, k] ** 2 + (self.omega * x[:, k]) ** 2)
            z = 4.0 * H / (self.hbar * self.omega)
            seq = laguerre_scaled_sequence(nmax, z)
            sign = np.where(np.arange(nmax + 1) % 2 == 0, 1.0, -1.0)
            per_dim.append(seq * sign[:, None] / (math.pi * self.hbar))
        out = np.empty((len(labels), x.shape[0]))
        for i, lab in enumerate(labels):
            v = np.ones(x.shape[0])
            for k, n in enumerate(lab):
                v = v * per_dim[k][n]
            out[i] = v
        return out


def _compositions(n, d):
    if d == 1:
        return [(n,)]
    return [(k,) + rest for k in range(n + 1) for rest in _compositions(n - k, d - 1)]


# ---------------------------------------------------------------------------
# Eigensolver
# ---------------------------------------------------------------------------

def _box_half_width(v, e_max, factor=3.0):
    """Smallest L (on a coarse doubling + bisection search) with v(+-L) >= factor e_max."""
    target = factor * e_max
    L = 1.0
    while min(v(L), v(-L)) < target:
        L *= 1.5
        if L > 1e6:
            raise DomainError("potential does not reach the box threshold")
    lo = L / 1.5 if L > 1.0 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + L)
        if min(v(mid), v(-mid)) >= target:
            L = mid
        else:
            lo = mid
    return L


def _one_dim_potential(pot: Potential, k: int = 0):
    """The k-th separable factor of pot as a 1D Potential."""
    if pot.dimension == 1:
        return pot
    if pot.kind == "user_polynomial_bounded":
        return Potential.polynomial([pot.coeffs[k]])
    if pot.kind == "cosine_perturbed":
        return Potential.cosine_perturbed(1, pot.lam, pot.omegas[k])
    return Potential.isotropic(1, pot.omegas[k])


def eigensolve_1d(pot: Potential, hbar: float, e_max: float, L: Optional[float] = None,
                  N: Optional[int] = None, box_factor: float = 3.0) -> EigenBasis:
    """
    Eigenpairs with E_j <= e_max of -hbar^2/2 d^2/dx^2 + V on [-L, L).

    Parameters
    ----------
    pot : Potential
        One-dimensional potential.
    hbar, e_max : float
        Planck constant and the largest eigenvalue to retain.
    L, N : optional
        Box half-width and node count.  By default V(+-L) >= box_factor e_max
        and N is the power of two for which hbar pi / dx exceeds the largest
        classical momentum by a comfortable margin.

    Raises
    ------
    ReliabilityError
        A retained state has a boundary tail above 1e-8 (the default box is
        widened a few times before giving up).
    """
    if pot.dimension != 1:
        raise InputError("eigensolve_1d needs a one-dimensional potential")
    auto_box, N_given = L is None, N
    if not hbar > 0 or not e_max > pot.minimum_energy():
        raise InputError("need hbar > 0 and e_max above the potential minimum")
    v = lambda q: float(pot.value(np.array([q])))  # noqa: E731
    if L is None:
        L = _box_half_width(v, e_max, box_factor)
    if N is None:
        p_cut = 1.6 * math.sqrt(2.0 * box_factor * e_max) + 10.0 * math.sqrt(hbar)
        n_min = 2.0 * L * p_cut / (math.pi * hbar)
        N = 1 << max(6, math.ceil(math.log2(n_min)))
    if N > MAX_GRID:
        raise ReliabilityError(f"grid of {N} nodes exceeds the {MAX_GRID} limit")
    dx = 2.0 * L / N
    x = -L + dx * np.arange(N)
    k = 2.0 * math.pi * np.fft.fftfreq(N, d=dx)
    # dense spectral kinetic matrix: T = F^{-1} diag(hbar^2 k^2 / 2) F
    T = np.real(np.fft.ifft(0.5 * hbar ** 2 * k[:, None] ** 2 * np.fft.fft(np.eye(N), axis=0), axis=0))
    T = 0.5 * (T + T.T)
    Hm = T + np.diag(pot.value(x[:, None]))
    vals, vecs = eigh(Hm, subset_by_value=(-np.inf, e_max))
    vecs = vecs / math.sqrt(dx)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    vecs = vecs * signs
    res = np.linalg.norm(Hm @ vecs - vecs * vals, axis=0) * math.sqrt(dx)
    edge = max(2, N // 50)
    tails = np.max(np.abs(np.concatenate([vecs[:edge], vecs[-edge:]])), axis=0)
    tails = tails / np.max(np.abs(vecs), axis=0)
    if vals.size and np.max(tails) > TAIL_TOL:
        if auto_box and box_factor < 48.0:
            # at large hbar the tunnelling tail outruns the energy-based box
            return eigensolve_1d(pot, hbar, e_max, N=N_given, box_factor=2.0 * box_factor)
        raise ReliabilityError(
            f"boundary tail {np.max(tails):.2e} exceeds {TAIL_TOL}; enlarge the box")
    log.debug("eigensolve: L=%.4g N=%d states=%d", L, N, vals.size)
    return EigenBasis(hbar=hbar, potential=pot, L=float(L), N=int(N), eigenvalues=vals,
                      vectors=np.ascontiguousarray(vecs.T),
                      convergence_estimate=np.maximum(res, tails), e_max=float(e_max))


def eigensolve(pot: Potential, hbar: float, e_max: float, **kw):
    """1D eigensolve, or a tensor-product basis for separable d = 2 potentials."""
    if pot.dimension == 1:
        return eigensolve_1d(pot, hbar, e_max, **kw)
    if pot.dimension != 2:
        raise InputError("only d = 1 and separable d = 2 are supported")
    factors = []
    for k in range(2):
        v = _one_dim_potential(pot, k)
        # each factor only needs energies up to e_max minus the other ground level
        factors.append(eigensolve_1d(v, hbar, e_max, **kw))
    labels, evs = [], []
    for i, j in product(range(factors[0].eigenvalues.size), range(factors[1].eigenvalues.size)):
        e = factors[0].eigenvalues[i] + factors[1].eigenvalues[j]
        if e <= e_max:
            labels.append((i, j))
            evs.append(e)
    order = np.argsort(evs, kind="stable")
    return SeparableBasis(tuple(factors), hbar, float(e_max),
                          tuple(labels[i] for i in order), np.asarray(evs)[order])


def _artifact_paths(stem):
    # append rather than replace suffixes: stems such as "basis_h0.02" contain dots
    stem = Path(stem)
    return stem.parent / (stem.name + ".json"), stem.parent / (stem.name + ".csv")


def load_basis(stem) -> EigenBasis:
    """Inverse of :meth:`EigenBasis.export`."""
    jpath, cpath = _artifact_paths(stem)
    header = json.loads(jpath.read_text())
    if header.get("format") != "airylayer-basis-1":
        raise InputError("not a basis artifact")
    with open(cpath, newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh)]
    vecs = np.ascontiguousarray(np.array(rows).T)
    return EigenBasis(hbar=float(header["hbar"]), potential=Potential.from_dict(header["potential"]),
                      L=float(header["L"]), N=int(header["N"]),
                      eigenvalues=np.array([float(e) for e in header["eigenvalues"]]),
                      vectors=vecs,
                      convergence_estimate=np.array([float(e) for e in header["convergence_estimate"]]),
                      e_max=float(header["e_max"]))


# ---------------------------------------------------------------------------
# Wigner transforms
# ---------------------------------------------------------------------------

def _upsample(psi: np.ndarray, r: int) -> np.ndarray:
    """Band-limited (FFT zero-padding) refinement of periodic samples."""
    n = psi.shape[-1]
    F = np.fft.fft(psi, axis=-1)
    G = np.zeros(psi.shape[:-1] + (n * r,), dtype=complex)
    h = n // 2
    G[..., :h] = F[..., :h]
    G[..., -h:] = F[..., -h:]
    # split the Nyquist bin symmetrically
    G[..., h] = 0.5 * F[..., h]
    G[..., -h] = 0.5 * F[..., h]
    return np.fft.ifft(G, axis=-1) * r


def _shift(psi_fine: np.ndarray, delta: float, dx: float) -> np.ndarray:
    """Samples of psi(x_j + delta) by a spectral phase shift."""
    n = psi_fine.shape[-1]
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    return np.fft.ifft(np.fft.fft(psi_fine, axis=-1) * np.exp(1j * k * delta), axis=-1)


def _wigner_grid(states: np.ndarray, basis: EigenBasis, x, xi, margin: float = 0.0) -> np.ndarray:
    """W for states of shape (n, N) at paired queries (x, xi); returns (n, m)."""
    states = np.atleast_2d(np.asarray(states))
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    xi = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
    if x.shape != xi.shape:
        raise InputError("x and xi must have matching shapes")
    L, hbar = basis.L, basis.hbar
    if np.any(np.abs(x) >= L - margin):
        raise DomainError("query x outside the safe interior of the box")
    h = basis.dx / UPSAMPLE
    fine = _upsample(states, UPSAMPLE)
    nf = fine.shape[-1]
    out = np.empty((states.shape[0], x.size))
    for xv in np.unique(x):
        sel = np.nonzero(x == xv)[0]
        j0 = int(round((xv + L) / h))
        delta = xv - (-L + j0 * h)
        shifted = _shift(fine, delta, h) if delta != 0.0 else fine
        mmax = int(math.floor((L - abs(xv)) / h)) - 1
        m = np.arange(-mmax, mmax + 1)
        plus = shifted[:, (j0 + m) % nf]
        minus = shifted[:, (j0 - m) % nf]
        corr = plus * np.conj(minus)                 # (n, 2 mmax + 1)
        phase = np.exp(-2j * np.outer(m * h, xi[sel]) / hbar)
        out[:, sel] = np.real(corr @ phase) * h / (math.pi * hbar)
    return out


def wigner_of_state(psi, basis: EigenBasis, x, xi) -> WignerField:
    """
    W(x, xi) = (2 pi hbar)^{-1} integral psi(x + v/2) conj(psi(x - v/2)) e^{-i v xi / hbar} dv
    for a state sampled on ``basis``'s grid.

    The state is refined spectrally by a factor four and shifted so that the
    query abscissa is a node; the v-integral is then the trapezoid rule on
    the refined grid, exact up to aliasing for band-limited data.
    """
    psi = np.asarray(psi)
    if psi.shape != (basis.N,):
        raise InputError("state must be sampled on the basis grid")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = _wigner_grid(psi[None, :], basis, x, xi)[0]
    return WignerField(x, xi, vals, basis.hbar, "single-state")


def oscillator_wigner_exact(n: int, hbar: float, x, xi, omega: float = 1.0):
    """W_n = (-1)^n / (pi hbar) L_n(4H / hbar omega) exp(-2H / hbar omega), H = (xi^2 + omega^2 x^2)/2."""
    if not hbar > 0:
        raise InputError("hbar must be positive")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    H = 0.5 * (xi * xi + (omega * x) ** 2)
    val = (-1) ** n / (math.pi * hbar) * np.asarray(laguerre_scaled(n, 4.0 * H / (hbar * omega)))
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# Energy window
# ---------------------------------------------------------------------------

def _bump(t, a):
    """Even C-infinity cutoff: 1 on [-a/2, a/2], 0 outside (-a, a)."""
    x = np.abs(np.asarray(t, dtype=float))
    y = np.clip((x - 0.5 * a) / (0.5 * a), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        g1 = np.where(y < 1.0, np.exp(-1.0 / np.where(y < 1.0, 1.0 - y, 1.0)), 0.0)
        g0 = np.where(y > 0.0, np.exp(-1.0 / np.where(y > 0.0, y, 1.0)), 0.0)
    out = g1 / (g1 + g0)
    return np.where(x >= a, 0.0, out)


@dataclass(frozen=True)
class WindowFunction:
    """
    Smooth energy window.  ``fhat`` is the even bump in time and
    f(lambda) = (1/2 pi) integral fhat(t) e^{i lambda t} dt its transform.
    """

    a: float
    lam_cut: float
    lam_grid: np.ndarray = field(repr=False)
    f_grid: np.ndarray = field(repr=False)
    f0: float = 0.0
    nodes: int = 2000
    even: bool = True

    def fhat(self, t):
        v = _bump(t, self.a)
        return float(v) if np.ndim(v) == 0 else v

    def f(self, lam):
        return _window_transform(lam, self.a, self.nodes)


@lru_cache(maxsize=8)
def _ramp_rule(a: float, nodes: int):
    # Gauss-Legendre on the ramp [a/2, a], weights folded with fhat
    u, w = np.polynomial.legendre.leggauss(nodes)
    tau = 0.5 * a + 0.25 * a * (u + 1.0)
    return tau, 0.25 * a * w * _bump(tau, a)


def _window_transform(lam, a, nodes):
    """f(lambda) = sin(lambda a/2)/(pi lambda) + (1/pi) int_{a/2}^{a} fhat cos(lambda t) dt."""
    lam = np.asarray(lam, dtype=float)
    flat = lam.ravel()
    tau, w = _ramp_rule(float(a), int(nodes))
    safe = np.where(flat == 0.0, 1.0, flat)
    head = np.where(flat == 0.0, 0.5 * a / math.pi, np.sin(0.5 * a * flat) / (math.pi * safe))
    out = np.empty_like(flat)
    for i in range(0, flat.size, 4096):
        blk = flat[i:i + 4096]
        out[i:i + 4096] = head[i:i + 4096] + np.cos(np.outer(blk, tau)) @ w / math.pi
    return float(out[0]) if lam.ndim == 0 else out.reshape(lam.shape)


def build_window(a: float = 1.0, T_min: Optional[float] = None, strict: bool = False,
                 rel_cut: float = 1e-10, nodes: Optional[int] = None) -> WindowFunction:
    """
    Window with fhat = 1 on [-a/2, a/2] and supp fhat in (-a, a).

    ``lam_cut`` is the smallest lambda beyond which |f| < rel_cut f(0) on
    the sampled grid.  ``a >= T_min`` (the shortest period at the target
    energy) warns, or raises in strict mode.
    """
    if not a > 0:
        raise InputError("window support a must be positive")
    if T_min is not None and a >= T_min:
        msg = f"window support a = {a} reaches the shortest period {T_min:.4g}"
        if strict:
            raise InputError(msg)
        warnings.warn(msg, stacklevel=2)
    lam_max = 1500.0 / a
    if nodes is None:
        nodes = int(max(800, 1.2 * lam_max * a))
    grid = np.arange(0.0, lam_max, 0.25)
    vals = _window_transform(grid, a, nodes)
    f0 = float(vals[0])
    big = np.nonzero(np.abs(vals) >= rel_cut * f0)[0]
    lam_cut = float(grid[big[-1]] + 1.0)
    return WindowFunction(a=float(a), lam_cut=lam_cut, lam_grid=grid, f_grid=vals, f0=f0,
                          nodes=nodes)


# ---------------------------------------------------------------------------
# Spectral sums
# ---------------------------------------------------------------------------

def _queries(x, xi, d):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if d == 1:
        return np.atleast_1d(x).ravel(), np.atleast_1d(xi).ravel()
    x = np.atleast_2d(x)
    xi = np.atleast_2d(xi)
    if x.shape[-1] != d or x.shape != xi.shape:
        raise InputError(f"queries must have shape (m, {d})")
    return x, xi


def _levels(basis, lo, hi):
    if isinstance(basis, OscillatorSpectrum):
        return basis.levels_between(lo, hi)
    if hi > basis.e_max:
        raise ReliabilityError(
            f"window reaches E = {hi:.6g} but the basis is only reliable up to {basis.e_max:.6g}")
    return [(e, lab) for e, lab in basis.levels() if lo <= e <= hi]


def smoothed_spectral_wigner(E: float, hbar: float, basis, window: WindowFunction,
                             x, xi) -> WignerField:
    """
    sum_j f((E - E_j)/hbar) W_j(x, xi), truncated at |E - E_j| <= lam_cut hbar.

    ``basis`` may be an :class:`OscillatorSpectrum` (closed form), an
    :class:`EigenBasis` or a :class:`SeparableBasis`.
    """
    if not math.isclose(basis.hbar, hbar, rel_tol=1e-12):
        raise InputError("basis was built for a different hbar")
    d = basis.dimension
    xq, xiq = _queries(x, xi, d)
    lo, hi = E - window.lam_cut * hbar, E + window.lam_cut * hbar
    levels = _levels(basis, lo, hi)
    if not levels:
        return WignerField(xq, xiq, np.zeros(len(xq)), hbar, "smoothed-sum")
    evs = np.array([e for e, _ in levels])
    labels = [lab for _, lab in levels]
    weights = window.f((E - evs) / hbar)
    W = basis.wigner_many(labels, xq, xiq)
    vals = _pairwise_sum(weights[:, None] * W)
    return WignerField(xq, xiq, vals, hbar, "smoothed-sum")


def sharp_spectral_wigner(E_lo: float, E_hi: float, hbar: float, basis, x, xi) -> WignerField:
    """Unweighted sum of W_j over eigenvalues in the closed interval [E_lo, E_hi]."""
    if not math.isclose(basis.hbar, hbar, rel_tol=1e-12):
        raise InputError("basis was built for a different hbar")
    d = basis.dimension
    xq, xiq = _queries(x, xi, d)
    if E_hi < E_lo:
        return WignerField(xq, xiq, np.zeros(len(xq)), hbar, "sharp-interval")
    levels = _levels(basis, E_lo, E_hi)
    if not levels:
        return WignerField(xq, xiq, np.zeros(len(xq)), hbar, "sharp-interval")
    W = basis.wigner_many([lab for _, lab in levels], xq, xiq)
    return WignerField(xq, xiq, _pairwise_sum(W), hbar, "sharp-interval")


def _pairwise_sum(a: np.ndarray) -> np.ndarray:
    """Sum over axis 0 with a fixed pairwise tree (order independent of threads)."""
    a = np.asarray(a, dtype=float)
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:])])
        a = a[0::2] + a[1::2]
    return a[0]
