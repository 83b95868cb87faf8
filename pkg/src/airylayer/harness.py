"""
Batch runners behind the command-line interface.  Each runner returns
``(columns, rows)``; rows are plain lists ready for CSV emission and are
sorted by (hbar, point index) for run-to-run determinism.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import airy_predictor as ap
from .classical import PhasePoint, flow, hamiltonian, period_estimate, symplectic_residual
from .config import Query, RunConfig, generate_queries, surface_point
from .errors import AiryLayerError, ConfigError, JoinMismatchError
from .herman_kluk import stationary_phase_prediction, wigner_propagator
from .midpoint import chord_area, dt_dE_jacobi, green_area, solve_midpoint
from .quantum import (
    OscillatorSpectrum,
    build_window,
    eigensolve,
    load_basis,
    sharp_spectral_wigner,
    smoothed_spectral_wigner,
)

log = logging.getLogger(__name__)

THREADS_ENV = "AIRYLAYER_THREADS"

__all__ = ["run_flow", "run_midpoint", "run_predict", "run_exact", "run_hk", "run_compare",
           "write_csv", "read_csv", "THREADS_ENV"]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        cols = next(rd)
        return cols, [dict(zip(cols, r)) for r in rd]


def _coord_cols(d):
    return [f"x{k}" for k in range(d)] + [f"xi{k}" for k in range(d)]


def _split(z):
    z = complex(z)
    return z.real, z.imag


# ---------------------------------------------------------------------------

def run_flow(cfg: RunConfig):
    d = cfg.dimension
    pot = cfg.potential
    if cfg.flow_points:
        pts = [np.asarray(p, dtype=float) for p in cfg.flow_points]
        if any(p.size != 2 * d for p in pts):
            raise ConfigError(f"flow points need 2d = {2 * d} entries")
    else:
        pts = [surface_point(pot, cfg.energy, th) for th in (0.0, math.pi / 3, 2 * math.pi / 3)]
    tasks = [(i, t, p) for i, p in enumerate(pts) for t in cfg.flow_times]

    def one(task):
        i, t, p = task
        fr = flow(PhasePoint.from_vector(p), pot, t, cfg.integrator)
        e0 = hamiltonian(fr.start, pot)
        drift = abs(hamiltonian(fr.endpoint, pot) - e0) / max(1.0, abs(e0))
        return [i, t, *p, *fr.endpoint.q, *fr.endpoint.p, float(np.real(fr.action)),
                float(drift), symplectic_residual(fr), cfg.convention.convention_id]

    rows = _pmap(one, tasks)
    cols = ["point_index", "t"] + [f"q{k}" for k in range(d)] + [f"p{k}" for k in range(d)] \
        + [f"q{k}_t" for k in range(d)] + [f"p{k}_t" for k in range(d)] \
        + ["action", "energy_drift", "symplectic_residual", "convention_id"]
    rows.sort(key=lambda r: (r[0], r[1]))
    return cols, rows


def run_midpoint(cfg: RunConfig):
    d = cfg.dimension
    pot = cfg.potential
    E = cfg.energy
    hbar = cfg.hbars[0]
    queries = generate_queries(cfg, hbar)

    def one(q: Query):
        base = [q.index, *q.x, *q.xi, q.u]
        try:
            sol = solve_midpoint(q.x, q.xi, E, pot, cfg.integrator, allow_exterior=True)
            prof = ap.phase_profile(q.x, q.xi, E, pot, cfg.integrator)
            cfu = ap.cfu_extract(prof, sol)
            jac = dt_dE_jacobi(sol, pot)
            return base + [sol.s, sol.tau, *_split(sol.t_plus), *_split(sol.dt_dE), *_split(jac),
                           *_split(chord_area(sol)), *_split(green_area(sol, pot)),
                           cfu.rho, cfu.mu, "ok", cfg.convention.convention_id]
        except AiryLayerError as exc:
            return base + [None] * 14 + [f"{type(exc).__name__}: {exc}",
                                         cfg.convention.convention_id]

    rows = _pmap(one, queries)
    cols = ["point_index"] + _coord_cols(d) + [
        "u", "s", "tau", "t_plus_re", "t_plus_im", "dt_dE_re", "dt_dE_im", "dt_dE_jacobi_re",
        "dt_dE_jacobi_im", "chord_area_re", "chord_area_im", "green_area_re", "green_area_im",
        "rho", "mu", "status", "convention_id"]
    return cols, rows


PREDICT_COLS = ["hbar", "point_index", "tag"]


def _predict_rows(cfg: RunConfig, strict: bool = False, convention=None):
    conv = convention or cfg.convention
    d = cfg.dimension
    pot = cfg.potential
    E = cfg.energy
    window = build_window(cfg.window_a)
    tasks = [(h, q) for h in cfg.hbars for q in generate_queries(cfg, h)]

    def one(task):
        h, q = task
        row = {"hbar": h, "point_index": q.index, "tag": q.tag, "x": q.x, "xi": q.xi, "u": q.u}
        status = []
        try:
            pr = ap.predict_airy_layer(q.x, q.xi, E, h, pot, cfg.integrator, conv)
            row.update(s=pr.s, rho=pr.rho, mu=pr.mu, u00=pr.u00, airy_argument=pr.airy_argument,
                       airy_value=pr.value, interpolated=pr.interpolated)
        except AiryLayerError as exc:
            if strict:
                raise
            status.append(f"airy:{type(exc).__name__}")
        try:
            nd = ap.predict_nondegenerate(q.x, q.xi, E, h, window, pot, cfg.integrator, conv)
            row["nondeg_value"] = nd.value
            row.setdefault("rho", nd.rho)
        except AiryLayerError as exc:
            status.append(f"nondeg:{type(exc).__name__}")
        row["status"] = ";".join(status) or "ok"
        return row

    out = _pmap(one, tasks)
    out.sort(key=lambda r: (r["hbar"], r["point_index"]))
    return out


def _predict_table(cfg, rows):
    d = cfg.dimension
    cols = PREDICT_COLS + _coord_cols(d) + ["u", "s", "rho", "mu", "u00", "airy_argument",
                                            "airy_value", "nondeg_value", "interpolated",
                                            "status", "convention_id"]
    table = []
    for r in rows:
        table.append([r["hbar"], r["point_index"], r["tag"], *r["x"], *r["xi"], r["u"],
                      r.get("s"), r.get("rho"), r.get("mu"), r.get("u00"),
                      r.get("airy_argument"), r.get("airy_value"), r.get("nondeg_value"),
                      r.get("interpolated"), r["status"], cfg.convention.convention_id])
    return cols, table


def run_predict(cfg: RunConfig, strict: bool = False):
    return _predict_table(cfg, _predict_rows(cfg, strict))


def _is_oscillator(cfg: RunConfig) -> bool:
    return cfg.potential.kind == "isotropic"


def _basis_for(cfg: RunConfig, hbar: float, e_max: float, out_dir, log_rows):
    """Closed-form oscillator, a stored basis, or a fresh eigensolve (exported)."""
    if _is_oscillator(cfg) and cfg.exact.get("closed_form", True):
        log_rows.append((hbar, "closed-form"))
        return OscillatorSpectrum(hbar, cfg.dimension, cfg.potential.omegas[0])
    name = f"basis_h{hbar:.17g}"
    if "basis_dir" in cfg.exact and cfg.dimension == 1:
        stem = Path(cfg.exact["basis_dir"]) / name
        if (stem.parent / (name + ".json")).exists():
            b = load_basis(stem)
            if math.isclose(b.hbar, hbar, rel_tol=1e-15) and b.e_max >= e_max:
                log_rows.append((hbar, f"loaded:{stem.name}"))
                return b
    b = eigensolve(cfg.potential, hbar, e_max)
    if out_dir is not None and cfg.dimension == 1:
        b.export(Path(out_dir) / "basis" / name)
        log_rows.append((hbar, f"eigensolve:exported:{name}"))
    else:
        log_rows.append((hbar, "eigensolve"))
    return b


def _exact_rows(cfg: RunConfig, out_dir=None, strict: bool = False):
    E = cfg.energy
    mode = cfg.exact.get("mode", "smoothed")
    window = build_window(cfg.window_a, T_min=_t_min(cfg), strict=strict)
    rows = []
    sources = []
    for h in cfg.hbars:
        queries = generate_queries(cfg, h)
        if mode == "smoothed":
            e_max = E + window.lam_cut * h + 2 * h
        else:
            lo_c, hi_c = cfg.exact.get("interval", [0.0, 0.0])
            e_max = E + hi_c * h + 2 * h
        basis = _basis_for(cfg, h, e_max, out_dir, sources)
        xs = np.array([q.x for q in queries])
        xis = np.array([q.xi for q in queries])
        if cfg.dimension == 1:
            xs, xis = xs[:, 0], xis[:, 0]
        if mode == "smoothed":
            field = smoothed_spectral_wigner(E, h, basis, window, xs, xis)
        else:
            lo_c, hi_c = cfg.exact.get("interval", [0.0, 0.0])
            field = sharp_spectral_wigner(E - lo_c * h, E + hi_c * h, h, basis, xs, xis)
        src = sources[-1][1]
        for q, v in zip(queries, field.values):
            rows.append({"hbar": h, "point_index": q.index, "tag": q.tag, "x": q.x, "xi": q.xi,
                         "u": q.u, "exact": float(v), "mode": mode, "source": src})
    rows.sort(key=lambda r: (r["hbar"], r["point_index"]))
    return rows, window


def _t_min(cfg: RunConfig):
    return period_estimate(cfg.potential, cfg.energy)


def run_exact(cfg: RunConfig, out_dir=None, strict: bool = False):
    rows, window = _exact_rows(cfg, out_dir, strict)
    d = cfg.dimension
    cols = PREDICT_COLS + _coord_cols(d) + ["u", "exact", "mode", "source", "window_a",
                                            "window_f0", "window_lam_cut", "convention_id"]
    table = [[r["hbar"], r["point_index"], r["tag"], *r["x"], *r["xi"], r["u"], r["exact"],
              r["mode"], r["source"], window.a, window.f0, window.lam_cut,
              cfg.convention.convention_id] for r in rows]
    return cols, table


def run_hk(cfg: RunConfig):
    d = cfg.dimension
    pot = cfg.potential
    tasks = [(t, h, q) for t in cfg.hk_times for h in cfg.hbars for q in generate_queries(cfg, h)]

    def one(task):
        t, h, q = task
        ev = wigner_propagator(t, q.x, q.xi, pot, h, spec=cfg.integrator)
        sp = stationary_phase_prediction(t, q.x, q.xi, pot, h, cfg.integrator)
        diff = abs(ev.value - sp.value)
        return [t, h, q.index, *q.x, *q.xi, ev.value.real, ev.value.imag, sp.value.real,
                sp.value.imag, diff, abs(ev.value), float(np.angle(ev.value)), ev.error_estimate,
                ev.node_count, ev.flagged, cfg.convention.convention_id]

    rows = _pmap(one, tasks)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    cols = ["t", "hbar", "point_index"] + _coord_cols(d) + [
        "U_re", "U_im", "SP_re", "SP_im", "abs_diff", "modulus", "phase", "error_estimate",
        "node_count", "flagged", "convention_id"]
    return cols, rows


# ---------------------------------------------------------------------------
# Comparison and calibration
# ---------------------------------------------------------------------------

def _rows_from_csv(path, kind, d):
    cols, recs = read_csv(path)
    out = []
    for r in recs:
        row = {"hbar": float(r["hbar"]), "point_index": int(r["point_index"]), "tag": r["tag"],
               "x": np.array([float(r[f"x{k}"]) for k in range(d)]),
               "xi": np.array([float(r[f"xi{k}"]) for k in range(d)]), "u": float(r["u"])}
        if kind == "predict":
            for key in ("s", "rho", "mu", "u00", "airy_argument", "airy_value", "nondeg_value"):
                if r.get(key, "") != "":
                    row[key] = float(r[key])
            row["status"] = r["status"]
        else:
            row["exact"] = float(r["exact"])
        out.append(row)
    return out


def _join(pred, exact):
    key = lambda r: (r["hbar"], r["point_index"])  # noqa: E731
    pk = {key(r): r for r in pred}
    ek = {key(r): r for r in exact}
    if set(pk) != set(ek):
        raise JoinMismatchError("prediction and exact runs cover different (hbar, point) sets")
    joined = []
    for k in sorted(pk):
        p, e = pk[k], ek[k]
        if not (np.allclose(p["x"], e["x"], rtol=0, atol=1e-12)
                and np.allclose(p["xi"], e["xi"], rtol=0, atol=1e-12)):
            raise JoinMismatchError(f"query coordinates differ at hbar={k[0]}, point {k[1]}")
        joined.append((p, e))
    return joined


def _predicted(p):
    if "airy_value" in p:
        return p["airy_value"], "airy"
    if "nondeg_value" in p:
        return p["nondeg_value"], "nondeg"
    return None, "none"


def _slope(hbars, errs):
    h = np.asarray(hbars, dtype=float)
    e = np.asarray(errs, dtype=float)
    ok = (e > 0) & np.isfinite(e)
    if ok.sum() < 3:
        return None
    A = np.vstack([np.log(h[ok]), np.ones(ok.sum())]).T
    return float(np.linalg.lstsq(A, np.log(e[ok]), rcond=None)[0][0])


def run_compare(cfg: RunConfig, calibrate: bool = False, out_dir=None, strict: bool = False):
    """
    Join predictions with exact sums; optionally calibrate the prefactor first.

    Calibration is only allowed on the d = 1 isotropic oscillator: the
    constant is fitted there, frozen into a ledger and then used unchanged
    for every other potential.
    """
    d = cfg.dimension
    conv = cfg.convention
    if calibrate and not (_is_oscillator(cfg) and d == 1):
        raise ConfigError("calibration is only defined on the d = 1 isotropic oscillator")
    if "predict_csv" in cfg.compare:
        pred = _rows_from_csv(cfg.compare["predict_csv"], "predict", d)
    else:
        pred = _predict_rows(cfg, strict, conv)
    if "exact_csv" in cfg.compare:
        exact = _rows_from_csv(cfg.compare["exact_csv"], "exact", d)
    else:
        exact, _ = _exact_rows(cfg, out_dir, strict)
    joined = _join(pred, exact)

    ledger = None
    if calibrate:
        unit, ex = [], []
        for p, e in joined:
            if "airy_value" in p:
                unit.append(p["airy_value"] / conv.constant(d))
                ex.append(e["exact"])
        C = ap.fit_prefactor(unit, ex)
        conv = ap.with_prefactor(conv, C, convention_id=f"{conv.convention_id.split('@')[0]}@C={C:.12g}",
                                 potential=cfg.potential.to_dict(), energy=cfg.energy,
                                 hbar=list(cfg.hbars), points=len(unit), window_a=cfg.window_a)
        scale = C / cfg.convention.prefactor
        for p, _ in joined:
            for key in ("airy_value", "nondeg_value"):
                if key in p:
                    p[key] = p[key] * scale
        ledger = conv

    rows = []
    for p, e in joined:
        val, route = _predicted(p)
        if val is None or not math.isfinite(val):
            continue
        ex = e["exact"]
        abs_err = abs(val - ex)
        rel_err = abs_err / abs(ex) if ex != 0 else math.inf
        rows.append({"hbar": p["hbar"], "point_index": p["point_index"], "tag": p["tag"],
                     "x": p["x"], "xi": p["xi"], "s": p.get("s", math.nan), "u": p["u"],
                     "rho": p.get("rho", math.nan), "mu": p.get("mu", math.nan),
                     "u00": p.get("u00", math.nan), "airy_argument": p.get("airy_argument", math.nan),
                     "predicted": val, "exact": ex, "abs_err": abs_err, "rel_err": rel_err,
                     "route": route})
    summary = _summary(rows, cfg.hbars)
    report = {
        "convention": conv.to_dict(),
        "potential": cfg.potential.to_dict(),
        "energy": cfg.energy,
        "window_a": cfg.window_a,
        "skipped": len(joined) - len(rows),
        "summary": summary,
        "rows": [{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in r.items()}
                 for r in rows],
    }
    cols = PREDICT_COLS + _coord_cols(d) + ["s", "u", "rho", "mu", "u00", "airy_argument",
                                            "predicted", "exact", "abs_err", "rel_err", "route",
                                            "convention_id"]
    table = [[r["hbar"], r["point_index"], r["tag"], *r["x"], *r["xi"], r["s"], r["u"], r["rho"],
              r["mu"], r["u00"], r["airy_argument"], r["predicted"], r["exact"], r["abs_err"],
              r["rel_err"], r["route"], conv.convention_id] for r in rows]
    return cols, table, report, ledger


def _summary(rows, hbars):
    """
    Per-hbar score: the largest relative error over rows at Airy extrema
    when present, otherwise the largest error over the oscillatory rows
    normalized by the largest |exact| there.
    """
    per = {}
    for h in hbars:
        sel = [r for r in rows if r["hbar"] == h]
        ext = [r for r in sel if r["tag"].startswith("extremum")]
        if ext:
            score = max(r["rel_err"] for r in ext)
        else:
            osc = [r for r in sel if r["airy_argument"] == r["airy_argument"]
                   and r["airy_argument"] <= 0] or sel
            scale = max((abs(r["exact"]) for r in osc), default=0.0)
            score = max((r["abs_err"] for r in osc), default=math.nan) / scale if scale else math.nan
        per[repr(float(h))] = score
    errs = [per[repr(float(h))] for h in hbars]
    return {"score_by_hbar": per,
            "max_rel_err_oscillatory": max((e for e in errs if e == e), default=math.nan),
            "convergence_slope": _slope(hbars, errs)}
