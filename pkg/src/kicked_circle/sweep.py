"""Deterministic parallel sweeps over (a, L) cells and their output files.

Every cell is a pure function of (config, cell index): Monte Carlo kicks come
from stream ``cell index`` and a-values drawn from A_L use a dedicated stream.
Rows are written in cell-index order, so results.csv does not depend on the
number of workers.  Wall-clock times go to timings.csv, which is not part of
the reproducibility contract.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import atlas as atlas_mod
from .arcs import ArcSet
from .circle_map import MapParams, PsiSpec
from .config import SweepConfig, validate_config
from .errors import ConfigError, EmptyAtlas, KickedCircleError
from .lyapunov import birkhoff_lyapunov, construct_sink, jensen_upper_check, quadrature_lyapunov, verify_sink
from .noise import KickStream, NoiseConfig
from .transfer_operator import build_ulam, check_density_sup_bound, ergodic_cover_check, stationary_density

# stream ids above any plausible cell count
ATLAS_STREAM = 1 << 48
COVER_SUBSTREAM = 1 << 32

RESULT_COLUMNS = (
    "cell", "a", "L", "eps", "seed", "lambda_mc", "std_error", "lambda_quad", "mean_abs_dpsi",
    "sup_density", "density_bound", "density_residual", "cover_steps", "in_A_L", "jensen_ok",
    "status", "error",
)


@dataclass(frozen=True)
class Cell:
    index: int
    a: float
    L: float
    eps: float


@lru_cache(maxsize=32)
def _window(psi: PsiSpec, L: float):
    try:
        return atlas_mod.scheduled_window(psi, L)
    except (EmptyAtlas, ValueError):
        return None


def _atlas_a(cfg: SweepConfig, iL: int, ia: int, L: float) -> float:
    w = _window(cfg.psi, L)
    if w is None:
        raise EmptyAtlas(f"no scheduled window at L={L:g}")
    stream = KickStream(NoiseConfig(0.0, cfg.master_seed), ATLAS_STREAM, substream=iL, position=ia)
    return float(w.A.sample(stream.uniforms(1))[0])


def enumerate_cells(cfg: SweepConfig) -> list[Cell]:
    if cfg.cells:
        return [Cell(i, a % 1.0, L, eps) for i, (a, L, eps) in enumerate(cfg.cells)]
    out = []
    g = cfg.a_grid
    for iL, L in enumerate(cfg.L_grid):
        eps = cfg.eps_for(L)
        for ia in range(len(g)):
            if g.kind == "grid":
                a = ia / g.count
            elif g.kind == "list":
                a = g.values[ia] % 1.0
            else:
                a = _atlas_a(cfg, iL, ia, L)
            out.append(Cell(len(out), a, L, eps))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, np.bool_):
        return _fmt(bool(v))
    return str(v)


def run_cell(cfg: SweepConfig, cell: Cell) -> tuple[dict, float, np.ndarray | None]:
    """One row of results.csv, its wall time and (optionally) the density."""
    t0 = time.perf_counter()
    est = cfg.estimator
    row = {k: None for k in RESULT_COLUMNS}
    row.update(cell=cell.index, a=cell.a, L=cell.L, eps=cell.eps, seed=cfg.master_seed)
    errors = []
    density = None
    p = MapParams(cell.a, cell.L, cfg.psi)
    mc = quad = None
    if "monte_carlo" in est.methods:
        try:
            mc = birkhoff_lyapunov(p, cell.eps, seed=cfg.master_seed, n_steps=est.n_steps,
                                   burn_in=est.burn_in, n_replicas=est.n_replicas, stream_id=cell.index)
            row.update(lambda_mc=mc.value, std_error=mc.std_error, mean_abs_dpsi=mc.mean_abs_dpsi)
        except (KickedCircleError, ValueError) as exc:
            errors.append(f"monte_carlo:{type(exc).__name__}")
    if "quadrature" in est.methods:
        try:
            U = build_ulam(p, cell.eps, est.n_cells, est.quad_order)
            d = stationary_density(U, tol=est.tol, max_iter=est.max_iter)
            quad = quadrature_lyapunov(p, d, cell.eps)
            rep = check_density_sup_bound(d, cell.eps)
            row.update(lambda_quad=quad.value, sup_density=rep.max_density,
                       density_bound=rep.collar_bound, density_residual=d.residual)
            if mc is None:
                row["mean_abs_dpsi"] = quad.mean_abs_dpsi
            density = d.rho
        except (KickedCircleError, ValueError) as exc:
            errors.append(f"quadrature:{type(exc).__name__}")
    if est.cover:
        try:
            stream = KickStream(NoiseConfig(0.0, cfg.master_seed), cell.index, substream=COVER_SUBSTREAM)
            center = float(stream.uniforms(1)[0])
            J0 = ArcSet.ball(center, est.cover_arc_length / 2.0)
            res = ergodic_cover_check(p, cell.eps, J0, est.cover_max_steps)
            row["cover_steps"] = res.steps if res.covered else -1
        except (KickedCircleError, ValueError) as exc:
            errors.append(f"cover:{type(exc).__name__}")
    w = _window(cfg.psi, cell.L) if atlas_mod.SCHEDULE_L_RANGE[0] <= cell.L <= atlas_mod.SCHEDULE_L_RANGE[1] else None
    if w is not None:
        row["in_A_L"] = bool(w.contains(cell.a))
    if est.jensen and (mc is not None or quad is not None):
        checks = [jensen_upper_check(e, p).passed for e in (mc, quad) if e is not None]
        row["jensen_ok"] = all(checks)
    row["status"] = "ok" if not errors else ("partial" if (mc is not None or quad is not None) else "error")
    row["error"] = ";".join(errors)
    return row, time.perf_counter() - t0, density


def _run_cell_star(args):
    cfg, cell = args
    return run_cell(cfg, cell)


def _header(cfg: SweepConfig) -> str:
    return f"# master_seed={cfg.master_seed}\n"


@dataclass
class SweepResult:
    rows: list
    output_dir: Path
    n_failed: int

    @property
    def exit_code(self) -> int:
        return 2 if self.n_failed else 0


def run_sweep(cfg: SweepConfig, log=None) -> SweepResult:
    v = validate_config(cfg)
    if not v.ok:
        raise ConfigError(list(v.errors))
    if log:
        for w in v.warnings:
            log(f"warning: {w}")
    cells = enumerate_cells(cfg)
    jobs = [(cfg, c) for c in cells]
    if cfg.workers == 1:
        outputs = [_run_cell_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            outputs = list(ex.map(_run_cell_star, jobs, chunksize=1))
    rows = [o[0] for o in outputs]
    out = Path(cfg.output_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    write_results(out / "results.csv", rows, cfg)
    with open(out / "timings.csv", "w") as fh:
        fh.write("cell,wall_time\n")
        for row, wall, _ in outputs:
            fh.write(f"{row['cell']},{wall!r}\n")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    windows = {}
    for L in sorted({c.L for c in cells}):
        if atlas_mod.SCHEDULE_L_RANGE[0] <= L <= atlas_mod.SCHEDULE_L_RANGE[1]:
            windows[L] = _window(cfg.psi, L)
    summary = summarize(rows, windows, cfg)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    densities = [(o[0], o[2]) for o in outputs] if cfg.density_profiles else []
    emit_plotdata(rows, windows, out / "plotdata", cfg, densities)
    n_failed = sum(r["status"] != "ok" for r in rows)
    return SweepResult(rows, out, n_failed)


def write_results(path, rows, cfg: SweepConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_header(cfg))
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(RESULT_COLUMNS)
        for r in rows:
            wr.writerow([_fmt(r[k]) for k in RESULT_COLUMNS])


def read_results(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _lambda(row) -> float | None:
    for k in ("lambda_mc", "lambda_quad"):
        v = row.get(k)
        if v is not None and v != "":
            return float(v)
    return None


def summarize(rows, windows, cfg: SweepConfig) -> dict:
    per_L = {}
    for L in sorted({float(r["L"]) for r in rows}):
        sub = [r for r in rows if float(r["L"]) == L]
        entry = {"n_cells": len(sub), "n_failed": sum(r["status"] != "ok" for r in sub)}
        for key in ("lambda_mc", "lambda_quad"):
            vals = [float(r[key]) / math.log(L) for r in sub if r[key] not in (None, "")] if L > 1 else []
            if vals:
                entry[f"{key}_over_logL_min"] = min(vals)
                entry[f"{key}_over_logL_mean"] = math.fsum(vals) / len(vals)
                entry[f"{key}_over_logL_median"] = float(np.median(vals))
        w = windows.get(L)
        entry["measure_A_L"] = w.measure if w is not None else None
        per_L[repr(L)] = entry
    return {"master_seed": cfg.master_seed, "n_cells": len(rows), "per_L": per_L}


def emit_plotdata(rows, windows, outdir, cfg: SweepConfig, densities=()) -> list[Path]:
    """Per-figure CSVs: lambda_vs_a.csv, atlas.csv and density_<cell>.csv."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    hdr = _header(cfg)
    written = []
    p = outdir / "lambda_vs_a.csv"
    with open(p, "w") as fh:
        fh.write(hdr + "a,L,lambda_over_logL,in_A_L\n")
        for r in rows:
            lam = _lambda(r)
            L = float(r["L"])
            val = lam / math.log(L) if lam is not None and L > 1 else None
            fh.write(f"{_fmt(float(r['a']))},{_fmt(L)},{_fmt(val)},{_fmt(r['in_A_L'])}\n")
    written.append(p)
    p = outdir / "atlas.csv"
    with open(p, "w") as fh:
        fh.write(hdr + "L,measure_A,K1,K2,eps0\n")
        for L, w in sorted(windows.items()):
            if w is not None:
                fh.write(f"{w.L!r},{w.measure!r},{w.K1!r},{w.K2!r},{w.eps0!r}\n")
    written.append(p)
    for row, rho in densities:
        if rho is None:
            continue
        p = outdir / f"density_{row['cell']}.csv"
        n = rho.size
        bound = float(row["density_bound"])
        with open(p, "w") as fh:
            fh.write(hdr + f"# a={float(row['a'])!r} L={float(row['L'])!r} eps={float(row['eps'])!r}\n")
            fh.write("cell_midpoint,density,sup_bound\n")
            for j in range(n):
                fh.write(f"{(j + 0.5) / n!r},{float(rho[j])!r},{bound!r}\n")
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# single-purpose suites used by the CLI


def run_sink_suite(psi: PsiSpec, L: float, seed: int, n_steps: int, outdir, fold_index: int = 0) -> dict:
    cert = construct_sink(psi, L, fold_index)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "sink_certificate.json").write_text(json.dumps(cert.to_dict(), indent=2) + "\n")
    rows = []
    for i, a in enumerate((cert.a_z, cert.a_z - cert.nu / 3.0, cert.a_z + cert.nu / 3.0)):
        est = verify_sink(cert, a % 1.0, seed=seed, n_steps=n_steps, stream_id=i)
        rows.append(est)
    with open(outdir / "sink_results.csv", "w") as fh:
        fh.write(f"# master_seed={seed}\n")
        fh.write("a,L,eps,method,value,std_error,n_steps,burn_in,n_replicas,seed\n")
        for est in rows:
            fh.write(",".join(est.csv_row()) + "\n")
    return {"certificate": cert.to_dict(), "values": [e.value for e in rows],
            "bound": -math.log(2.0), "passed": all(e.value <= -math.log(2.0) for e in rows)}


def run_cover_suite(psi: PsiSpec, L: float, eps: float, seed: int, n_arcs: int = 16,
                    arc_length: float = 1e-3, max_steps: int = 100, a: float | None = None) -> list[dict]:
    """Cover checks from ``n_arcs`` random seed arcs (random a unless given)."""
    out = []
    for i in range(n_arcs):
        u = KickStream(NoiseConfig(0.0, seed), i, substream=COVER_SUBSTREAM).uniforms(2)
        ai = float(u[1]) if a is None else a
        p = MapParams(ai, L, psi)
        res = ergodic_cover_check(p, eps, ArcSet.ball(float(u[0]), arc_length / 2.0), max_steps)
        out.append({"arc": i, "a": ai, "center": float(u[0]), "covered": res.covered, "steps": res.steps})
    return out
