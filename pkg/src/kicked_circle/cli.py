"""Command-line entry point: ``kicked-circle <subcommand> --config cfg.json``.

Exit codes: 0 success, 1 configuration error, 2 some cells failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .atlas import compute_A_set, default_schedule, ergodicity_thresholds, measure_report
from .circle_map import MapParams
from .config import SweepConfig, validate_config
from .errors import ConfigError, KickedCircleError
from .lyapunov import birkhoff_lyapunov, quadrature_lyapunov
from .sweep import enumerate_cells, run_cover_suite, run_sink_suite, run_sweep
from .transfer_operator import build_ulam, check_density_sup_bound, stationary_density

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(args) -> SweepConfig:
    cfg = SweepConfig.load(args.config) if args.config else SweepConfig()
    cfg = cfg.override(args.set)
    cfg = cfg.with_overrides(master_seed=args.seed, output_dir=args.out, workers=args.workers)
    return cfg


def cmd_validate(cfg: SweepConfig, args) -> int:
    v = validate_config(cfg)
    for w in v.warnings:
        _log(f"warning: {w}")
    for e in v.errors:
        _log(f"error: {e}")
    print("ok" if v.ok else "invalid")
    return EXIT_OK if v.ok else EXIT_CONFIG


def _checked(cfg: SweepConfig) -> None:
    v = validate_config(cfg)
    if not v.ok:
        raise ConfigError(list(v.errors))
    for w in v.warnings:
        _log(f"warning: {w}")


def cmd_lyap(cfg: SweepConfig, args) -> int:
    _checked(cfg)
    est = cfg.estimator
    print("a,L,eps,method,value,std_error,n_steps,burn_in,n_replicas,seed")
    failed = 0
    for c in enumerate_cells(cfg):
        p = MapParams(c.a, c.L, cfg.psi)
        try:
            if "monte_carlo" in est.methods:
                e = birkhoff_lyapunov(p, c.eps, cfg.master_seed, est.n_steps, est.burn_in,
                                      est.n_replicas, stream_id=c.index)
                print(",".join(e.csv_row()))
            if "quadrature" in est.methods:
                d = stationary_density(build_ulam(p, c.eps, est.n_cells, est.quad_order), tol=est.tol,
                                       max_iter=est.max_iter)
                print(",".join(quadrature_lyapunov(p, d, c.eps).csv_row()))
        except KickedCircleError as exc:
            _log(f"cell {c.index}: {type(exc).__name__}: {exc}")
            failed += 1
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_density(cfg: SweepConfig, args) -> int:
    _checked(cfg)
    est = cfg.estimator
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for c in enumerate_cells(cfg):
        p = MapParams(c.a, c.L, cfg.psi)
        try:
            U = build_ulam(p, c.eps, est.n_cells, est.quad_order)
            d = stationary_density(U, tol=est.tol, max_iter=est.max_iter)
        except KickedCircleError as exc:
            _log(f"cell {c.index}: {type(exc).__name__}: {exc}")
            failed += 1
            continue
        rep = check_density_sup_bound(d, c.eps)
        d.to_csv(out / f"density_{c.index}.csv",
                 header=f"master_seed={cfg.master_seed} a={c.a!r} L={c.L!r} eps={c.eps!r}")
        if args.save_matrix:
            U.save(out / f"ulam_{c.index}.bin")
        print(f"cell {c.index}: residual={d.residual:.3g} iterations={d.iterations} "
              f"sup_density={rep.max_density:.6g} bound={rep.collar_bound:.6g} passed={rep.passed}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_atlas(cfg: SweepConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    failed = 0
    for L in cfg.L_grid:
        try:
            s = default_schedule(L)
            w = compute_A_set(cfg.psi, L, s.eps0, s.K1, s.K2)
        except (KickedCircleError, ValueError) as exc:
            _log(f"L={L:g}: {type(exc).__name__}: {exc}")
            failed += 1
            continue
        r = measure_report(w)
        (out / f"window_L{L:g}.json").write_text(w.to_json() + "\n")
        rows.append(r.to_dict() | {"component_count": w.component_count})
        print(f"L={L:g} m(A)={w.measure:.6f} components={w.component_count} c_hat={r.c_hat:.4g}")
    (out / "atlas_report.json").write_text(json.dumps(rows, indent=2) + "\n")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sink(cfg: SweepConfig, args) -> int:
    failed = 0
    for L in cfg.L_grid:
        try:
            res = run_sink_suite(cfg.psi, L, cfg.master_seed, cfg.estimator.n_steps,
                                 Path(cfg.output_dir) / f"sink_L{L:g}", args.fold)
        except KickedCircleError as exc:
            _log(f"L={L:g}: {type(exc).__name__}: {exc}")
            failed += 1
            continue
        vals = ", ".join(f"{v:.4f}" for v in res["values"])
        print(f"L={L:g} nu={res['certificate']['nu']:.6g} lambda=[{vals}] <= -log 2: {res['passed']}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_erg_check(cfg: SweepConfig, args) -> int:
    failed = 0
    for L in cfg.L_grid:
        eps = cfg.eps_for(L)
        gen, large = ergodicity_thresholds(cfg.psi, L)
        res = run_cover_suite(cfg.psi, L, eps, cfg.master_seed, args.arcs,
                              cfg.estimator.cover_arc_length, cfg.estimator.cover_max_steps)
        worst = max(r["steps"] for r in res)
        ok = all(r["covered"] for r in res)
        failed += not ok
        print(f"L={L:g} eps={eps:.6g} m(I_N+1)/2={gen:.6g} b_2/2={large:.6g} "
              f"covered={ok} max_steps={worst}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep(cfg: SweepConfig, args) -> int:
    res = run_sweep(cfg, log=_log)
    print(f"{len(res.rows)} cells written to {res.output_dir} ({res.n_failed} failed)")
    return res.exit_code


COMMANDS = {
    "lyap": cmd_lyap,
    "density": cmd_density,
    "atlas": cmd_atlas,
    "sink": cmd_sink,
    "erg-check": cmd_erg_check,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kicked-circle", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file (defaults are used if omitted)")
        sp.add_argument("--seed", type=int, help="override master_seed")
        sp.add_argument("--out", help="override output_dir")
        sp.add_argument("--workers", type=int, help="override workers")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a top-level scalar config field")
        if name == "density":
            sp.add_argument("--save-matrix", action="store_true", help="also write the Ulam matrix")
        if name == "sink":
            sp.add_argument("--fold", type=int, default=0, help="index of the fold to trap")
        if name == "erg-check":
            sp.add_argument("--arcs", type=int, default=16, help="number of random seed arcs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        for e in exc.errors:
            _log(f"config error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
