"""min_a lambda/log L for eps = c L^(beta - 1) over a grid of rotations.

Runs one sweep per beta through the sweep runner and prints the per-L
minimum and median of lambda/log L from summary.json.

    python3 scripts/lower_bound_trend.py --out out/trend --workers 1
"""
import argparse
import json
from pathlib import Path

from kicked_circle import SweepConfig, run_sweep
from kicked_circle.config import ASampling, EpsRule, EstimatorSettings


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/trend")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--a-points", type=int, default=64)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--L", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    args = ap.parse_args()

    est = EstimatorSettings(methods=("monte_carlo",), n_steps=args.steps, burn_in=args.steps // 20)
    print("beta,L,eps,min_lambda_over_logL,median_lambda_over_logL")
    for beta, c in ((0.5, 1.0), (1.0, 0.5)):
        cfg = SweepConfig(a_grid=ASampling("grid", args.a_points), L_grid=tuple(args.L),
                          eps_rule=EpsRule("power", c=c, beta=beta), estimator=est,
                          output_dir=str(Path(args.out) / f"beta_{beta}"), workers=args.workers)
        run_sweep(cfg)
        summary = json.loads((Path(cfg.output_dir) / "summary.json").read_text())
        for L in args.L:
            e = summary["per_L"][repr(float(L))]
            print(f"{beta},{L!r},{cfg.eps_for(L)!r},{e['lambda_mc_over_logL_min']!r},"
                  f"{e['lambda_mc_over_logL_median']!r}")


if __name__ == "__main__":
    main()
