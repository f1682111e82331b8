"""Compare Monte Carlo and quadrature Lyapunov exponents on random (a, L, eps).

    python3 scripts/cross_method.py --triples 20 --n-cells 2048 --steps 1000000
"""
import argparse
import math

import numpy as np

from kicked_circle import (
    MapParams,
    PsiSpec,
    birkhoff_lyapunov,
    build_ulam,
    ergodicity_thresholds,
    quadrature_lyapunov,
    stationary_density,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--triples", type=int, default=20)
    ap.add_argument("--n-cells", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    psi = PsiSpec.default()
    rng = np.random.default_rng(args.seed)
    print("a,L,eps,lambda_quad,lambda_mc,std_error,abs_diff,tolerance")
    for i in range(args.triples):
        L = math.exp(rng.uniform(math.log(2.0), math.log(200.0)))
        lo = max(1.01 * max(ergodicity_thresholds(psi, L)), 8.0 / args.n_cells)
        eps = math.exp(rng.uniform(math.log(lo), math.log(0.5)))
        p = MapParams(float(rng.random()), L, psi)
        d = stationary_density(build_ulam(p, eps, args.n_cells))
        q = quadrature_lyapunov(p, d, eps).value
        m = birkhoff_lyapunov(p, eps, seed=args.seed, n_steps=args.steps, burn_in=args.steps // 100,
                              stream_id=i)
        print(f"{p.a!r},{L!r},{eps!r},{q!r},{m.value!r},{m.std_error!r},{abs(q - m.value)!r},"
              f"{3 * m.std_error + 0.01!r}")


if __name__ == "__main__":
    main()
