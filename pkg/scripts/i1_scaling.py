"""L times the integral of log|tau'| over I_1, against 2N / inf_{I_1}|psi''|.

    python3 scripts/i1_scaling.py --L 1e2 1e3 1e4 1e5 1e6
"""
import argparse

from kicked_circle import MapParams, PsiSpec, compute_I_K, log_integral_I1
from kicked_circle.lyapunov import inf_abs_d2_on


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=float, nargs="+", default=[1e2, 1e3, 1e4, 1e5, 1e6])
    args = ap.parse_args()

    psi = PsiSpec.default()
    print("L,integral,L_times_integral,reference,ratio")
    for L in args.L:
        p = MapParams(0.0, L, psi)
        val = log_integral_I1(p)
        ref = 2 * psi.n_critical / inf_abs_d2_on(psi, compute_I_K(p, 1.0))
        print(f"{L!r},{val!r},{val * L!r},{ref!r},{abs(val) * L / ref!r}")


if __name__ == "__main__":
    main()
