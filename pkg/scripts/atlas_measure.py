"""Measure and structure of the admissible window A_L under the default schedule.

    python3 scripts/atlas_measure.py --L 1e3 1e4 1e5 1e6 1e7
"""
import argparse

from kicked_circle import PsiSpec, default_schedule, measure_report
from kicked_circle.atlas import compute_A_set, fit_c_hat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=float, nargs="+", default=[1e3, 1e4, 1e5, 1e6, 1e7])
    args = ap.parse_args()

    psi = PsiSpec.default()
    reports = []
    print("L,eps0,K1,K2,measure_A,components,K1^2/L,K2/L,2eps0,c_hat")
    for L in args.L:
        s = default_schedule(L)
        w = compute_A_set(psi, L, s.eps0, s.K1, s.K2)
        r = measure_report(w)
        reports.append(r)
        print(f"{L!r},{s.eps0!r},{s.K1!r},{s.K2!r},{r.measure!r},{w.component_count},"
              f"{r.k1_term!r},{r.k2_term!r},{r.eps_term!r},{r.c_hat!r}")
    print(f"# sweep constant c_hat = {fit_c_hat(reports)!r}")


if __name__ == "__main__":
    main()
