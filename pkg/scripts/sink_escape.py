"""Random sinks near a fold: confinement under the certificate, escape beyond it.

For each L, builds the trapping certificate, runs orbits at a_z and
a_z +- nu/3, then multiplies the kick width until the orbit leaves B_nu(z).

    python3 scripts/sink_escape.py --L 1e2 1e3 1e4 --steps 1000000
"""
import argparse

from kicked_circle import PsiSpec, construct_sink, verify_sink
from kicked_circle.errors import TrapEscape


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    psi = PsiSpec.default()
    print("L,nu,offset,eps_factor,lambda,escape_step")
    for L in args.L:
        cert = construct_sink(psi, L)
        for off in (0.0, -1 / 3, 1 / 3):
            a = (cert.a_z + off * cert.nu) % 1.0
            for factor in (1.0, 1.5, 2.0, 3.0, 4.0):
                try:
                    est = verify_sink(cert, a, seed=args.seed, n_steps=args.steps, eps=factor * cert.eps)
                    print(f"{L!r},{cert.nu!r},{off:.4f},{factor},{est.value!r},")
                except TrapEscape as exc:
                    print(f"{L!r},{cert.nu!r},{off:.4f},{factor},,{exc.step}")


if __name__ == "__main__":
    main()
