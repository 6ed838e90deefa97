"""Interpolate universal polynomials for Chern numbers of X^[n] and print them."""
import argparse
import time

from hilbring.egl_cobordism import universal_polynomial


def show(up):
    parts = [f"({v})*K^{2 * a}*e^{b}" for (a, b), v in sorted(up.terms.items())]
    return " + ".join(parts) or "0"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--polys", default="c4,c2^2,c1^2*c2,c1*c3,c1^4")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for P in args.polys.split(","):
        t0 = time.perf_counter()
        up = universal_polynomial(args.n, P, workers=args.workers)
        held = ", ".join(f"{h[0]}:{'ok' if h[3] == h[4] else 'BAD'}" for h in up.held_out)
        print(f"n={args.n} {P}: {show(up)}   held-out [{held}]  {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
