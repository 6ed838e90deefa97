"""Betti numbers of X^[n] for the builtin surfaces, checked against the Euler series."""
import argparse

from hilbring.frobenius import builtin
from hilbring.goettsche import betti_table, euler_series


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--surfaces", default="p2,p1xp1,k3,t4")
    args = ap.parse_args()
    for name in args.surfaces.split(","):
        model = builtin(name)
        rows = betti_table(model.betti(), args.n)
        euler = euler_series(sum((-1) ** d * b for d, b in enumerate(model.betti())), args.n)
        print(f"# {name}")
        for n in range(args.n + 1):
            bs = [b for m, d, b in sorted(rows) if m == n]
            chi = sum((-1) ** d * b for d, b in enumerate(bs))
            flag = "" if chi == euler[n] else "  MISMATCH"
            print(f"n={n}: {' '.join(map(str, bs))}  (chi {chi}){flag}")


if __name__ == "__main__":
    main()
