"""Compare Hirzebruch genera computed from Chern numbers with the product formula."""
import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from oracles import chi_y_hilbert, genus_from_numbers, genus_polynomial, y_values  # noqa: E402

from hilbring.egl_cobordism import ChernPolynomial, EGLConfig, chern_invariants, chern_number  # noqa: E402
from hilbring.frobenius import builtin  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--surfaces", default="p2;p1xp1;k3;t4")
    ap.add_argument("--mu-transfer", default="k_theory", choices=("k_theory", "literal"))
    ap.add_argument("--sigma-sign", default="alternating", choices=("alternating", "plain"))
    args = ap.parse_args()
    cfg = EGLConfig(mu_transfer=args.mu_transfer, sigma_sign=args.sigma_sign)
    d = 2 * args.n
    for name in args.surfaces.split(";"):
        model = builtin(name)
        nums = {k: chern_number(model, args.n, ChernPolynomial({k: 1}), cfg) for k in genus_polynomial(0, d)}
        x, c = chern_invariants(model)
        res = [genus_from_numbers(nums, d, y) - chi_y_hilbert(x, c, args.n, y) for y in y_values(d)]
        print(f"{name} n={args.n}: {'ok' if not any(res) else 'residuals ' + str([str(r) for r in res])}")


if __name__ == "__main__":
    main()
