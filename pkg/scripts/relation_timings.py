"""Time each operator relation on each builtin surface and print a table."""
import argparse
import time

from hilbring.frobenius import builtin
from hilbring.heisenberg import RELATION_IDS, check_relation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--surfaces", default="p2,p1xp1,k3,t4")
    ap.add_argument("--max-weight", type=int, default=3)
    args = ap.parse_args()
    print(f"{'surface':10} {'relation':16} {'ok':4} {'blocks':>7} {'seconds':>8}")
    for name in args.surfaces.split(","):
        model = builtin(name)
        for rel in RELATION_IDS:
            t0 = time.perf_counter()
            rep = check_relation(rel, model, args.max_weight)
            dt = time.perf_counter() - t0
            print(f"{name:10} {rel:16} {'yes' if rep.passed else 'NO':4} {rep.checked:7d} {dt:8.2f}")


if __name__ == "__main__":
    main()
