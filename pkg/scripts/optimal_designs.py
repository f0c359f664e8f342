"""Locally optimal designs on the minimal support class for the catalog.

Prints the reduction case, the optimal design in x-space and its
equivalence-check violation for each reference instance.

    python3 scripts/optimal_designs.py --criterion D
    python3 scripts/optimal_designs.py --criterion Phi --exponent -1
"""

import argparse
import time

from garza.catalog import REFERENCE, reference_model
from garza.errors import CriterionError
from garza.optimizer import Criterion, optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--criterion", default="D", choices=("D", "A", "E", "Phi"))
    ap.add_argument("--exponent", type=float)
    ap.add_argument("--starts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", help="restrict to these reference names")
    args = ap.parse_args()
    crit = Criterion(args.criterion, exponent=args.exponent)

    for name in args.only or REFERENCE:
        m = reference_model(name)
        t0 = time.perf_counter()
        try:
            res = optimize(m, crit, n_starts=args.starts, seed=args.seed)
        except CriterionError as exc:
            print(f"{name:24s} failed: {exc}")
            continue
        pts = "  ".join(f"{x:.5g}:{w:.4f}" for x, w in res.design.points())
        print(f"{name:24s} case={res.case_label} {crit.label}={res.value:.6g} "
              f"viol={res.equivalence.max_violation:.1e} ({time.perf_counter() - t0:.2f}s)")
        print(f"{'':24s} {pts}")


if __name__ == "__main__":
    main()
