"""Two-stage Emax experiment: merge a fixed first stage with random second
stages, reduce, and report how much information the reduction gains.

    python3 scripts/multistage.py --trials 20 --share 0.3
"""

import argparse

import numpy as np

from garza.catalog import reference_model
from garza.design import Design, information_matrix, merge_designs
from garza.reduction import reduce_design


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--share", type=float, default=0.3, help="weight of the first stage")
    ap.add_argument("--seed", type=int, default=1970)
    args = ap.parse_args()

    m = reference_model("emax3")
    lo, hi = m.x_region
    first = Design([lo + 0.1 * (hi - lo), hi], [0.5, 0.5])
    rng = np.random.default_rng(args.seed)
    print(f"first stage {first}, share {args.share}")
    for _ in range(args.trials):
        n = int(rng.integers(1, 9))
        x = np.sort(rng.uniform(lo, hi, n))
        second = Design.build(x, rng.dirichlet(np.ones(n)), "x", normalize=True)
        merged = merge_designs(first, args.share, second)
        rep = reduce_design(m, merged)
        gain = np.linalg.slogdet(information_matrix(m, rep.output))[1] - \
            np.linalg.slogdet(information_matrix(m, merged))[1]
        pts = " ".join(f"{x:.3f}:{w:.3f}" for x, w in rep.output.points())
        print(f"{merged.size:2d} -> {rep.output.size} points  log-det gain {gain:8.4f}  "
              f"margin {rep.dominance_margin:9.2e}  {pts}")


if __name__ == "__main__":
    main()
