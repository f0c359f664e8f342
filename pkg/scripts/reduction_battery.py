"""Random-design reduction battery over the reference catalog.

Reduces random designs for every reference instance and reports the worst
moment residual, worst scaled dominance margin, output sizes and timing.

    python3 scripts/reduction_battery.py --per-family 200 --seed 1960
"""

import argparse
import time
from collections import defaultdict

import numpy as np

from garza.catalog import REFERENCE, reference_model
from garza.design import Design
from garza.errors import GarzaError
from garza.reduction import reduce_design


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-family", type=int, default=200)
    ap.add_argument("--min-support", type=int, default=4)
    ap.add_argument("--max-support", type=int, default=12)
    ap.add_argument("--seed", type=int, default=1960)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    families = defaultdict(list)
    for name, spec in REFERENCE.items():
        families[spec["family"]].append(name)

    print(f"{'instance':24s} {'n':>4s} {'time':>7s} {'max resid':>10s} {'min margin':>11s} "
          f"{'sizes':>8s} fails")
    total = time.perf_counter()
    for names in families.values():
        models = {n: reference_model(n) for n in names}
        stats = {n: dict(n=0, t=0.0, res=0.0, margin=np.inf, sizes=set(), fails=0)
                 for n in names}
        for i in range(args.per_family):
            name = names[i % len(names)]
            m, st = models[name], stats[name]
            lo, hi = m.x_region
            size = int(rng.integers(args.min_support, args.max_support + 1))
            x = np.sort(rng.uniform(lo, hi, size))
            d = Design.build(x, rng.dirichlet(np.ones(size)), "x", normalize=True)
            t0 = time.perf_counter()
            try:
                rep = reduce_design(m, d)
            except GarzaError as exc:
                st["fails"] += 1
                print(f"  {name}: {exc}")
                continue
            st["t"] += time.perf_counter() - t0
            st["n"] += 1
            st["res"] = max(st["res"], float(np.max(np.abs(rep.scaled_residuals))))
            scale = 1.0 + np.abs(rep.info_input).sum(axis=1).max()
            st["margin"] = min(st["margin"], rep.dominance_margin / scale)
            st["sizes"].add(rep.output.size)
        for name, st in stats.items():
            sizes = ",".join(map(str, sorted(st["sizes"])))
            print(f"{name:24s} {st['n']:4d} {st['t']:6.2f}s {st['res']:10.1e} "
                  f"{st['margin']:11.1e} {sizes:>8s} {st['fails']}")
    print(f"total {time.perf_counter() - total:.1f}s")


if __name__ == "__main__":
    main()
