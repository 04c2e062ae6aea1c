"""Plant an LPPLS bubble after a flat noisy prefix and check how often the
Lagrange-regularised start lands near the true launch row.

    python scripts/start_time_recovery.py --seeds 20 --length 100 --rise 3
"""

import argparse
import time

import numpy as np

from bubblelab.lagrange import lagrange_start
from bubblelab.lppls import SearchConfig, fit_fan
from bubblelab.synthetic import planted_start


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=400)
    ap.add_argument("--prefix", type=int, default=300)
    ap.add_argument("--length", type=int, default=100)
    ap.add_argument("--rise", type=float, default=3.0)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--sigma", type=float, default=0.01)
    ap.add_argument("--tolerance", type=int, default=15)
    ap.add_argument("--full-search", action="store_true", help="default 20^3 grid, 10 starts")
    args = ap.parse_args()

    search = SearchConfig() if args.full_search else SearchConfig(
        n_m=12, n_omega=12, n_tc=12, n_starts=4, max_evals=300)
    hits = 0
    t0 = time.perf_counter()
    for k in range(args.seeds):
        seed = args.first_seed + k
        y, p = planted_start(np.random.default_rng(seed), args.prefix, args.length, args.horizon,
                             args.rise, args.sigma)
        t2 = len(y) - 1
        lf = lagrange_start(fit_fan(y, t2, range(max(0, t2 - 719), t2 - 28), search))
        ok = abs(lf.t1_star - args.prefix) <= args.tolerance
        hits += ok
        print(f"seed {seed}: t1* = {lf.t1_star:4d}  lambda = {lf.lam:.3e}  "
              f"m = {p.m:.2f} omega = {p.omega:.1f}  {'hit' if ok else 'miss'}", flush=True)
    print(f"{hits}/{args.seeds} within {args.tolerance} rows "
          f"({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
