"""LPPLS parameter recovery on generated windows: hit rates for tc and m,
optionally with Gaussian log-price noise.

    python scripts/synthetic_recovery.py --cases 50 --noise 0.01
"""

import argparse
import time

import numpy as np

from bubblelab.lppls import SearchConfig, fit_window
from bubblelab.synthetic import recovery_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=50)
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-grid", type=int, default=20)
    ap.add_argument("--starts", type=int, default=10)
    ap.add_argument("--evals", type=int, default=500)
    args = ap.parse_args()

    search = SearchConfig(n_m=args.n_grid, n_omega=args.n_grid, n_tc=args.n_grid,
                          n_starts=args.starts, max_evals=args.evals)
    rng = np.random.default_rng(args.seed)
    dtc, dm, dw = [], [], []
    t0 = time.perf_counter()
    for _ in range(args.cases):
        y, p = recovery_case(rng, args.noise > 0, args.noise)
        fit = fit_window(y, search)
        if not fit.ok:
            dtc.append(np.inf), dm.append(np.inf), dw.append(np.inf)
            continue
        dtc.append(abs(fit.params.tc - p.tc))
        dm.append(abs(fit.params.m - p.m))
        dw.append(abs(fit.params.omega - p.omega))
    elapsed = time.perf_counter() - t0
    dtc, dm, dw = map(np.array, (dtc, dm, dw))
    for tol_tc, tol_m in ((1, 0.02), (5, 0.10)):
        rate = np.mean((dtc <= tol_tc) & (dm <= tol_m))
        print(f"|dtc| <= {tol_tc} and |dm| <= {tol_m}: {rate:.0%}")
    print(f"median |dtc| {np.median(dtc):.3f}, |dm| {np.median(dm):.4f}, |domega| {np.median(dw):.3f}")
    print(f"{elapsed / args.cases * 1e3:.0f} ms per fit")


if __name__ == "__main__":
    main()
