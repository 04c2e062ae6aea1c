"""Short-band confidence indicator on GBM nulls versus synthetic bubbles
observed a few rows before their critical time.

    python scripts/confidence_discrimination.py --nulls 100 --bubbles 50
"""

import argparse

import numpy as np

from bubblelab.confidence import BANDS_BY_NAME, confidence_at
from bubblelab.lppls import synthetic_log_prices
from bubblelab.synthetic import gbm_log_prices, random_bubble_params


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nulls", type=int, default=100)
    ap.add_argument("--bubbles", type=int, default=50)
    ap.add_argument("--length", type=int, default=200)
    ap.add_argument("--band", default="short", choices=sorted(BANDS_BY_NAME))
    ap.add_argument("--vol", type=float, default=0.02, help="GBM daily volatility")
    ap.add_argument("--noise", type=float, default=0.01, help="bubble log-price noise")
    ap.add_argument("--max-horizon", type=float, default=10.0)
    args = ap.parse_args()

    band = BANDS_BY_NAME[args.band]
    n = args.length
    nulls = [confidence_at(5 + gbm_log_prices(np.random.default_rng(5000 + s), n, args.vol),
                           n - 1, band).value for s in range(args.nulls)]
    bubbles = []
    for s in range(args.bubbles):
        rng = np.random.default_rng(1000 + s)
        p = random_bubble_params(rng, n, rng.uniform(1, args.max_horizon), rise=1.0)
        y = 5 + synthetic_log_prices(p, n) + rng.normal(0, args.noise, n)
        bubbles.append(confidence_at(y, n - 1, band).value)
    for name, vals in (("null", nulls), ("bubble", bubbles)):
        q = np.quantile(vals, [0.1, 0.5, 0.9])
        print(f"{name:6s} n={len(vals):3d}  p10 {q[0]:.3f}  median {q[1]:.3f}  p90 {q[2]:.3f}")


if __name__ == "__main__":
    main()
