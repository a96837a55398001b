"""Regularization path on one simulated dataset: BIC, AIC and CV side by side.

    python3 scripts/select_demo.py --n 500 --family lasso --seed 3
"""

import argparse

import numpy as np

from zibreg.penalty import PenaltySpec
from zibreg.selection import cross_validate
from zibreg.simulation import SCENARIOS, generate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", type=int, default=1)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--family", default="lasso")
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    data = generate_dataset(SCENARIOS[args.scenario], args.n, np.random.default_rng(args.seed))
    path = cross_validate(data, PenaltySpec(args.family, alpha=0.5), k=args.folds, seed=args.seed)
    print(f"{'lambda':>9s} {'df':>3s} {'loglik':>10s} {'BIC':>9s} {'AIC':>9s} {'CV':>8s}")
    for row in path.table():
        mark = " <- cv" if row["selected"] else ""
        print(f"{row['lambda']:9g} {row['df']:3d} {row['log_likelihood']:10.3f} "
              f"{row['bic']:9.2f} {row['aic']:9.2f} {row['cv_loss']:8.4f}{mark}")
    print(f"BIC picks {path.lambdas[int(np.nanargmin(path.bic))]:g}, "
          f"AIC picks {path.lambdas[int(np.nanargmin(path.aic))]:g}, CV picks {path.selected_lambda:g}")


if __name__ == "__main__":
    main()
