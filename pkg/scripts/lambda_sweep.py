"""Mean RMSE across the default lambda grid for each penalty family.

    python3 scripts/lambda_sweep.py --n 1000 --replicates 50 --threads 8
"""

import argparse
import os
from dataclasses import asdict, dataclass

from zibreg.io import dumps_canonical, write_text_atomic
from zibreg.penalty import FAMILIES, PenaltySpec
from zibreg.selection import LambdaGrid
from zibreg.simulation import SCENARIOS, run_lambda_sweep


@dataclass
class SweepConfig:
    scenario: int = 1
    n: int = 1000
    replicates: int = 50
    alpha: float = 0.5
    seed: int = 21
    threads: int = 1
    out: str = "results/lambda_sweep.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for name, value in asdict(SweepConfig()).items():
        ap.add_argument(f"--{name}", type=type(value), default=value)
    cfg = SweepConfig(**vars(ap.parse_args()))

    grid = LambdaGrid()
    table = {}
    for family in FAMILIES:
        reports = run_lambda_sweep(
            SCENARIOS[cfg.scenario], cfg.n, cfg.replicates, PenaltySpec(family, alpha=cfg.alpha),
            grid, seed=cfg.seed, threads=cfg.threads,
        )
        table[family] = [reports[lam].mean_rmse for lam in grid.values]

    print("lambda     " + "".join(f"{f:>14s}" for f in FAMILIES))
    for i, lam in enumerate(grid.values):
        print(f"{lam:<10g} " + "".join(f"{table[f][i]:14.4f}" for f in FAMILIES))

    os.makedirs(os.path.dirname(cfg.out) or ".", exist_ok=True)
    write_text_atomic(cfg.out, dumps_canonical({"config": asdict(cfg), "lambdas": grid.values, "mean_rmse": table}))


if __name__ == "__main__":
    main()
