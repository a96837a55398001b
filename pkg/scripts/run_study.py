"""Monte Carlo study over sample sizes: bias, RMSE and coverage tables.

    python3 scripts/run_study.py --scenario 1 --family ridge --lam 0.01 \
        --sizes 100 500 1000 --replicates 200 --threads 8 --out results/study
"""

import argparse
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from zibreg.io import write_text_atomic
from zibreg.penalty import PenaltySpec
from zibreg.simulation import SCENARIOS, run_study


@dataclass
class StudyConfig:
    scenario: int = 1
    family: str = "ridge"
    lam: float = 0.01
    alpha: float = 0.5
    sizes: list = field(default_factory=lambda: [100, 500, 1000])
    replicates: int = 200
    seed: int = 11
    threads: int = 1
    out: str = "results/study"


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    defaults = StudyConfig()
    for name, value in asdict(defaults).items():
        if isinstance(value, list):
            ap.add_argument(f"--{name}", nargs="+", type=int, default=value)
        else:
            ap.add_argument(f"--{name}", type=type(value), default=value)
    return StudyConfig(**vars(ap.parse_args()))


def main():
    cfg = parse_args()
    os.makedirs(cfg.out, exist_ok=True)
    scenario = SCENARIOS[cfg.scenario]
    spec = PenaltySpec(cfg.family, cfg.lam, cfg.lam, alpha=cfg.alpha)
    summary = {}
    for n in cfg.sizes:
        t0 = time.perf_counter()
        rep = run_study(scenario, n, cfg.replicates, spec, seed=cfg.seed, threads=cfg.threads)
        write_text_atomic(os.path.join(cfg.out, f"n{n}.json"), rep.to_json())
        write_text_atomic(os.path.join(cfg.out, f"n{n}.csv"), rep.to_csv())
        summary[n] = rep
        print(f"n={n:5d}  mean RMSE {rep.mean_rmse:.4f}  median |bias| {np.median(np.abs(rep.bias)):.4f}  "
              f"failures {rep.failures}  ({time.perf_counter() - t0:.1f}s)")

    print("\nparam      " + "".join(f"  RMSE n={n:<6d}" for n in cfg.sizes) + "  CP(last n)")
    last = summary[cfg.sizes[-1]]
    for j, name in enumerate(last.names):
        cells = "".join(f"  {summary[n].rmse[j]:12.4f}" for n in cfg.sizes)
        print(f"{name:10s}{cells}  {last.coverage[j]:10.3f}")
    with open(os.path.join(cfg.out, "config.json"), "w") as fh:
        json.dump(asdict(cfg), fh, indent=2)


if __name__ == "__main__":
    main()
