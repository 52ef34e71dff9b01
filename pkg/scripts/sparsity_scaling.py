"""Error against the number of nonzeros in Q* at a fixed budget m.

Repeats the sweep in ``configs/sparsity_scaling.json`` over several master
seeds and counts how often the mean error is non-decreasing in ||Q*||_0.

    python scripts/sparsity_scaling.py [--replications 20] [--jobs N]
"""

import argparse
from pathlib import Path

import numpy as np

from sparse_imc.config import load_experiment
from sparse_imc.harness import run_sweep

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "sparsity_scaling.json")
    ap.add_argument("--replications", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_experiment(args.config)
    q0s = [sp.q0 for sp in cfg.sparsity]
    print("seed  " + "  ".join(f"q0={q:<3d}" for q in q0s) + "  monotone")
    hits = 0
    for rep in range(args.replications):
        cfg.master_seed = rep
        rows = run_sweep(cfg, jobs=args.jobs)
        means = [np.nanmean([r.mse for r in rows if r.q0 == q]) for q in q0s]
        mono = all(a <= b for a, b in zip(means, means[1:]))
        hits += mono
        print(f"{rep:4d}  " + "  ".join(f"{v:.4f}" for v in means) + f"  {mono}")
    print(f"non-decreasing in {hits}/{args.replications} replications")


if __name__ == "__main__":
    main()
