"""Oracle estimator against the closed-form error bound on tiny instances.

    python scripts/bound_vs_oracle.py [--config PATH]
"""

import argparse
from pathlib import Path

import numpy as np

from sparse_imc.config import load_experiment
from sparse_imc.harness import run_sweep

HERE = Path(__file__).parent

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--config", default=HERE / "configs" / "oracle_bound.json")
args = ap.parse_args()

cfg = load_experiment(args.config)
rows = run_sweep(cfg)
for m in cfg.m_grid:
    cell = [r for r in rows if r.m == m]
    mse = np.nanmean([r.mse for r in cell])
    print(f"m={m:4d}  mean mse {mse:.4f}  bound {cell[0].cor1_rhs:.1f}  ratio {mse / cell[0].cor1_rhs:.2e}")
