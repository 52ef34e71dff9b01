"""Monte Carlo sweeps comparing empirical error against the Gaussian bound."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import beta_gaussian, corollary1_rhs, lambda_min
from .config import BoundConstants, Dims, ExperimentConfig, Sparsity
from .discretization import DiscretizationScheme, levels
from .estimator import EstimatorConfig, SolverDiverged, alt_min_multistart, oracle_solve
from .model import ImcModel, max_norm, per_element_sq_error
from .sampling import derive_seed, draw_mask, make_rng, observe

log = logging.getLogger(__name__)

CSV_HEADER = ["trial", "m", "gamma", "realized_obs", "p0", "q0", "mse", "cor1_rhs", "objective", "iters", "ms", "seed"]


class DegenerateTruth(ValueError):
    pass


def _sparse_uniform(rng, shape, nnz, c):
    M = np.zeros(shape)
    pos = rng.choice(M.size, size=nnz, replace=False)
    vals = rng.uniform(-c, c, size=nnz)
    while np.any(vals == 0):
        vals[vals == 0] = rng.uniform(-c, c, size=int(np.sum(vals == 0)))
    M.flat[np.sort(pos)] = vals
    return M


def gen_ground_truth(dims: Dims, sparsity: Sparsity, bounds: BoundConstants, seed, max_redraws: int = 100) -> ImcModel:
    """Random features and sparse factors with ``||A P* Q* B||_max = x_max / 2``.

    ``Q*`` is rescaled to hit the max-norm target; draws whose rescaled ``Q*``
    would leave ``[-q_max, q_max]``, or whose product vanishes, are redrawn.
    """
    if not (0 <= sparsity.p0 <= dims.r1 * dims.r and 0 <= sparsity.q0 <= dims.r * dims.r2):
        raise ValueError(f"infeasible sparsity {sparsity} for dims {dims}")
    rng = make_rng(seed)
    for _ in range(max_redraws):
        A = rng.uniform(-bounds.a_max, bounds.a_max, size=(dims.n1, dims.r1))
        B = rng.uniform(-bounds.b_max, bounds.b_max, size=(dims.r2, dims.n2))
        P = _sparse_uniform(rng, (dims.r1, dims.r), sparsity.p0, 1.0)
        Q = _sparse_uniform(rng, (dims.r, dims.r2), sparsity.q0, bounds.q_max)
        peak = max_norm(A @ P @ Q @ B)
        if peak == 0:
            continue
        scale = bounds.x_max / 2 / peak
        if max_norm(Q) * scale > bounds.q_max:
            continue
        return ImcModel(A, B, P, Q * scale, bounds.x_max, bounds.q_max, bounds.a_max, bounds.b_max)
    raise DegenerateTruth(f"no admissible ground truth after {max_redraws} draws (sparsity {sparsity})")


@dataclass
class SweepRow:
    trial: int
    m: int
    gamma: float
    realized_obs: int
    p0: int
    q0: int
    mse: float
    cor1_rhs: float
    objective: float
    iters: int
    ms: int
    seed: int


def _lambda(value, d_const, beta, r_dim, n1, n2):
    return lambda_min(d_const, beta, r_dim, n1, n2) if value == "min" else float(value)


def run_trial(config: ExperimentConfig, sparsity: Sparsity, m: int, trial: int) -> SweepRow:
    d, b = config.dims, config.bounds
    seed = derive_seed(config.master_seed, sparsity.p0, sparsity.q0, m, trial)
    if config.fixed_truth:
        truth_seed = derive_seed(config.master_seed, sparsity.p0, sparsity.q0, "truth")
    else:
        truth_seed = derive_seed(seed, "truth")
    truth = gen_ground_truth(d, sparsity, b, truth_seed)
    X_star = truth.A @ truth.P @ truth.Q @ truth.B
    mask = draw_mask(d.n1, d.n2, m, derive_seed(seed, "mask"))
    obs = observe(X_star, mask, config.noise, derive_seed(seed, "noise"), m=m)

    beta = beta_gaussian(m, d.n1, d.n2, d.r, d.r1, d.r2, b.a_max, b.b_max, b.q_max, b.x_max)
    d_const = config.noise.d_constant(b.x_max)
    est = dict(config.estimator)
    lp = _lambda(est.pop("lambda_p", 0.0), d_const, beta, d.r1, d.n1, d.n2)
    lq = _lambda(est.pop("lambda_q", 0.0), d_const, beta, d.r2, d.n1, d.n2)
    scheme = DiscretizationScheme(
        config.l_lev or levels(d.n1, d.n2, beta), d.r1, d.r, d.r2, q_max=b.q_max, beta=beta
    )
    cor1 = corollary1_rhs(b.x_max, config.noise.sigma2, beta, d.n1, d.n2, m, sparsity.p0, sparsity.q0)

    t0 = time.perf_counter()
    try:
        if config.solver == "oracle":
            fit = oracle_solve(obs, truth.A, truth.B, config.noise, scheme, lp, lq, b.x_max, cap=config.cap)
        else:
            est_cfg = EstimatorConfig(lambda_p=lp, lambda_q=lq, seed=derive_seed(seed, "estimator"), **est)
            fit = alt_min_multistart(
                obs, truth.A, truth.B, config.noise, est_cfg, config.n_starts,
                r=d.r, q_max=b.q_max, x_max=b.x_max, scheme=scheme,
            )
        mse, obj, iters = per_element_sq_error(X_star, fit.X_hat), fit.objective, fit.iterations
    except (SolverDiverged, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.warning("trial %d at m=%d failed: %s", trial, m, exc)
        mse, obj, iters = math.nan, math.nan, 0
    ms = int(1000 * (time.perf_counter() - t0)) if config.record_wall_time else 0
    return SweepRow(trial, m, m / (d.n1 * d.n2), len(obs), sparsity.p0, sparsity.q0, mse, cor1, obj, iters, ms, seed)


def _run_task(args):
    return run_trial(*args)


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[SweepRow]:
    """All trials, ordered by sparsity, then m, then trial index.

    Output is independent of ``jobs``: every trial derives its own seeds.
    """
    tasks = [
        (config, sp, m, t)
        for sp in config.sparsity
        for m in config.m_grid
        for t in range(config.trials_per_cell)
    ]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(getattr(row, k)) for k in CSV_HEADER) + "\n")
    return buf.getvalue()


def write_rows(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_rows(path) -> list[SweepRow]:
    types = {f.name: f.type for f in dataclasses.fields(SweepRow)}
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(SweepRow(**{k: (float(v) if types[k] == "float" else int(v)) for k, v in rec.items()}))
    return out


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    excluded: int = 0


def fit_slope(rows, x: str = "m", y: str = "mse") -> SlopeFit:
    """OLS of ``log mean(y)`` on ``log x`` over per-cell means; NaN rows are dropped."""
    cells: dict[float, list[float]] = {}
    excluded = 0
    for row in rows:
        xv = row[x] if isinstance(row, dict) else getattr(row, x)
        yv = row[y] if isinstance(row, dict) else getattr(row, y)
        if yv is None or math.isnan(yv):
            excluded += 1
            continue
        cells.setdefault(float(xv), []).append(float(yv))
    if len(cells) < 3:
        raise ValueError(f"need at least 3 distinct {x} values, got {len(cells)}")
    xs = np.array(sorted(cells))
    means = np.array([np.mean(cells[k]) for k in xs])
    if np.any(xs <= 0) or np.any(means <= 0):
        raise ValueError("log-log fit needs positive x and mean y")
    lx, ly = np.log(xs), np.log(means)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if excluded:
        log.info("fit_slope excluded %d failed rows", excluded)
    return SlopeFit(float(slope), float(intercept), r2, excluded)
