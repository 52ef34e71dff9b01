"""Solvers for the sparsity-penalized maximum-likelihood objective.

``oracle_solve`` minimizes exactly over the discretized class and is only
feasible for tiny instances. ``alt_min_solve`` alternates proximal-gradient
steps on ``P`` and ``Q`` with an l0 + box prox and scales to desk-sized
problems; it carries no global-optimality guarantee.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    DEFAULT_CAP,
    DiscretizationScheme,
    _check_cap,
    _factor_bits,
    factor_candidates,
    quantize_factor,
)
from .model import MAX_NORM_SLACK, as_matrix, check_chain, l0_norm, max_norm
from .noise import GaussianNoise, NoiseModel
from .sampling import ObservationSet, derive_seed, make_rng

log = logging.getLogger(__name__)


class SolverDiverged(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = list(trace)


@dataclass
class EstimatorConfig:
    lambda_p: float = 0.0
    lambda_q: float = 0.0
    max_outer_iters: int = 500
    step_rule: str = "backtracking"  # or "fixed"
    step_size: float = 1e-3  # eta for the fixed rule
    shrink: float = 0.5
    max_tries: int = 30
    tol_objective: float = 1e-9
    init: str = "random"  # "spectral" | "provided"
    init_scale: float = 0.5
    P0: np.ndarray | None = None
    Q0: np.ndarray | None = None
    enforce_x_max: str = "rescale"  # or "none"
    project_to_grid: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.lambda_p < 0 or self.lambda_q < 0:
            raise ValueError("lambdas must be non-negative")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be positive")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.tol_objective <= 0:
            raise ValueError("tol_objective must be positive")
        if self.init not in ("random", "spectral", "provided"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "provided" and (self.P0 is None or self.Q0 is None):
            raise ValueError("init='provided' requires P0 and Q0")
        if self.enforce_x_max not in ("none", "rescale"):
            raise ValueError(f"unknown enforce_x_max {self.enforce_x_max!r}")


@dataclass
class FitResult:
    P_hat: np.ndarray
    Q_hat: np.ndarray
    X_hat: np.ndarray
    objective: float
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    wall_time_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "P_hat": self.P_hat.tolist(),
            "Q_hat": self.Q_hat.tolist(),
            "objective": self.objective,
            "objective_trace": list(self.objective_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time_ms": self.wall_time_ms,
        }


def _neg_log_lik(X, obs: ObservationSet, noise: NoiseModel) -> float:
    if len(obs) == 0:
        return 0.0
    return -float(np.sum(noise.log_pdf(X[obs.rows, obs.cols], obs.y)))


def objective(P, Q, obs: ObservationSet, A, B, noise: NoiseModel, lambda_p: float, lambda_q: float) -> float:
    """Negative log-likelihood of the observed entries plus l0 penalties."""
    P, Q, A, B = (as_matrix(M, name) for M, name in ((P, "P"), (Q, "Q"), (A, "A"), (B, "B")))
    check_chain(("A", A), ("P", P), ("Q", Q), ("B", B))
    X = A @ P @ Q @ B
    return _neg_log_lik(X, obs, noise) + lambda_p * l0_norm(P) + lambda_q * l0_norm(Q)


def masked_gaussian_gradients(P, Q, obs: ObservationSet, A, B, sigma2: float):
    """Gradients of the masked Gaussian negative log-likelihood w.r.t. ``P`` and ``Q``."""
    AP = A @ P
    QB = Q @ B
    R = np.zeros((obs.n1, obs.n2))
    if len(obs):
        R[obs.rows, obs.cols] = obs.y - np.einsum("ik,ik->i", AP[obs.rows], QB[:, obs.cols].T)
    grad_P = -(A.T @ R @ QB.T) / sigma2
    grad_Q = -(AP.T @ R @ B.T) / sigma2
    return grad_P, grad_Q


# --- exhaustive oracle ----------------------------------------------------------

def oracle_solve(
    obs: ObservationSet,
    A,
    B,
    noise: NoiseModel,
    scheme: DiscretizationScheme,
    lambda_p: float,
    lambda_q: float,
    x_max: float,
    cap: int = DEFAULT_CAP,
    block: int = 1 << 22,
) -> FitResult:
    """Exact minimizer over the discretized class.

    Ties are broken by smaller code length, then by enumeration order
    (``P`` slowest, as in :func:`enumerate_class`).
    """
    t0 = time.perf_counter()
    _check_cap(scheme, cap)
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    pc = factor_candidates((scheme.r1, scheme.r), scheme.p_values())
    qc = factor_candidates((scheme.r, scheme.r2), scheme.q_values())
    check_chain(("A", A), ("P", pc[0]), ("Q", qc[0]), ("B", B))
    nnz_p = np.count_nonzero(pc, axis=(1, 2))
    nnz_q = np.count_nonzero(qc, axis=(1, 2))
    bits_p = _factor_bits(nnz_p, scheme.r1 * scheme.r, scheme.bits_per_nonzero_p, True)
    bits_q = _factor_bits(nnz_q, scheme.r * scheme.r2, scheme.bits_per_nonzero_q, True)

    AP = np.einsum("ia,pak->pik", A, pc)  # (KP, n1, r)
    QB = np.einsum("qkb,bj->qkj", qc, B)  # (KQ, r, n2)
    limit = x_max * (1 + MAX_NORM_SLACK)
    n_entries = A.shape[0] * B.shape[1]
    chunk = max(1, block // max(1, len(qc) * n_entries))

    best = None  # (objective, bits, p index, q index)
    for start in range(0, len(pc), chunk):
        sl = slice(start, start + chunk)
        X = np.einsum("pik,qkj->pqij", AP[sl], QB)
        feasible = np.max(np.abs(X), axis=(2, 3)) <= limit
        if len(obs):
            loglik = noise.log_pdf(X[:, :, obs.rows, obs.cols], obs.y).sum(axis=2)
        else:
            loglik = np.zeros(feasible.shape)
        obj = -loglik + lambda_p * nnz_p[sl, None] + lambda_q * nnz_q[None, :]
        obj = np.where(feasible, obj, np.inf)
        bits = bits_p[sl, None] + bits_q[None, :]
        lo = obj.min()
        if not np.isfinite(lo):
            continue
        ties = np.argwhere(obj == lo)  # row-major, i.e. enumeration order
        k = min(range(len(ties)), key=lambda t: (bits[tuple(ties[t])], t))
        cand = (float(lo), float(bits[tuple(ties[k])]), start + int(ties[k][0]), int(ties[k][1]))
        if best is None or cand[:2] < best[:2]:
            best = cand
    if best is None:
        raise ValueError("no candidate satisfies the max-norm constraint")
    P, Q = pc[best[2]].copy(), qc[best[3]].copy()
    return FitResult(
        P_hat=P,
        Q_hat=Q,
        X_hat=A @ P @ Q @ B,
        objective=best[0],
        objective_trace=[best[0]],
        converged=True,
        iterations=1,
        wall_time_ms=int(1000 * (time.perf_counter() - t0)),
    )


# --- alternating proximal hard thresholding ---------------------------------

def prox_l0_box(U, lam: float, eta: float, c: float) -> np.ndarray:
    """Exact prox of ``eta * lam * 1{v != 0}`` plus the box ``[-c, c]`` at ``U``."""
    V = np.clip(U, -c, c)
    keep = (V - U) ** 2 / (2 * eta) + lam < U**2 / (2 * eta)
    return np.where(keep, V, 0.0)


def _power_lipschitz(apply, shape, rng, iters=20) -> float:
    v = rng.standard_normal(shape)
    norm = np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        if norm == 0:
            return 0.0
        v = v / norm
        w = apply(v)
        lam = float(np.sum(v * w))
        norm = np.linalg.norm(w)
    return max(lam, norm)


class _Problem:
    """Cached pieces of the masked Gaussian quadratic."""

    def __init__(self, obs, A, B, noise):
        self.obs, self.A, self.B, self.noise = obs, A, B, noise
        self.sigma2 = noise.sigma2
        self.M = obs.mask.astype(np.float64)

    def smooth(self, P, Q) -> float:
        return _neg_log_lik(self.A @ P @ Q @ self.B, self.obs, self.noise)

    def lipschitz_p(self, Q, rng):
        C = Q @ self.B
        return _power_lipschitz(lambda V: self.A.T @ (self.M * (self.A @ V @ C)) @ C.T / self.sigma2, (self.A.shape[1], Q.shape[0]), rng)

    def lipschitz_q(self, P, rng):
        AP = self.A @ P
        return _power_lipschitz(lambda V: AP.T @ (self.M * (AP @ V @ self.B)) @ self.B.T / self.sigma2, (P.shape[1], self.B.shape[0]), rng)


def _block_step(f, V, G, lam, c, eta0, cfg: EstimatorConfig):
    """One prox-gradient step on a block; returns (new V, new objective)."""
    f0 = f(V)
    F0 = f0 + lam * l0_norm(V)
    if cfg.step_rule == "fixed":
        Vn = prox_l0_box(V - cfg.step_size * G, lam, cfg.step_size, c)
        fn = f(Vn)
        return Vn, fn + lam * l0_norm(Vn)
    eta = eta0
    for _ in range(cfg.max_tries):
        Vn = prox_l0_box(V - eta * G, lam, eta, c)
        fn = f(Vn)
        D = Vn - V
        Fn = fn + lam * l0_norm(Vn)
        if fn <= f0 + np.sum(G * D) + np.sum(D * D) / (2 * eta) and Fn <= F0:
            return Vn, Fn
        eta *= cfg.shrink
    return V, F0


def _random_init(A, B, r, cfg, x_max, q_max, rng):
    P0 = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(A.shape[1], r))
    Q0 = rng.uniform(-1.0, 1.0, size=(r, B.shape[0]))
    peak = max_norm(A @ P0 @ Q0 @ B)
    target = (x_max if x_max is not None else 1.0) / 2
    if peak > 0:
        Q0 *= target / peak
    return P0, np.clip(Q0, -q_max, q_max)


def _spectral_init(obs, A, B, r, q_max):
    gamma = len(obs) / (obs.n1 * obs.n2)
    Yt = obs.filled() / gamma
    W0 = np.linalg.lstsq(A, Yt, rcond=None)[0]
    W0 = np.linalg.lstsq(B.T, W0.T, rcond=None)[0].T  # r1 x r2
    U, s, Vt = np.linalg.svd(W0, full_matrices=False)
    root = np.sqrt(s[:r])
    P0 = U[:, :r] * root
    Q0 = root[:, None] * Vt[:r]
    if P0.shape[1] < r:  # rank exceeds min(r1, r2)
        P0 = np.pad(P0, ((0, 0), (0, r - P0.shape[1])))
        Q0 = np.pad(Q0, ((0, r - Q0.shape[0]), (0, 0)))
    s_max = max_norm(P0)
    if s_max > 1:
        P0 /= s_max
        Q0 *= s_max
    return P0, np.clip(Q0, -q_max, q_max)


def alt_min_solve(
    obs: ObservationSet,
    A,
    B,
    noise: NoiseModel,
    config: EstimatorConfig,
    *,
    r: int,
    q_max: float = 1.0,
    x_max: float | None = None,
    scheme: DiscretizationScheme | None = None,
) -> FitResult:
    """Alternating l0-proximal gradient descent on ``(P, Q)`` for Gaussian noise.

    Each outer iteration takes one prox-gradient step on ``P`` (``Q`` fixed)
    and one on ``Q``. With backtracking, a step is accepted only when it
    satisfies the sufficient-decrease test and does not raise the objective,
    so ``objective_trace`` is non-increasing. After the loop the estimate is
    optionally rescaled into ``||X||_max <= x_max`` and projected onto the
    grid of ``scheme``.
    """
    if not isinstance(noise, GaussianNoise):
        raise TypeError("alt_min_solve supports Gaussian noise only")
    if config.project_to_grid and scheme is None:
        raise ValueError("project_to_grid requires a discretization scheme")
    t0 = time.perf_counter()
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    r1, r2 = A.shape[1], B.shape[0]
    rng = make_rng(derive_seed(config.seed, "alt_min"))
    lp, lq = config.lambda_p, config.lambda_q

    if len(obs) == 0:
        P, Q = np.zeros((r1, r)), np.zeros((r, r2))
        return _finish(P, Q, obs, A, B, noise, config, [0.0], True, 0, t0, x_max, q_max, scheme)

    if config.init == "provided":
        P, Q = as_matrix(config.P0, "P0").copy(), as_matrix(config.Q0, "Q0").copy()
        check_chain(("A", A), ("P0", P), ("Q0", Q), ("B", B))
    elif config.init == "spectral":
        P, Q = _spectral_init(obs, A, B, r, q_max)
    else:
        P, Q = _random_init(A, B, r, config, x_max, q_max, rng)

    prob = _Problem(obs, A, B, noise)
    F = prob.smooth(P, Q) + lp * l0_norm(P) + lq * l0_norm(Q)
    trace = [F]
    if not np.isfinite(F):
        raise SolverDiverged("objective is non-finite at the initial point", trace)
    converged = False
    it = 0
    for it in range(1, config.max_outer_iters + 1):
        gP, _ = masked_gaussian_gradients(P, Q, obs, A, B, prob.sigma2)
        eta = 1.0 / max(prob.lipschitz_p(Q, rng), 1e-12)
        P, _ = _block_step(lambda V: prob.smooth(V, Q), P, gP, lp, 1.0, eta, config)
        _, gQ = masked_gaussian_gradients(P, Q, obs, A, B, prob.sigma2)
        if not (np.all(np.isfinite(gP)) and np.all(np.isfinite(gQ))):
            raise SolverDiverged(f"gradient became non-finite at iteration {it}", trace)
        eta = 1.0 / max(prob.lipschitz_q(P, rng), 1e-12)
        Q, _ = _block_step(lambda V: prob.smooth(P, V), Q, gQ, lq, q_max, eta, config)
        F_new = prob.smooth(P, Q) + lp * l0_norm(P) + lq * l0_norm(Q)
        if not np.isfinite(F_new):
            raise SolverDiverged(f"objective became non-finite at iteration {it}", trace + [F_new])
        trace.append(F_new)
        if abs(F - F_new) < config.tol_objective:
            converged = True
            break
        F = F_new
    return _finish(P, Q, obs, A, B, noise, config, trace, converged, it, t0, x_max, q_max, scheme)


def _finish(P, Q, obs, A, B, noise, config, trace, converged, iters, t0, x_max, q_max, scheme):
    if config.enforce_x_max == "rescale" and x_max is not None:
        peak = max_norm(A @ P @ Q @ B)
        if peak > x_max:
            Q = Q * (x_max / peak)
    if config.project_to_grid:
        P = quantize_factor(np.clip(P, -1, 1), 1.0, scheme.l_lev)
        Q = quantize_factor(np.clip(Q, -scheme.q_max, scheme.q_max), scheme.q_max, scheme.l_lev)
    X = A @ P @ Q @ B
    return FitResult(
        P_hat=P,
        Q_hat=Q,
        X_hat=X,
        objective=objective(P, Q, obs, A, B, noise, config.lambda_p, config.lambda_q),
        objective_trace=[float(v) for v in trace],
        converged=converged,
        iterations=iters,
        wall_time_ms=int(1000 * (time.perf_counter() - t0)),
    )


def alt_min_multistart(obs, A, B, noise, config: EstimatorConfig, n_starts: int, **kwargs) -> FitResult:
    """Best of ``n_starts`` fits; start 0 uses ``config`` as given, the rest random inits."""
    best = None
    for k in range(n_starts):
        cfg = config if k == 0 else dataclasses.replace(config, init="random", seed=derive_seed(config.seed, "start", k))
        res = alt_min_solve(obs, A, B, noise, cfg, **kwargs)
        if best is None or res.objective < best.objective:
            best = res
    return best
