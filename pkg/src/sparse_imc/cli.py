"""``imc`` command line: generate, fit, sweep, bound, kraft.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .bounds import beta_gaussian, bound_report, lambda_min
from .config import ConfigError, load_experiment, load_fit_config
from .discretization import ClassTooLarge, DiscretizationScheme, kraft_sum, levels
from .estimator import EstimatorConfig, alt_min_multistart, oracle_solve
from .harness import DegenerateTruth, gen_ground_truth, run_sweep, write_rows
from .model import load_model, save_model
from .noise import noise_from_dict
from .sampling import derive_seed, draw_mask, observe, read_observations, write_observations

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def cmd_generate(args) -> int:
    cfg = load_experiment(args.config)
    m = args.m if args.m is not None else cfg.m_grid[0]
    d = cfg.dims
    if not 4 <= m <= d.n1 * d.n2:
        raise ConfigError(f"m={m} outside [4, {d.n1 * d.n2}]")
    truth = gen_ground_truth(d, cfg.sparsity[0], cfg.bounds, derive_seed(args.seed, "truth"))
    X = truth.A @ truth.P @ truth.Q @ truth.B
    mask = draw_mask(d.n1, d.n2, m, derive_seed(args.seed, "mask"))
    obs = observe(X, mask, cfg.noise, derive_seed(args.seed, "noise"), m=m)
    save_model(truth, args.out_model)
    write_observations(obs, args.out_obs)
    print(f"wrote {args.out_model} and {args.out_obs} ({len(obs)} observations, m={m})")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        model = load_model(args.model)
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(f"bad model file {args.model}: {exc}") from None
    fc = load_fit_config(args.config)
    noise = noise_from_dict(fc["noise"])
    obs = read_observations(args.obs, model.n1, model.n2)
    if "r" in fc:
        r = fc["r"]
    elif model.has_factors:
        r = model.r
    else:
        raise ConfigError("rank unknown: give 'r' in the fit config or factors in the model file")
    est = dict(fc.get("estimator", {}))
    m = max(len(obs), 4)
    beta = fc.get("beta") or beta_gaussian(
        m, model.n1, model.n2, r, model.r1, model.r2, model.a_max, model.b_max, model.q_max, model.x_max
    )
    d_const = noise.d_constant(model.x_max)
    for key, r_dim in (("lambda_p", model.r1), ("lambda_q", model.r2)):
        if est.get(key) == "min":
            est[key] = lambda_min(d_const, beta, r_dim, model.n1, model.n2)
    scheme = DiscretizationScheme(
        fc.get("l_lev") or levels(model.n1, model.n2, beta), model.r1, r, model.r2, q_max=model.q_max, beta=beta
    )
    if fc.get("solver", "alt_min") == "oracle":
        fit = oracle_solve(
            obs, model.A, model.B, noise, scheme, est.get("lambda_p", 0.0), est.get("lambda_q", 0.0),
            model.x_max, cap=fc.get("cap", 10**6),
        )
    else:
        try:
            cfg = EstimatorConfig(**est)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        fit = alt_min_multistart(
            obs, model.A, model.B, noise, cfg, fc.get("n_starts", 1),
            r=r, q_max=model.q_max, x_max=model.x_max, scheme=scheme,
        )
    with open(args.out, "w") as fh:
        json.dump(fit.to_dict(), fh, indent=1)
    print(f"objective {fit.objective:.6g} after {fit.iterations} iterations (converged={fit.converged})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_experiment(args.config)
    rows = run_sweep(cfg, jobs=args.jobs)
    write_rows(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = load_experiment(args.config)
    d, b = cfg.dims, cfg.bounds
    ms = [args.m] if args.m is not None else cfg.m_grid
    reports = []
    for m in ms:
        if not 4 <= m <= d.n1 * d.n2:
            raise ConfigError(f"m={m} outside [4, {d.n1 * d.n2}]")
        for sp in cfg.sparsity:
            rep = bound_report(
                d.n1, d.n2, d.r, d.r1, d.r2, m, cfg.noise.sigma2,
                b.x_max, b.q_max, b.a_max, b.b_max, sp.p0, sp.q0,
            )
            reports.append(rep.to_dict())
    print(json.dumps(reports[0] if len(reports) == 1 else reports, indent=1))
    return EXIT_OK


def cmd_kraft(args) -> int:
    try:
        scheme = DiscretizationScheme.from_problem(args.n1, args.n2, args.r1, args.r, args.r2, args.beta)
        if args.l_lev is not None:
            scheme = DiscretizationScheme(args.l_lev, args.r1, args.r, args.r2, beta=args.beta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        total = kraft_sum(scheme, cap=args.cap)
    except ClassTooLarge as exc:
        raise ConfigError(str(exc)) from None
    ok = total <= 1 + 1e-12
    print(f"L_lev={scheme.l_lev} L_loc_P={scheme.l_loc_p} L_loc_Q={scheme.l_loc_q} "
          f"class_size={scheme.class_size()} kraft_sum={total:.17g} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imc", description="Sparse-factor inductive matrix completion: simulate, fit, bound.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a ground-truth model and noisy observations")
    g.add_argument("--config", required=True)
    g.add_argument("--out-model", required=True)
    g.add_argument("--out-obs", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--m", type=int, default=None, help="sampling budget (default: first entry of m_grid)")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit factors to observations")
    f.add_argument("--model", required=True)
    f.add_argument("--obs", required=True)
    f.add_argument("--config", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", help="Monte Carlo sweep over m and sparsity")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bound", help="print theoretical quantities as JSON")
    b.add_argument("--config", required=True)
    b.add_argument("--m", type=int, default=None)
    b.set_defaults(func=cmd_bound)

    k = sub.add_parser("kraft", help="exhaustive Kraft-McMillan check of the code lengths")
    for name in ("--r1", "--r", "--r2", "--n1", "--n2"):
        k.add_argument(name, type=int, required=True)
    k.add_argument("--beta", type=float, required=True)
    k.add_argument("--cap", type=int, default=10**6)
    k.add_argument("--l-lev", type=int, default=None, help="override the number of levels")
    k.set_defaults(func=cmd_kraft)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DegenerateTruth, FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
