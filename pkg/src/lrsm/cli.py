"""Command-line interface.

Subcommands: ``solve``, ``markov simulate``, ``markov estimate``,
``experiment``, ``check lemma``, ``check certificate``, ``covariance``,
``multitask``.  Exit codes: 0 on success, 1 when a ``check`` verification
fails, 2 on argument errors, 3 on numeric errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .applications import multitask_fit, structured_covariance, winsorized_covariance
from .errors import NumericError
from .harness import ExperimentSpec
from .markov import estimate_transition, load_trajectory, save_trajectory, simulate_chain
from .matops import load_dense_csv, save_dense_csv, save_sparse_csv
from .solver import SolverConfig, solve

_METHOD_FLAG = {"1": "Method1", "2": "Method2"}


def _load_solver_config(args) -> SolverConfig:
    if getattr(args, "config", None):
        cfg = SolverConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        if getattr(args, "rank", None) is None or getattr(args, "sparsity", None) is None:
            raise ValueError("provide --config, or both --rank and --sparsity")
        cfg = SolverConfig(rank_bound=args.rank, sparsity_bound=args.sparsity)
    updates = {}
    if getattr(args, "rank", None) is not None:
        updates["rank_bound"] = args.rank
    if getattr(args, "sparsity", None) is not None:
        updates["sparsity_bound"] = args.sparsity
    if getattr(args, "mu", None) is not None:
        updates["incoherence_bound"] = args.mu
    if getattr(args, "method", None) is not None:
        updates["method"] = _METHOD_FLAG[args.method]
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    Y = load_dense_csv(args.input)
    cfg = _load_solver_config(args)
    L, S, report = solve(Y, cfg)
    out = _outdir(args)
    save_dense_csv(out / "L.csv", L.to_dense())
    save_sparse_csv(out / "S.csv", S)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    residual = float(np.linalg.norm(Y - L.to_dense() - S.to_dense()))
    print(f"residual_fro={residual!r} iters={report.iters_run} termination={report.termination}")
    return 0


def cmd_markov_simulate(args) -> int:
    P = load_dense_csv(args.transition)
    init = args.init if args.init == "stationary" else int(args.init)
    traj = simulate_chain(P, args.n, init=init, seed=args.seed or 0)
    save_trajectory(args.out, traj)
    print(f"wrote {traj.size} states to {args.out}")
    return 0


def cmd_markov_estimate(args) -> int:
    traj = load_trajectory(args.trajectory)
    p = args.states if args.states is not None else int(traj.max()) + 1
    cfg = _load_solver_config(args)
    F_hat, P_hat, report = estimate_transition(traj, p, cfg, args.projection)
    out = _outdir(args)
    save_dense_csv(out / "F.csv", F_hat)
    save_dense_csv(out / "P.csv", P_hat)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(f"wrote F.csv, P.csv, report.json to {out}")
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(Path(args.config).read_text(encoding="utf-8"))
    if spec.experiment != args.name:
        raise ValueError(f"config is for {spec.experiment!r}, requested {args.name!r}")
    updates = {}
    if args.out:
        updates["output_path"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.projection:
        updates["projection_mode"] = args.projection
    if updates:
        spec = dataclasses.replace(spec, **updates)
    rows = harness.run(spec, jobs=args.jobs)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {spec.output_path} ({failed} trial errors)")
    return 0


def _check_rows(experiment: str, grid: dict, trials: int, seed: int) -> list:
    spec = ExperimentSpec(experiment=experiment, grid=grid, trials=trials, seed=seed)
    rows = []
    for gi, point in enumerate(spec.grid_points()):
        for trial in range(spec.trials):
            _, row = harness._execute_trial(spec, (gi, trial), point, trial)
            rows.append(row)
    return rows


def cmd_check_lemma(args) -> int:
    ps = [int(tok) for tok in args.p.split(",")]
    ok = True
    rows = _check_rows("lemma_check", {"p": ps, "t": [args.eps]}, 1, args.seed or 0)
    for row in rows:
        bound = 1.0 / (2.0 * row.p)
        passed = not row.error and row.fro_F >= bound * (1.0 - 1e-12)
        ok &= passed
        print(f"adversarial p={row.p} eps={args.eps}: ratio={row.fro_F!r} "
              f"bound=1/(2p)={bound!r} -> {'PASS' if passed else 'FAIL'}")
    random_rows = _check_rows("lemma_check", {"p": ps, "t": [0.0]},
                              args.trials, args.seed or 0)
    for p in ps:
        scaled = [r.extra["scaled"] for r in random_rows if r.p == p and not r.error]
        print(f"random pairs p={p}: max scaled ratio over {len(scaled)} trials = {max(scaled)!r}")
    return 0 if ok else 1


def cmd_check_certificate(args) -> int:
    rows = _check_rows(
        "certificate",
        {"p": [args.p], "n": [args.noise_samples], "method": ["gaussian", "empirical_prob"]},
        args.trials, args.seed or 0)
    applicable = [r for r in rows if not r.error and r.extra.get("applicable")]
    violations = [r for r in applicable if not r.extra.get("holds")]
    print(f"certificate: {len(applicable)}/{len(rows)} applicable, "
          f"{len(violations)} bound violations")
    return 0 if not violations and applicable else 1


def cmd_covariance(args) -> int:
    data = load_dense_csv(args.data)
    est = winsorized_covariance(data, args.tau1, args.tau2)
    out = _outdir(args)
    save_dense_csv(out / "Sigma.csv", est.sigma_hat)
    msg = f"wrote Sigma.csv (tau1={est.tau1:g}, tau2={est.tau2:g})"
    if args.config or (args.rank is not None and args.sparsity is not None):
        cfg = _load_solver_config(args)
        L, S = structured_covariance(data, cfg, args.tau1, args.tau2)
        save_dense_csv(out / "L.csv", L.to_dense())
        save_sparse_csv(out / "S.csv", S)
        msg += ", L.csv, S.csv"
    print(msg + f" to {out}")
    return 0


def cmd_multitask(args) -> int:
    X = load_dense_csv(args.design)
    Y = load_dense_csv(args.response)
    cfg = _load_solver_config(args)
    L, S, diag = multitask_fit(X, Y, cfg)
    out = _outdir(args)
    save_dense_csv(out / "L.csv", L.to_dense())
    save_sparse_csv(out / "S.csv", S)
    (out / "diagnostics.json").write_text(json.dumps({
        "sigma_max": diag.sigma_max,
        "sigma_min": diag.sigma_min,
        "max_column_norm": diag.max_column_norm,
        "report": json.loads(diag.report.to_json()),
    }, sort_keys=True), encoding="utf-8")
    print(f"wrote L.csv, S.csv, diagnostics.json to {out}")
    return 0


def _add_solver_flags(sub, require_out=True):
    sub.add_argument("--config", help="solver config JSON file")
    sub.add_argument("--rank", type=int, help="rank bound override")
    sub.add_argument("--sparsity", type=int, help="sparsity bound override")
    sub.add_argument("--mu", type=float, help="incoherence bound override")
    sub.add_argument("--method", choices=("1", "2"), help="1 = plain sign updates, 2 = incoherence-projected")
    sub.add_argument("--seed", type=int, help="seed override")
    if require_out:
        sub.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrsm",
        description="Low-rank-plus-sparse matrix recovery and Markov kernel estimation")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("solve", help="decompose a dense matrix CSV")
    sp.add_argument("input", help="dense matrix CSV")
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    markov = subs.add_parser("markov", help="chain simulation and estimation")
    msubs = markov.add_subparsers(dest="markov_command", required=True)

    sim = msubs.add_parser("simulate", help="sample a trajectory")
    sim.add_argument("transition", help="transition matrix CSV")
    sim.add_argument("-n", type=int, required=True, help="number of transitions")
    sim.add_argument("--init", default="stationary",
                     help="'stationary' or a start state index")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="trajectory output file")
    sim.set_defaults(func=cmd_markov_simulate)

    est = msubs.add_parser("estimate", help="estimate a transition kernel from a trajectory")
    est.add_argument("trajectory", help="trajectory file, one state per line")
    est.add_argument("--states", type=int, help="state-space size (default: max state + 1)")
    est.add_argument("--projection", choices=("global", "rowwise"), default="global")
    _add_solver_flags(est)
    est.set_defaults(func=cmd_markov_estimate)

    exp = subs.add_parser("experiment", help="run an experiment sweep")
    exp.add_argument("name", choices=harness.EXPERIMENTS)
    exp.add_argument("--config", required=True, help="experiment spec JSON")
    exp.add_argument("--out", help="metrics CSV path override")
    exp.add_argument("--seed", type=int, help="base seed override")
    exp.add_argument("--projection", choices=("global", "rowwise"))
    exp.add_argument("--jobs", type=int, default=None,
                     help="concurrent trials (default: LRSM_JOBS or 1)")
    exp.set_defaults(func=cmd_experiment)

    chk = subs.add_parser("check", help="run built-in verification panels")
    csubs = chk.add_subparsers(dest="check_command", required=True)

    lem = csubs.add_parser("lemma", help="separation-ratio panels")
    lem.add_argument("--p", default="10,100,1000", help="comma-separated dimensions")
    lem.add_argument("--eps", type=float, default=0.1)
    lem.add_argument("--trials", type=int, default=50)
    lem.add_argument("--seed", type=int, default=0)
    lem.set_defaults(func=cmd_check_lemma)

    cert = csubs.add_parser("certificate", help="deterministic bound trials")
    cert.add_argument("--trials", type=int, default=50, help="trials per noise family")
    cert.add_argument("--p", type=int, default=100)
    cert.add_argument("--noise-samples", type=int, default=1000,
                      help="sample count for the empirical-probability noise")
    cert.add_argument("--seed", type=int, default=0)
    cert.set_defaults(func=cmd_check_certificate)

    cov = subs.add_parser("covariance", help="Winsorized (and optionally structured) covariance")
    cov.add_argument("data", help="data CSV, rows are observations")
    cov.add_argument("--tau1", type=float, help="product truncation level (default sqrt(n))")
    cov.add_argument("--tau2", type=float, help="mean truncation level (default sqrt(n))")
    _add_solver_flags(cov)
    cov.set_defaults(func=cmd_covariance)

    mt = subs.add_parser("multitask", help="multitask regression via whitening")
    mt.add_argument("design", help="design matrix X CSV")
    mt.add_argument("response", help="response matrix Y CSV")
    _add_solver_flags(mt)
    mt.set_defaults(func=cmd_multitask)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
