"""Command-line entry point: ``rekgs run | table1 | bounds``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bounds as bnd
from .errors import ArgumentError
from .experiment import (
    DESK_N,
    FIGURES,
    FULL_M,
    FULL_N,
    ExperimentConfig,
    TABLE1_EXPECTED,
    classify_table1,
    default_budget,
    emit_csv,
    emit_plot,
    make_problem,
    record_grid,
    run_experiment,
)
from .problems import load_problem, save_problem

log = logging.getLogger("rekgs")


def _problem_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--figure", type=int, choices=sorted(FIGURES),
                   help="preset rank/spectrum/consistency of the numbered figure")
    g.add_argument("--m", type=int, help="rows (default 60)")
    g.add_argument("--n", type=int, help="columns (default 30)")
    g.add_argument("--rank", type=int, help="rank r, 2 <= r <= min(m, n) (default n)")
    g.add_argument("--sigma-max", type=float, help="largest singular value (default 1.25)")
    g.add_argument("--sigma-min", type=float, help="smallest nonzero singular value (default 1)")
    c = g.add_mutually_exclusive_group()
    c.add_argument("--consistent", dest="consistent", action="store_true", default=None)
    c.add_argument("--inconsistent", dest="consistent", action="store_false")
    g.add_argument("--resid-scale", type=float,
                   help="norm of the inconsistent component (default ||A x||)")
    g.add_argument("--paper-scale", action="store_true",
                   help="use 500 x 250 with the rank scaled proportionally")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--iters", type=int, help="iterations (default 20 ||A||_F^2 / sigma_min^2)")
    g.add_argument("--record-every", type=int, default=10)


def _config(args, **extra) -> ExperimentConfig:
    fields = {}
    if args.figure is not None:
        frac, s1, consistent = FIGURES[args.figure]
        fields.update(r=round(frac * DESK_N), sigma1=s1, sigmar=1.0, consistent=consistent)
    for name, attr in (("m", "m"), ("n", "n"), ("r", "rank"), ("sigma1", "sigma_max"),
                       ("sigmar", "sigma_min"), ("consistent", "consistent"),
                       ("resid_scale", "resid_scale"), ("iters", "iters")):
        value = getattr(args, attr)
        if value is not None:
            fields[name] = value
    n = fields.get("n", DESK_N)
    fields.setdefault("r", n)
    if args.paper_scale:
        fields["r"] = round(fields["r"] * FULL_N / n)
        fields["m"], fields["n"] = FULL_M, FULL_N
    return ExperimentConfig(seed=args.seed, record_every=args.record_every, **fields, **extra)


def cmd_run(args) -> int:
    cfg = _config(args, algorithms=tuple(a for a in args.algos.split(",") if a),
                  trials=args.trials, output=args.out, jobs=args.jobs,
                  regenerate_per_trial=args.regenerate)
    problem = load_problem(args.load_problem) if args.load_problem else None
    if args.save_problem:
        save_problem(problem if problem is not None else make_problem(cfg), args.save_problem)
    result = run_experiment(cfg, problem)
    print(f"m={cfg.m} n={cfg.n} rank={cfg.r} consistent={cfg.consistent} iters={result.iters} "
          f"trials={cfg.trials} rho={result.rho:.6f} sigma_max={result.sigma1:.4g} "
          f"sigma_min={result.sigmar:.4g}")
    for alg in cfg.algorithms:
        line = f"  {alg:<9} final mean err {result.mean_err[alg][-1]:.4e}"
        if alg in result.bound_new:
            line += f"  new bound {result.bound_new[alg][-1]:.4e}"
        if alg in result.bound_old:
            line += f"  old bound {result.bound_old[alg][-1]:.4e}"
        print(line)
    if args.out:
        emit_csv(result, args.out)
        print(f"wrote {args.out}")
    if args.plot:
        emit_plot(result, args.plot, include_old=args.old_bounds,
                  title=f"m={cfg.m} n={cfg.n} r={cfg.r}")
        print(f"wrote {args.plot}")
    return 0


def cmd_table1(args) -> int:
    ok = True
    for seed in args.seeds:
        res = classify_table1(seed, trials=args.trials)
        print(f"seed {seed}  budgets {res.budgets}")
        print(res.format())
        if args.verbose:
            for row in res.ratios:
                print("   final/initial: " + "  ".join(f"{v:.2e}" for v in row))
        print("matches the expected pattern" if res.matches_expected else "DOES NOT match the expected pattern")
        ok &= res.matches_expected
    if args.check and not ok:
        return 1
    return 0


def cmd_bounds(args) -> int:
    cfg = _config(args, algorithms=())
    problem = make_problem(cfg)
    iters = cfg.iters if cfg.iters is not None else default_budget(problem)
    ks = record_grid(iters, cfg.record_every)
    inputs = bnd.bound_inputs(problem)
    kinds = list(bnd.BoundKind)
    rows = [",".join(["k"] + [k.value for k in kinds])]
    curves = [np.asarray(bnd.evaluate(kind, ks, inputs)) for kind in kinds]
    for idx, k in enumerate(ks):
        rows.append(",".join([str(int(k))] + [repr(float(c[idx])) for c in curves]))
    text = "\n".join([f"# rho = {inputs.rho!r}", f"# sigma_max = {inputs.sigma1!r}",
                      f"# sigma_min_nonzero = {inputs.sigmar!r}", f"# frob_sq = {inputs.frob_sq!r}"]
                     + rows) + "\n"
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.out!r}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rekgs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo error curves with bound curves")
    _problem_args(p)
    p.add_argument("--algos", default="rek_s,regs_e",
                   help="comma-separated subset of rk,rgs,rek_zf,rek_s,regs_mnr,regs_e")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", help="SVG output path")
    p.add_argument("--old-bounds", action="store_true", help="also plot the older bounds")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    p.add_argument("--regenerate", action="store_true", help="new problem for every trial")
    p.add_argument("--save-problem", help="write the generated problem to this file")
    p.add_argument("--load-problem", help="run on a problem file instead of generating one")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table1", help="empirical convergence matrix")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--check", action="store_true", help="exit 1 unless the pattern matches")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("bounds", help="print every bound curve for a generated problem")
    _problem_args(p)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ArgumentError as exc:
        print(f"rekgs: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rekgs: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
