"""Monte Carlo experiment harness: averaged error curves, bounds, convergence table.

One problem is generated per configuration; each trial re-runs every
algorithm on it with its own index stream ``RngStream(seed, trial)``.
Trial curves are summed in trial order, so results are bit-identical no
matter how trials are scheduled.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bounds as bnd
from .errors import ArgumentError
from .problems import Problem, generate_problem
from .sampling import RngStream, problem_rng
from .solvers import Algorithm, IterationTrace, run

FULL_M, FULL_N = 500, 250
DESK_M, DESK_N = 60, 30

# (rank as a fraction of n, sigma_max, consistent); sigma_min is 1 throughout
FIGURES = {
    1: (1.0, 1.25, True),
    2: (0.6, 1.5, True),
    3: (1.0, 1.75, False),
    4: (0.6, 2.0, False),
}


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = DESK_M
    n: int = DESK_N
    r: int = DESK_N
    sigma1: float = 1.25
    sigmar: float = 1.0
    consistent: bool = True
    resid_scale: Optional[float] = None
    algorithms: tuple[str, ...] = ("rek_s", "regs_e")
    iters: Optional[int] = None
    trials: int = 20
    seed: int = 0
    record_every: int = 10
    output: Optional[str] = None
    regenerate_per_trial: bool = False
    jobs: int = 1

    def __post_init__(self):
        algs = tuple(Algorithm.parse(a).value for a in self.algorithms)
        object.__setattr__(self, "algorithms", algs)
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if self.iters is not None and self.iters < 0:
            raise ArgumentError("iters must be >= 0")
        if self.record_every < 1:
            raise ArgumentError("record_every must be >= 1")
        if self.m < 1 or self.n < 1:
            raise ArgumentError("m and n must be positive")
        if not 2 <= self.r <= min(self.m, self.n):
            raise ArgumentError(f"rank must satisfy 2 <= r <= min(m, n) = {min(self.m, self.n)}")
        if not 0 < self.sigmar <= self.sigma1:
            raise ArgumentError("need 0 < sigma_min <= sigma_max")
        if not self.consistent and self.r >= self.m:
            raise ArgumentError("an inconsistent system needs rank < m")
        if self.resid_scale is not None and self.resid_scale < 0:
            raise ArgumentError("resid_scale must be non-negative")
        if self.jobs < 1:
            raise ArgumentError("jobs must be >= 1")

    @classmethod
    def figure(cls, number: int, *, full_scale: bool = False, **overrides) -> "ExperimentConfig":
        if number not in FIGURES:
            raise ArgumentError(f"figure must be one of {sorted(FIGURES)}")
        frac, s1, consistent = FIGURES[number]
        m, n = (FULL_M, FULL_N) if full_scale else (DESK_M, DESK_N)
        base = dict(m=m, n=n, r=round(frac * n), sigma1=s1, sigmar=1.0, consistent=consistent)
        base.update(overrides)
        return cls(**base)

    def budget(self, problem: Problem) -> int:
        """Default iteration count ``20 ||A||_F^2 / sigma_r^2``."""
        if self.iters is not None:
            return self.iters
        return default_budget(problem)

    def describe(self) -> dict:
        """Result-determining fields (output path and worker count excluded)."""
        d = asdict(self)
        del d["output"], d["jobs"]
        return d


def default_budget(problem: Problem) -> int:
    return int(math.ceil(20.0 * problem.A.frob_sq / problem.spectral.sigma_min_nonzero ** 2))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    ks: np.ndarray
    mean_err: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    bound_old: dict[str, np.ndarray] = field(default_factory=dict)
    bound_new: dict[str, np.ndarray] = field(default_factory=dict)
    rho: float = float("nan")
    sigma1: float = float("nan")
    sigmar: float = float("nan")
    frob_sq: float = float("nan")
    iters: int = 0
    bound_source: str = "factors"


def make_problem(cfg: ExperimentConfig, index: int = 0) -> Problem:
    return generate_problem(cfg.m, cfg.n, cfg.r, cfg.sigma1, cfg.sigmar,
                            consistent=cfg.consistent, rng=problem_rng(cfg.seed, index),
                            resid_scale=cfg.resid_scale)


def record_grid(iters: int, record_every: int) -> np.ndarray:
    ks = list(range(0, iters + 1, record_every))
    if ks[-1] != iters:
        ks.append(iters)
    return np.array(ks, dtype=np.int64)


def _trial(problem: Problem, algorithms: Sequence[str], iters: int, record_every: int,
           seed: int, trial: int) -> dict[str, np.ndarray]:
    out = {}
    for alg in algorithms:
        trace = IterationTrace()
        try:
            run(alg, problem, iters, RngStream(seed, trial), trace, record_every=record_every)
        except ArgumentError as exc:
            raise ArgumentError(f"{alg} trial {trial}: {exc}") from exc
        out[alg] = trace.errors
    return out


def _trial_job(args):
    cfg, problem, iters, t = args
    if problem is None:
        problem = make_problem(cfg, t)
    return _trial(problem, cfg.algorithms, iters, cfg.record_every, cfg.seed, t)


def _bounds_for(problem: Problem, algorithms, ks):
    inputs = bnd.bound_inputs(problem)
    old, new = {}, {}
    for alg in algorithms:
        k_old, k_new = bnd.ALGORITHM_BOUNDS[alg]
        if k_old is not None:
            old[alg] = np.asarray(bnd.evaluate(k_old, ks, inputs), dtype=np.float64)
        if k_new is not None:
            new[alg] = np.asarray(bnd.evaluate(k_new, ks, inputs), dtype=np.float64)
    return inputs, old, new


def run_experiment(cfg: ExperimentConfig, problem: Optional[Problem] = None) -> ExperimentResult:
    """Average ``||estimate - A^+ b||^2`` over ``cfg.trials`` runs per algorithm."""
    if problem is None and not cfg.regenerate_per_trial:
        problem = make_problem(cfg)
    reference = problem if problem is not None else make_problem(cfg, 0)
    iters = cfg.budget(reference)
    ks = record_grid(iters, cfg.record_every)

    jobs = [(cfg, problem, iters, t) for t in range(cfg.trials)]
    if cfg.jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            curves = list(pool.map(_trial_job, jobs))
    else:
        curves = [_trial_job(j) for j in jobs]

    mean, se = {}, {}
    for alg in cfg.algorithms:
        stack = np.stack([c[alg] for c in curves])
        total = np.zeros(len(ks))
        for row in stack:  # fixed trial order
            total += row
        mean[alg] = total / cfg.trials
        se[alg] = (stack.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
                   if cfg.trials > 1 else np.zeros(len(ks)))

    if problem is not None:
        inputs, old, new = _bounds_for(problem, cfg.algorithms, ks)
    else:
        # one problem per trial: average the bound curves as well
        per = [_bounds_for(make_problem(cfg, t), cfg.algorithms, ks) for t in range(cfg.trials)]
        inputs = per[0][0]
        old = {a: sum(p[1][a] for p in per) / cfg.trials for a in per[0][1]}
        new = {a: sum(p[2][a] for p in per) / cfg.trials for a in per[0][2]}

    return ExperimentResult(
        config=cfg, ks=ks, mean_err=mean, stderr=se, bound_old=old, bound_new=new,
        rho=inputs.rho, sigma1=inputs.sigma1, sigmar=inputs.sigmar, frob_sq=inputs.frob_sq,
        iters=iters, bound_source=inputs.source,
    )


# --- convergence table -------------------------------------------------------

TABLE1_CASES = (
    ("consistent", "=n", True, True),
    ("consistent", "<n", True, False),
    ("inconsistent", "=n", False, True),
    ("inconsistent", "<n", False, False),
)
TABLE1_ALGORITHMS = (("RK", "rk"), ("RGS", "rgs"), ("REK", "rek_s"), ("REGS", "regs_e"))
TABLE1_EXPECTED = (
    ("Y", "Y", "Y", "Y"),
    ("Y", "N", "Y", "Y"),
    ("N", "Y", "Y", "Y"),
    ("N", "N", "Y", "Y"),
)


@dataclass
class Table1Result:
    seed: int
    marks: list[list[str]]
    ratios: list[list[float]]   # final mean error / initial error
    budgets: list[int]

    @property
    def matches_expected(self) -> bool:
        return tuple(tuple(r) for r in self.marks) == TABLE1_EXPECTED

    def format(self) -> str:
        head = f"{'system':<13}{'rank':<6}" + "".join(f"{name:<6}" for name, _ in TABLE1_ALGORITHMS)
        lines = [head]
        for (label, rk, _, _), row in zip(TABLE1_CASES, self.marks):
            lines.append(f"{label:<13}{rk:<6}" + "".join(f"{mk:<6}" for mk in row))
        return "\n".join(lines)


def classify_table1(seed: int, *, m: int = DESK_M, n: int = DESK_N, deficient_rank: int = 18,
                    sigma1: float = 2.0, sigmar: float = 1.0, trials: int = 5,
                    threshold: float = 1e-4) -> Table1Result:
    """Empirical convergence matrix for RK, RGS, REK-S, REGS-E.

    Each case runs ``20 ||A||_F^2 / sigma_r^2`` iterations; a cell is "Y"
    when the trial-averaged final squared error is below ``threshold``
    times the initial one.
    """
    marks, ratios, budgets = [], [], []
    for case_idx, (_, _, consistent, full_rank) in enumerate(TABLE1_CASES):
        r = n if full_rank else deficient_rank
        problem = generate_problem(m, n, r, sigma1, sigmar, consistent=consistent,
                                   rng=problem_rng(seed, case_idx))
        iters = default_budget(problem)
        budgets.append(iters)
        row_marks, row_ratios = [], []
        for _, alg in TABLE1_ALGORITHMS:
            finals, initial = 0.0, None
            for t in range(trials):
                trace = IterationTrace()
                run(alg, problem, iters, RngStream(seed, t), trace, record_every=iters)
                initial = trace.errors[0]
                finals += trace.errors[-1]
            ratio = finals / trials / initial
            row_ratios.append(float(ratio))
            row_marks.append("Y" if ratio < threshold else "N")
        marks.append(row_marks)
        ratios.append(row_ratios)
    return Table1Result(seed, marks, ratios, budgets)


# --- output ---------------------------------------------------------------------

def csv_columns(result: ExperimentResult) -> list[tuple[str, np.ndarray]]:
    cols = []
    for alg in result.config.algorithms:
        cols.append((f"{alg}_mean_err", result.mean_err[alg]))
        if alg in result.bound_old:
            cols.append((f"{alg}_bound_old", result.bound_old[alg]))
        if alg in result.bound_new:
            cols.append((f"{alg}_bound_new", result.bound_new[alg]))
    return cols


def emit_csv(result: ExperimentResult, path: str | os.PathLike) -> None:
    """Write ``k`` plus per-algorithm mean and bound columns.

    Lines starting with ``#`` echo the configuration and the resolved
    spectral quantities.  Floats use ``repr`` (shortest round-trip form).
    """
    cols = csv_columns(result)
    lines = [f"# {key} = {value!r}" for key, value in result.config.describe().items()]
    lines += [
        f"# iters_resolved = {result.iters}",
        f"# rho = {result.rho!r}",
        f"# sigma_max = {result.sigma1!r}",
        f"# sigma_min_nonzero = {result.sigmar!r}",
        f"# frob_sq = {result.frob_sq!r}",
        f"# bound_source = {result.bound_source}",
    ]
    lines.append(",".join(["k"] + [name for name, _ in cols]))
    for idx, k in enumerate(result.ks):
        lines.append(",".join([str(int(k))] + [repr(float(v[idx])) for _, v in cols]))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def read_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        rows = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(t) for t in r.split(",")] for r in rows[1:]]).reshape(-1, len(header))
    return header, data


def plot_curves(result: ExperimentResult, include_old: bool = False) -> list[tuple[str, np.ndarray]]:
    curves = []
    for alg in result.config.algorithms:
        label = Algorithm(alg).label
        curves.append((f"{label} mean error", result.mean_err[alg]))
        if alg in result.bound_new:
            curves.append((f"{label} new bound", result.bound_new[alg]))
        if include_old and alg in result.bound_old:
            curves.append((f"{label} old bound", result.bound_old[alg]))
    return curves


def emit_plot(result: ExperimentResult, path: str | os.PathLike, *, include_old: bool = False,
              title: Optional[str] = None) -> None:
    from .plot import semilogy_svg

    svg = semilogy_svg(result.ks, plot_curves(result, include_old), title=title,
                       xlabel="iteration k", ylabel="squared error")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:
        raise OSError(f"cannot write plot to {os.fspath(path)!r}: {exc.strerror or exc}") from exc
