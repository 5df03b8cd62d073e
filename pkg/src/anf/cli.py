"""Command-line harness: solve, round, experiment.

Exit codes: 0 ok, 2 unreadable or malformed input, 3 algorithm precondition failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from anf.derand import EstimatorPreconditionError, deterministic_round, write_trace_csv
from anf.ingest import IngestError, dump_fractional, dump_rounded, load_instance, parse_fractional
from anf.lp import BACKENDS, FractionalSolverConfig, LPError, solve_fractional
from anf.model import FractionalSolution, RoundedSolution
from anf.mwu import MwuConfig, mwu_solve
from anf.rounding import (
    B_DEFAULT,
    EPSILON_DEFAULT,
    RoundingConfig,
    alteration_round,
    beta_bound,
    congestion_cap,
    round_once,
    trial_rng,
)

MODES = ("rr", "alter", "derand")
EXIT_INPUT = 2
EXIT_PRECONDITION = 3


def derive_seed(seed: int, *key) -> int:
    """Stable 63-bit substream seed for a (seed, key...) cell."""
    words = [int(seed)] + [zlib.crc32(str(k).encode()) for k in key]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0] >> np.uint64(1))


def _read_instance(path):
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise SystemExit(_fail(f"no such file: {path}", EXIT_INPUT))
    except (IngestError, OSError, UnicodeDecodeError) as exc:
        raise SystemExit(_fail(f"{path}: {exc}", EXIT_INPUT))


def _read_fractional(path) -> FractionalSolution:
    try:
        return parse_fractional(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SystemExit(_fail(f"no such file: {path}", EXIT_INPUT))
    except (IngestError, OSError, UnicodeDecodeError) as exc:
        raise SystemExit(_fail(f"{path}: {exc}", EXIT_INPUT))


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _fractional(instance, backend, gamma, seed, lp_method="auto", trace=None):
    if backend == "mwu" and trace is not None:
        # run MWU directly so the step trace is available
        from anf.model import packing_to_compact

        sol, tr = mwu_solve(instance, MwuConfig(gamma=gamma))
        for step in tr.steps:
            trace.write(json.dumps({"iteration": step.iteration, "commodity": step.commodity,
                                    "delta": step.delta, "cost": step.cost}) + "\n")
        trace.write(json.dumps({"termination": tr.termination, "iterations": tr.iterations,
                                "mcf_calls": tr.mcf_calls}) + "\n")
        return packing_to_compact(sol)
    cfg = FractionalSolverConfig(backend=backend, gamma=gamma, seed=seed, lp_method=lp_method)
    return solve_fractional(instance, cfg)


# solve

def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    t0 = time.perf_counter()
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        frac = _fractional(inst, args.backend, args.gamma, args.seed, args.lp_method, trace)
    except LPError as exc:
        return _fail(str(exc), EXIT_PRECONDITION)
    finally:
        if trace:
            trace.close()
    ms = 1000.0 * (time.perf_counter() - t0)
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(f".{args.backend}.frac.json")
    out.write_text(dump_fractional(frac, backend=args.backend, gamma=args.gamma, seed=args.seed))
    print(f"W_LP={frac.value!r} runtime_ms={ms:.1f} backend={args.backend} out={out}")
    return 0


# round

ROUND_FIELDS = ["mode", "execution", "trial", "alpha", "beta", "accepted", "seed"]


def _accept(sol: RoundedSolution, cap: float, epsilon: float) -> bool:
    return sol.congestion <= cap * (1 + 1e-12) and sol.throughput >= (1 - epsilon) * sol.lp_value - 1e-9


def _round_rows(frac, mode, seed, epsilon, b, executions, rounds, trace_fh=None):
    """Yield (row dict, RoundedSolution) for every recorded rounding."""
    inst = frac.instance
    cap = congestion_cap(inst.m, inst.k, b)
    if mode == "derand":
        sol, trace = deterministic_round(frac, RoundingConfig(epsilon=epsilon, b=b, seed=seed))
        if trace_fh is not None:
            write_trace_csv(trace, trace_fh)
        # the estimator guarantee targets alpha >= 1 - 1/m, not 1 - epsilon
        ok = bool(sol.accepted) and sol.congestion <= cap * (1 + 1e-12)
        yield dict(mode=mode, execution=0, trial=0, alpha=sol.alpha, beta=sol.congestion,
                   accepted=int(ok), seed=seed), sol
        return
    cfg = RoundingConfig(epsilon=epsilon, b=b)
    for j in range(executions):
        es = derive_seed(seed, "execution", j)
        for t in range(rounds):
            rng = trial_rng(es, t)
            sol = round_once(frac, rng) if mode == "rr" else alteration_round(frac, cfg, rng)
            yield dict(mode=mode, execution=j, trial=t, alpha=sol.alpha, beta=sol.congestion,
                       accepted=int(_accept(sol, cap, epsilon)), seed=es), sol


def _best(pairs, cap):
    """Highest throughput among roundings whose congestion stays within the cap."""
    best = None
    for row, sol in pairs:
        if sol.congestion <= cap * (1 + 1e-12) and (best is None or sol.throughput > best[1].throughput):
            best = (row, sol)
    return best


def cmd_round(args) -> int:
    frac = _read_fractional(args.solution)
    inst = frac.instance
    trace_fh = open(args.estimator_trace, "w", encoding="utf-8", newline="") if args.estimator_trace else None
    try:
        pairs = list(_round_rows(frac, args.mode, args.seed, args.epsilon, args.b,
                                 args.executions, args.rounds, trace_fh))
    except EstimatorPreconditionError as exc:
        return _fail(f"derandomization precondition: {exc}", EXIT_PRECONDITION)
    finally:
        if trace_fh:
            trace_fh.close()
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, ROUND_FIELDS, lineterminator="\n")
        w.writeheader()
        for row, _ in pairs:
            w.writerow({**row, "alpha": repr(row["alpha"]), "beta": repr(row["beta"])})
    finally:
        if out is not sys.stdout:
            out.close()
    cap = congestion_cap(inst.m, inst.k, args.b)
    best = _best(pairs, cap)
    if best is None:
        print(f"no rounding within congestion cap {cap:.4g}", file=sys.stderr)
        return 0
    row, sol = best
    if args.solution_out:
        Path(args.solution_out).write_text(dump_rounded(sol, mode=args.mode, execution=row["execution"],
                                                        trial=row["trial"], seed=row["seed"]))
    print(f"best alpha={sol.alpha:.6f} beta={sol.congestion:.6f} cap={cap:.4f} "
          f"(execution {row['execution']}, trial {row['trial']})", file=sys.stderr)
    return 0


# experiment

EXPERIMENT_FIELDS = [
    "instance", "lp_solver", "gamma", "algorithm", "trial", "epsilon", "b", "beta_bound",
    "alpha_achieved", "beta_achieved", "accepted", "runtime_ms", "seed", "status", "solution_file",
]


@dataclass
class ExperimentConfig:
    instances: list[str]
    backends: list[str] = field(default_factory=lambda: ["simplex", "mwu", "pr"])
    gammas: list[float] = field(default_factory=lambda: [0.15, 0.2, 0.3])
    modes: list[str] = field(default_factory=lambda: ["rr", "derand"])
    epsilon: float = EPSILON_DEFAULT
    b: float = B_DEFAULT
    seed: int = 0
    trials: int = 100
    lp_method: str = "auto"

    @classmethod
    def from_dict(cls, doc: dict, base: Path | None = None) -> "ExperimentConfig":
        cfg = cls(**doc)
        if base is not None:
            cfg.instances = [str((base / p) if not Path(p).is_absolute() else p) for p in cfg.instances]
        for bk in cfg.backends:
            if bk not in BACKENDS:
                raise ValueError(f"unknown backend {bk!r}")
        for md in cfg.modes:
            if md not in MODES:
                raise ValueError(f"unknown mode {md!r}")
        return cfg


def _cells(cfg: ExperimentConfig):
    """One fractional solve per (instance, backend, gamma); simplex ignores gamma."""
    for path in cfg.instances:
        for bk in cfg.backends:
            for g in ([None] if bk == "simplex" else cfg.gammas):
                yield path, bk, g


def _run_cell(cfg: ExperimentConfig, path: str, backend: str, gamma, sol_dir: str):
    """All rounding modes on one fractional solution.  Never raises: failures become rows."""
    name = Path(path).stem
    gtag = "" if gamma is None else f"{gamma:g}"
    base = dict(instance=name, lp_solver=backend, gamma=gtag, epsilon=cfg.epsilon, b=cfg.b)
    rows = []
    try:
        inst = load_instance(path)
    except (OSError, IngestError) as exc:
        for md in cfg.modes:
            rows.append({**base, "algorithm": md, "trial": 0, "status": f"error: {exc}"})
        return rows
    base["beta_bound"] = f"{beta_bound(inst.m, cfg.b):.4f}" if inst.m >= 3 else ""
    cell_seed = derive_seed(cfg.seed, name, backend, gtag)
    t0 = time.perf_counter()
    try:
        frac = _fractional(inst, backend, gamma if gamma is not None else 0.2, cell_seed, cfg.lp_method)
    except Exception as exc:  # recorded per row, the grid goes on
        for md in cfg.modes:
            rows.append({**base, "algorithm": md, "trial": 0, "seed": cell_seed, "status": f"error: {exc}"})
        return rows
    lp_ms = 1000.0 * (time.perf_counter() - t0)
    stem = f"{name}__{backend}" + (f"__g{gtag}" if gtag else "")
    frac_file = Path(sol_dir) / f"{stem}.frac.json"
    frac_file.write_text(dump_fractional(frac, backend=backend, gamma=gamma, seed=cell_seed))
    for md in cfg.modes:
        mode_seed = derive_seed(cell_seed, md)
        t1 = time.perf_counter()
        decisions = []
        try:
            pairs = list(_round_rows(frac, md, mode_seed, cfg.epsilon, cfg.b, 1, cfg.trials))
        except EstimatorPreconditionError as exc:
            rows.append({**base, "algorithm": md, "trial": 0, "seed": mode_seed,
                         "runtime_ms": f"{lp_ms:.3f}", "status": f"precondition: {exc}"})
            continue
        ms = lp_ms + 1000.0 * (time.perf_counter() - t1)
        rfile = Path(sol_dir) / f"{stem}__{md}.rounded.json"
        for row, sol in pairs:
            decisions.append({"trial": row["trial"], "routed": sol.routed_indices()})
            rows.append({**base, "algorithm": md, "trial": row["trial"],
                         "alpha_achieved": repr(sol.alpha), "beta_achieved": repr(sol.congestion),
                         "accepted": row["accepted"], "runtime_ms": f"{ms:.3f}", "seed": row["seed"],
                         "status": "ok", "solution_file": rfile.name})
        rfile.write_text(json.dumps({"fractional": frac_file.name, "mode": md, "trials": decisions}) + "\n")
    return rows


def _sort_key(row):
    return (row["instance"], row["lp_solver"], row["gamma"], row["algorithm"], int(row["trial"]))


def run_experiment(cfg: ExperimentConfig, out_csv: Path, sol_dir: Path, jobs: int = 1) -> list[dict]:
    sol_dir.mkdir(parents=True, exist_ok=True)
    cells = list(_cells(cfg))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, cfg, p, bk, g, str(sol_dir)) for p, bk, g in cells]
            results = [f.result() for f in futures]
    else:
        results = [_run_cell(cfg, p, bk, g, str(sol_dir)) for p, bk, g in cells]
    rows = sorted((r for rs in results for r in rs), key=_sort_key)
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, EXPERIMENT_FIELDS, lineterminator="\n", restval="")
        w.writeheader()
        w.writerows(rows)
    return rows


def cmd_experiment(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = ExperimentConfig.from_dict(doc, base=Path(args.config).resolve().parent)
    except FileNotFoundError:
        return _fail(f"no such file: {args.config}", EXIT_INPUT)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        return _fail(f"{args.config}: {exc}", EXIT_INPUT)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    sol_dir = Path(args.solutions) if args.solutions else out.with_suffix("").with_name(out.stem + "_solutions")
    rows = run_experiment(cfg, out, sol_dir, args.jobs)
    bad = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} rows written to {out} ({bad} not ok); solutions in {sol_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anf", description="All-or-nothing multicommodity flow experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve the fractional relaxation")
    s.add_argument("instance")
    s.add_argument("--backend", choices=BACKENDS, default="simplex")
    s.add_argument("--gamma", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lp-method", choices=("auto", "bundled", "highs"), default="auto")
    s.add_argument("--out")
    s.add_argument("--trace", help="MWU step trace as JSON lines")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("round", help="round a fractional solution")
    r.add_argument("solution")
    r.add_argument("--mode", choices=MODES, default="rr")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--epsilon", type=float, default=EPSILON_DEFAULT)
    r.add_argument("--b", type=float, default=B_DEFAULT)
    r.add_argument("--executions", type=int, default=10)
    r.add_argument("--rounds", "--trials", dest="rounds", type=int, default=100)
    r.add_argument("--out", help="trial CSV (default stdout)")
    r.add_argument("--solution-out", help="best rounding within the congestion cap, as JSON")
    r.add_argument("--estimator-trace", help="derand only: estimator value after each fixing, CSV")
    r.set_defaults(func=cmd_round)

    e = sub.add_parser("experiment", help="run a grid from a JSON config")
    e.add_argument("config")
    e.add_argument("--out", default="results.csv")
    e.add_argument("--solutions", help="directory for solution files")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
