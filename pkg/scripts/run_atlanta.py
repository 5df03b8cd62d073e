"""Atlanta end to end: fractional solve, 10 x 100 randomized roundings, derandomized rounding.

Prints W_LP, the best rounding per execution within the congestion bound,
and the deterministic result.  Reported congestion should stay below
beta_bound(44, 1.85) = 15.78.

    python3 scripts/run_atlanta.py [--backend simplex|mwu|pr] [--gamma 0.2]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from anf.derand import deterministic_round
from anf.ingest import load_instance
from anf.lp import BACKENDS, FractionalSolverConfig, solve_fractional
from anf.rounding import RoundingConfig, beta_bound, randomized_round

DATA = Path(__file__).resolve().parent.parent / "data"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", default=str(DATA / "atlanta.json"))
    ap.add_argument("--backend", choices=BACKENDS, default="simplex")
    ap.add_argument("--gamma", type=float, default=0.2)
    ap.add_argument("--executions", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=100)
    args = ap.parse_args(argv)

    inst = load_instance(args.instance)
    bb = beta_bound(inst.m, 1.85)
    print(f"{inst.name}: n={inst.n} m={inst.m} k={inst.k}  beta_bound={bb:.4f}")
    t0 = time.perf_counter()
    frac = solve_fractional(inst, FractionalSolverConfig(backend=args.backend, gamma=args.gamma))
    print(f"{args.backend}: W_LP={frac.value:.6f}  ({1000 * (time.perf_counter() - t0):.0f} ms)")

    for j in range(args.executions):
        sol, records = randomized_round(frac, RoundingConfig(max_trials=args.rounds, seed=j))
        n_ok = sum(r.accepted for r in records)
        print(f"rr execution {j}: alpha={sol.alpha:.4f} beta={sol.congestion:.4f} "
              f"accepted={sol.accepted} ({n_ok}/{len(records)} trials accepted)")
    t0 = time.perf_counter()
    sol, trace = deterministic_round(frac)
    print(f"derand: alpha={sol.alpha:.4f} beta={sol.congestion:.4f} "
          f"estimate {trace[0].estimate:.6f} -> {trace[-1].estimate:.6f} "
          f"({1000 * (time.perf_counter() - t0):.0f} ms)")


if __name__ == "__main__":
    main()
