"""Randomized rounding, the alteration variant, and flow scaling.

Randomness contract: every trial draws from its own PCG64 stream seeded
by ``SeedSequence(seed, spawn_key=(trial,))``.  Trials are therefore
independent of execution order and can be replayed individually.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from anf.model import FractionalSolution, PackingSolution, RoundedSolution, packing_to_compact

B_DEFAULT = 1.85
EPSILON_DEFAULT = 1.0 / 9.0


def beta_bound(m: int, b: float = B_DEFAULT) -> float:
    """Congestion target 3 b ln m / ln ln m."""
    if b <= 1:
        raise ValueError("b must exceed 1")
    if m < 3:
        raise ValueError(f"beta bound undefined for m={m}: ln ln m <= 0")
    return 3.0 * b * math.log(m) / math.log(math.log(m))


def congestion_cap(m: int, k: int, b: float = B_DEFAULT) -> float:
    """beta_bound for m >= 9; below that, the route-everything bound k."""
    return beta_bound(m, b) if m >= 9 else float(k)


def default_max_trials(m: int, epsilon: float) -> int:
    return max(1, math.ceil(10.0 * math.log(max(m, 2)) / epsilon**2))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


@dataclass
class RoundingConfig:
    epsilon: float = EPSILON_DEFAULT
    b: float = B_DEFAULT
    max_trials: int | None = None
    seed: int = 0
    select: str = "best"  # or "first"

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.b <= 1:
            raise ValueError("b must exceed 1")
        if self.select not in ("best", "first"):
            raise ValueError("select must be 'best' or 'first'")

    def trials_for(self, m: int) -> int:
        return self.max_trials if self.max_trials is not None else default_max_trials(m, self.epsilon)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    decisions: np.ndarray
    alpha: float
    beta: float
    accepted: bool
    seed: int


def _as_compact(frac) -> FractionalSolution:
    return packing_to_compact(frac) if isinstance(frac, PackingSolution) else frac


def round_once(frac: FractionalSolution, rng: np.random.Generator) -> RoundedSolution:
    """Admit commodity i with probability f_i; admitted flows are rescaled by 1/f_i."""
    z = rng.random(frac.instance.k) < frac.routed
    return RoundedSolution.from_decisions(frac, z)


def _meets_throughput(sol: RoundedSolution, epsilon: float) -> bool:
    return sol.throughput >= (1 - epsilon) * sol.lp_value * (1 - 1e-12) - 1e-12


def randomized_round(frac: FractionalSolution, config: RoundingConfig | None = None):
    """Repeat round_once and keep a trial meeting both targets.

    Returns ``(solution, records)``.  With ``select="best"`` all trials run
    and the highest-throughput accepted trial wins; otherwise the first
    accepted trial is returned.  If nothing is accepted, the best trial
    within the congestion cap is returned with ``accepted=False``.
    """
    config = config or RoundingConfig()
    frac = _as_compact(frac)
    inst = frac.instance
    cap = congestion_cap(inst.m, inst.k, config.b)
    records: list[TrialRecord] = []
    best_ok = best_capped = best_any = None

    def better(a, b):
        return b is None or a.throughput > b.throughput

    for t in range(config.trials_for(inst.m)):
        sol = round_once(frac, trial_rng(config.seed, t))
        within = sol.congestion <= cap * (1 + 1e-12)
        ok = within and _meets_throughput(sol, config.epsilon)
        records.append(TrialRecord(t, sol.decisions, sol.alpha, sol.congestion, ok, config.seed))
        tagged = RoundedSolution(inst, sol.decisions, sol.loads, sol.lp_value, trial=t, accepted=ok)
        if ok and better(tagged, best_ok):
            best_ok = tagged
            if config.select == "first":
                break
        if within and better(tagged, best_capped):
            best_capped = tagged
        if better(tagged, best_any):
            best_any = tagged
    chosen = best_ok or best_capped or best_any
    return chosen, records


def alteration_round(frac, config: RoundingConfig | None = None, rng: np.random.Generator | None = None) -> RoundedSolution:
    """Coin flips as in round_once, then a greedy pass in index order that
    discards any commodity pushing some edge past (1 + cap) times its capacity."""
    config = config or RoundingConfig()
    frac = _as_compact(frac)
    rng = rng if rng is not None else trial_rng(config.seed, 0)
    inst = frac.instance
    first = round_once(frac, rng)
    limit = (1.0 + congestion_cap(inst.m, inst.k, config.b)) * inst.capacities
    load = np.zeros(inst.m)
    keep = np.zeros(inst.k, dtype=bool)
    for i in first.routed_indices():
        trial = load + first.loads[i]
        if (trial <= limit).all():
            load = trial
            keep[i] = True
    return RoundedSolution.from_decisions(frac, keep)


class ScaledSolution(NamedTuple):
    solution: FractionalSolution
    applicable: bool


def scale_solution(frac: FractionalSolution, c: float) -> ScaledSolution:
    """Multiply every routed and edge fraction by c.

    ``applicable`` reports whether c * W_LP >= w_max still holds.
    """
    if not 0 < c <= 1:
        raise ValueError("scale factor must lie in (0, 1]")
    frac = _as_compact(frac)
    scaled = FractionalSolution(frac.instance, c * frac.routed, c * frac.edge_fractions)
    return ScaledSolution(scaled, c * frac.value >= frac.w_max)


def write_trials_csv(records, fh, extra: dict | None = None) -> None:
    extra = extra or {}
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(extra) + ["trial", "alpha", "beta", "accepted", "seed"])
    for r in records:
        w.writerow(list(extra.values()) + [r.trial, repr(r.alpha), repr(r.beta), int(r.accepted), r.seed])
