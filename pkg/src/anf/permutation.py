"""Permutation-routing heuristic: r fractional copies per commodity in random order."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from anf.flows import Infeasible, min_cost_flow
from anf.model import Instance, PackingSolution


@dataclass
class PrConfig:
    gamma: float = 0.2
    seed: int = 0
    # None means: search for it with pr_estimate
    est: float | None = None

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")


class PrEstimate(NamedTuple):
    est: float
    value: float
    solution: PackingSolution


def copies_per_commodity(m: int, gamma: float) -> int:
    return max(1, math.ceil(math.log(m) / gamma**2))


def pr_solve(instance: Instance, config: PrConfig, est: float | None = None) -> PackingSolution:
    est = config.est if est is None else est
    if est is None:
        raise ValueError("pr_solve needs an estimate; use pr_estimate to search for one")
    k, m = instance.k, instance.m
    if k == 0:
        return PackingSolution(instance)
    r = copies_per_commodity(m, config.gamma)
    eta = math.log(m) / config.gamma if m > 1 else 1.0 / config.gamma
    caps = instance.capacities
    lengths = np.ones(m)
    total = np.zeros(m)
    accepted = np.zeros(k, dtype=np.int64)
    per_commodity = np.zeros((k, m))

    order = np.repeat(np.arange(k), r)
    np.random.Generator(np.random.PCG64(config.seed)).shuffle(order)
    slack = 1e-9 * np.maximum(1.0, caps)
    for i in order.tolist():
        if accepted[i] >= r:
            continue
        try:
            fa = min_cost_flow(instance, lengths, instance.sources[i], instance.sinks[i], instance.demands[i])
        except Infeasible:
            continue
        rho = fa.cost
        tau = float(lengths @ caps)
        # w_i / rho >= Est / tau, cross-multiplied so rho = 0 passes
        if instance.weights[i] * tau < est * rho:
            continue
        part = fa.flow / r
        if (total + part > caps + slack).any():
            continue
        total += part
        per_commodity[i] += part
        accepted[i] += 1
        lengths = np.exp(eta * total / caps)

    flows = []
    for i in range(k):
        x = accepted[i] / r
        if x <= 0:
            flows.append(())
            continue
        flows.append(((per_commodity[i] / x, float(x)),))
    return PackingSolution(instance, tuple(flows))


def pr_estimate(instance: Instance, config: PrConfig) -> PrEstimate:
    """Geometric sweep of Est over [w_max, sum w] with ratio 1 + gamma.

    Returns the candidate whose run achieved the highest value (earliest
    candidate on ties).
    """
    if instance.k == 0:
        return PrEstimate(0.0, 0.0, PackingSolution(instance))
    lo, hi = instance.w_max, float(instance.weights.sum())
    candidates = []
    est = lo
    while est < hi * (1 - 1e-12):
        candidates.append(est)
        est *= 1 + config.gamma
    candidates.append(hi)
    best = None
    for est in candidates:
        sol = pr_solve(instance, config, est=est)
        if best is None or sol.value > best.value + 1e-12:
            best = PrEstimate(est, sol.value, sol)
    return best
