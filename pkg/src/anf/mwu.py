"""Multiplicative-weights packing solver for the fractional ANF."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from anf.flows import Infeasible, min_cost_flow
from anf.model import Commodity, Edge, Instance, PackingSolution


@dataclass
class MwuConfig:
    gamma: float = 0.2
    max_iterations: int = 10_000
    # recompute a commodity's min-cost flow only once its stored flow got this much dearer
    skip_threshold: float = 0.5

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class MwuStep:
    iteration: int
    commodity: int
    delta: float
    cost: float


@dataclass
class MwuTrace:
    iterations: int = 0
    steps: list[MwuStep] = field(default_factory=list)
    termination: str = ""
    mcf_calls: int = 0

    @property
    def hit_iteration_cap(self) -> bool:
        return self.termination == "iteration_cap"


def add_dummy_sources(instance: Instance) -> Instance:
    """Give commodity i a fresh source s'_i joined to s_i by an edge of capacity d_i.

    Dummy node and edge for commodity i are appended in commodity order, so
    dummy edge i sits at position ``m + i``.
    """
    taken = set(instance.nodes)
    nodes = list(instance.nodes)
    edges = list(instance.edges)
    comms = []
    for i, c in enumerate(instance.commodities):
        label = f"{c.source}'{i}"
        while label in taken:
            label += "'"
        taken.add(label)
        nodes.append(label)
        edges.append(Edge(label, c.source, c.demand))
        comms.append(Commodity(label, c.sink, c.demand, c.weight))
    return Instance(tuple(nodes), tuple(edges), tuple(comms), instance.name)


def mwu_solve(instance: Instance, config: MwuConfig | None = None) -> tuple[PackingSolution, MwuTrace]:
    config = config or MwuConfig()
    trace = MwuTrace()
    k, m = instance.k, instance.m
    if k == 0:
        trace.termination = "no_commodities"
        return PackingSolution(instance), trace

    aug = add_dummy_sources(instance)
    M = aug.m
    caps = aug.capacities
    eta = math.log(M) / config.gamma
    lengths = np.ones(M)
    total = np.zeros(M)
    per_commodity = np.zeros((k, M))

    cached: list[np.ndarray | None] = [None] * k
    cost_at_compute = np.zeros(k)
    alive = np.ones(k, dtype=bool)

    def refresh(i):
        try:
            fa = min_cost_flow(aug, lengths, aug.sources[i], aug.sinks[i], aug.demands[i])
        except Infeasible:
            alive[i] = False
            cached[i] = None
            return
        trace.mcf_calls += 1
        cached[i] = fa.flow
        cost_at_compute[i] = fa.cost

    for i in range(k):
        refresh(i)

    weights = aug.weights
    while True:
        if not alive.any():
            trace.termination = "no_routable"
            break
        if trace.iterations >= config.max_iterations:
            trace.termination = "iteration_cap"
            break
        rho = np.full(k, np.inf)
        for i in np.flatnonzero(alive):
            current = float(lengths @ cached[i])
            if current >= (1.0 + config.skip_threshold) * cost_at_compute[i]:
                refresh(i)
                if not alive[i]:
                    continue
                current = cost_at_compute[i]
            rho[i] = current
        ratio = rho / weights
        star = int(np.argmin(ratio))  # argmin returns the lowest index on ties
        g = cached[star]
        used = g > 0
        delta = (config.gamma / eta) * float(np.min(caps[used] / g[used]))
        total += delta * g
        per_commodity[star] += delta * g
        trace.iterations += 1
        trace.steps.append(MwuStep(trace.iterations, star, delta, float(rho[star])))
        if (total > caps).any():
            trace.termination = "capacity"
            break
        lengths = np.exp(eta * total / caps)

    scale = 1.0 / max(1.0, float(np.max(total / caps)))
    # rounding in the g / x, g * x round trip can overshoot by an ulp; shave the scale until it cannot
    for _ in range(64):
        sol = _packing(instance, per_commodity, scale)
        if (sol.edge_loads() <= instance.capacities).all():
            break
        scale *= 1.0 - 4 * np.finfo(float).eps
    return sol, trace


def _packing(instance: Instance, per_commodity: np.ndarray, scale: float) -> PackingSolution:
    m = instance.m
    flows = []
    for i in range(instance.k):
        x = min(1.0, per_commodity[i, m + i] * scale / instance.demands[i])
        if x <= 0:
            flows.append(())
            continue
        # aggregated flow normalized to d_i units on the original edges
        g = per_commodity[i, :m] * scale / x
        flows.append(((g, x),))
    return PackingSolution(instance, tuple(flows))
