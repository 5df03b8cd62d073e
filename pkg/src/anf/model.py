"""ANF instances and the three solution representations.

Node labels are opaque strings; everything numeric is kept in dense
numpy arrays indexed by edge position and commodity position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# absolute slack on constraint checks, relative slack on value comparisons
FEAS_TOL = 1e-9
VALUE_RTOL = 1e-6


class InvalidSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    capacity: float


@dataclass(frozen=True)
class Commodity:
    source: str
    sink: str
    demand: float
    weight: float = 1.0


@dataclass(frozen=True)
class Instance:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    commodities: tuple[Commodity, ...] = ()
    name: str = ""

    def __post_init__(self):
        # accept lists from callers but store tuples so instances hash and stay immutable
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "commodities", tuple(self.commodities))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def k(self) -> int:
        return len(self.commodities)

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([self.node_index[e.tail] for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([self.node_index[e.head] for e in self.edges], dtype=np.int64)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([e.capacity for e in self.edges], dtype=float)

    @cached_property
    def demands(self) -> np.ndarray:
        return np.array([c.demand for c in self.commodities], dtype=float)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.commodities], dtype=float)

    @cached_property
    def sources(self) -> np.ndarray:
        return np.array([self.node_index[c.source] for c in self.commodities], dtype=np.int64)

    @cached_property
    def sinks(self) -> np.ndarray:
        return np.array([self.node_index[c.sink] for c in self.commodities], dtype=np.int64)

    @property
    def w_max(self) -> float:
        return float(self.weights.max()) if self.k else 0.0

    def with_commodities(self, commodities) -> "Instance":
        return Instance(self.nodes, self.edges, tuple(commodities), self.name)

    def incidence(self) -> np.ndarray:
        """Node-edge incidence matrix: +1 at the tail, -1 at the head."""
        A = np.zeros((self.n, self.m))
        A[self.tails, np.arange(self.m)] += 1.0
        A[self.heads, np.arange(self.m)] -= 1.0
        return A


def validate(instance: Instance) -> list[str]:
    """Return a list of human-readable violations; empty means valid."""
    problems = []
    declared = set(instance.nodes)
    if len(declared) != len(instance.nodes):
        problems.append("duplicate-node: node labels must be unique")
    if instance.m < 1:
        problems.append("no-edges: an instance needs at least one edge")
    for j, e in enumerate(instance.edges):
        for end in (e.tail, e.head):
            if end not in declared:
                problems.append(f"unknown-node: edge {j} references undeclared node {end!r}")
        if not (np.isfinite(e.capacity) and e.capacity > 0):
            problems.append(f"nonpositive-capacity: edge {j} has capacity {e.capacity}")
    for i, c in enumerate(instance.commodities):
        for end in (c.source, c.sink):
            if end not in declared:
                problems.append(f"unknown-node: commodity {i} references undeclared node {end!r}")
        if c.source == c.sink:
            problems.append(f"degenerate-commodity: commodity {i} has source == sink")
        if not (np.isfinite(c.demand) and c.demand > 0):
            problems.append(f"nonpositive-demand: commodity {i} has demand {c.demand}")
        if not (np.isfinite(c.weight) and c.weight > 0):
            problems.append(f"nonpositive-weight: commodity {i} has weight {c.weight}")
    return problems


def prune_unroutable(instance: Instance) -> tuple[Instance, list[int]]:
    """Drop commodities whose demand exceeds their s-t max flow in the empty network."""
    from anf.flows import max_flow

    kept, dropped = [], []
    cache: dict[tuple[str, str], float] = {}
    for i, c in enumerate(instance.commodities):
        key = (c.source, c.sink)
        if key not in cache:
            cache[key] = max_flow(instance, c.source, c.sink)
        # relative slack so that a demand equal to the cut value survives round-off
        if cache[key] >= c.demand * (1 - 1e-12) - FEAS_TOL:
            kept.append(c)
        else:
            dropped.append(i)
    return instance.with_commodities(kept), dropped


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """Compact-form LP solution.

    ``routed[i]`` is the routed fraction of commodity i and
    ``edge_fractions[i, e]`` the fraction of its demand carried on edge e,
    so the absolute flow is ``demands[i] * edge_fractions[i, e]``.
    """

    instance: Instance
    routed: np.ndarray
    edge_fractions: np.ndarray

    def __post_init__(self):
        routed = np.asarray(self.routed, dtype=float).reshape(self.instance.k)
        fr = np.asarray(self.edge_fractions, dtype=float).reshape(self.instance.k, self.instance.m)
        object.__setattr__(self, "routed", routed)
        object.__setattr__(self, "edge_fractions", fr)

    @property
    def value(self) -> float:
        return float(self.instance.weights @ self.routed) if self.instance.k else 0.0

    @property
    def w_max(self) -> float:
        return self.instance.w_max

    def edge_loads(self) -> np.ndarray:
        """Absolute flow per edge, summed over commodities."""
        return self.instance.demands @ self.edge_fractions if self.instance.k else np.zeros(self.instance.m)

    def normalized_loads(self) -> np.ndarray:
        """Per-commodity load relative to capacity when fully routed, d_i f_ie / (f_i c_e).

        Rows with f_i = 0 are zero (the commodity is treated as rejected).
        """
        inst = self.instance
        out = np.zeros((inst.k, inst.m))
        pos = self.routed > 0
        if pos.any():
            out[pos] = (inst.demands[pos, None] * self.edge_fractions[pos]) / (
                self.routed[pos, None] * inst.capacities[None, :]
            )
        return out

    def violations(self, tol: float = 1e-7) -> list[str]:
        inst = self.instance
        found = []
        if inst.k == 0:
            return found
        f, fe = self.routed, self.edge_fractions
        if (f < -tol).any() or (f > 1 + tol).any():
            found.append("routed fraction outside [0,1]")
        if (fe < -tol).any():
            found.append("negative edge fraction")
        # net outflow per commodity and node, in fractions of demand
        net = fe @ inst.incidence().T
        rows = np.arange(inst.k)
        src_net = net[rows, inst.sources]
        if (np.abs(src_net - f) > tol).any():
            found.append("source outflow differs from routed fraction")
        inner = net.copy()
        inner[rows, inst.sources] = 0.0
        inner[rows, inst.sinks] = 0.0
        if (np.abs(inner) > tol).any():
            found.append("flow conservation violated")
        slack = tol * np.maximum(1.0, inst.capacities)
        if (self.edge_loads() > inst.capacities + slack).any():
            found.append("edge capacity exceeded")
        lhs = inst.demands[:, None] * fe
        rhs = f[:, None] * inst.capacities[None, :]
        if (lhs > rhs + slack[None, :]).any():
            found.append("strengthening constraint d_i f_ie <= f_i c_e violated")
        return found

    def cleaned(self, tol: float = 1e-9) -> "FractionalSolution":
        """Clip round-off: tiny routed fractions become rejections, negatives become zero."""
        f = np.clip(self.routed, 0.0, 1.0)
        fe = np.clip(self.edge_fractions, 0.0, None)
        small = f <= tol
        f = np.where(small, 0.0, f)
        fe = np.where(small[:, None], 0.0, fe)
        fe = np.where(fe <= tol * 1e-3, 0.0, fe)
        return FractionalSolution(self.instance, f, fe)


@dataclass(frozen=True, eq=False)
class RoundedSolution:
    """Integral admission decisions with the rescaled per-commodity loads."""

    instance: Instance
    decisions: np.ndarray
    loads: np.ndarray
    lp_value: float
    trial: int | None = None
    accepted: bool | None = None

    def __post_init__(self):
        inst = self.instance
        object.__setattr__(self, "decisions", np.asarray(self.decisions, dtype=bool).reshape(inst.k))
        object.__setattr__(self, "loads", np.asarray(self.loads, dtype=float).reshape(inst.k, inst.m))

    @classmethod
    def from_decisions(cls, frac: FractionalSolution, decisions, **kw) -> "RoundedSolution":
        z = np.asarray(decisions, dtype=bool)
        z = z & (frac.routed > 0)
        inst = frac.instance
        loads = np.zeros((inst.k, inst.m))
        if z.any():
            loads[z] = inst.demands[z, None] * frac.edge_fractions[z] / frac.routed[z, None]
        return cls(inst, z, loads, frac.value, **kw)

    @property
    def throughput(self) -> float:
        return float(self.instance.weights @ self.decisions) if self.instance.k else 0.0

    @property
    def edge_congestion(self) -> np.ndarray:
        return self.loads.sum(axis=0) / self.instance.capacities

    @property
    def congestion(self) -> float:
        return float(self.edge_congestion.max()) if self.instance.m else 0.0

    @property
    def alpha(self) -> float:
        return self.throughput / self.lp_value if self.lp_value > 0 else 1.0

    @property
    def beta(self) -> float:
        return self.congestion

    def routed_indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.decisions)]


@dataclass(frozen=True, eq=False)
class PackingSolution:
    """One list of (flow, y) pairs per commodity; each flow routes d_i units."""

    instance: Instance
    flows: tuple[tuple[tuple[np.ndarray, float], ...], ...] = field(default=())

    def __post_init__(self):
        flows = tuple(tuple((np.asarray(g, dtype=float), float(y)) for g, y in per) for per in self.flows)
        if not flows:
            flows = tuple(() for _ in range(self.instance.k))
        object.__setattr__(self, "flows", flows)

    def fractions(self) -> np.ndarray:
        return np.array([sum(y for _, y in per) for per in self.flows], dtype=float)

    @property
    def value(self) -> float:
        return float(self.instance.weights @ self.fractions()) if self.instance.k else 0.0

    def edge_loads(self) -> np.ndarray:
        total = np.zeros(self.instance.m)
        for per in self.flows:
            for g, y in per:
                total += y * g
        return total

    def violations(self, tol: float = 1e-7) -> list[str]:
        inst = self.instance
        found = []
        A = inst.incidence()
        slack = tol * np.maximum(1.0, inst.capacities)
        for i, per in enumerate(self.flows):
            total_y = 0.0
            for g, y in per:
                total_y += y
                if y < -tol:
                    found.append(f"commodity {i}: negative y")
                if (g < -tol).any() or (g > inst.capacities + slack).any():
                    found.append(f"commodity {i}: flow outside [0, c_e]")
                net = A @ g
                d = inst.demands[i]
                expect = np.zeros(inst.n)
                expect[inst.sources[i]] = d
                expect[inst.sinks[i]] = -d
                if np.abs(net - expect).max() > tol * max(1.0, d):
                    found.append(f"commodity {i}: flow does not route d_i units")
            if total_y > 1 + tol:
                found.append(f"commodity {i}: sum of y exceeds 1")
        if (self.edge_loads() > inst.capacities + slack).any():
            found.append("edge capacity exceeded")
        return found


def compact_to_packing(sol: FractionalSolution, tol: float = 1e-7) -> PackingSolution:
    """One flow g_i = d_i f_ie / f_i per routed commodity, weighted by y = f_i."""
    inst = sol.instance
    slack = tol * np.maximum(1.0, inst.capacities)
    lhs = inst.demands[:, None] * sol.edge_fractions
    rhs = sol.routed[:, None] * inst.capacities[None, :]
    if inst.k and (lhs > rhs + slack[None, :]).any():
        raise InvalidSolutionError("strengthening constraint violated; cannot rescale to valid flows")
    flows = []
    for i in range(inst.k):
        fi = sol.routed[i]
        if fi <= 0:
            flows.append(())
            continue
        g = inst.demands[i] * sol.edge_fractions[i] / fi
        flows.append(((g, fi),))
    return PackingSolution(inst, tuple(flows))


def packing_to_compact(sol: PackingSolution) -> FractionalSolution:
    inst = sol.instance
    routed = sol.fractions()
    fe = np.zeros((inst.k, inst.m))
    for i, per in enumerate(sol.flows):
        for g, y in per:
            fe[i] += g * y
    if inst.k:
        fe /= inst.demands[:, None]
    return FractionalSolution(inst, routed, fe)
