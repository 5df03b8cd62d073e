"""Max-flow and fixed-demand min-cost flow on real-valued capacities.

Both kernels work on a residual graph where edge ``e`` owns arc ``2e``
(forward) and arc ``2e + 1`` (backward).
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


class Infeasible(Exception):
    """Raised when the requested demand exceeds the s-t max flow."""


@dataclass(frozen=True)
class FlowAssignment:
    flow: np.ndarray
    value: float
    cost: float


def _node(instance, v) -> int:
    if isinstance(v, (int, np.integer)):
        return int(v)
    return instance.node_index[v]


class _Residual:
    def __init__(self, n, tails, heads, caps):
        self.n = n
        m = len(tails)
        self.to = np.empty(2 * m, dtype=np.int64)
        self.to[0::2] = heads
        self.to[1::2] = tails
        self.res = np.zeros(2 * m)
        self.res[0::2] = caps
        self.adj = [[] for _ in range(n)]
        for e in range(m):
            self.adj[int(tails[e])].append(2 * e)
            self.adj[int(heads[e])].append(2 * e + 1)
        self.to = self.to.tolist()
        self.res = self.res.tolist()

    def push(self, arc, amount, scale):
        self.res[arc] -= amount
        self.res[arc ^ 1] += amount
        if self.res[arc] <= _EPS * scale:
            self.res[arc] = 0.0

    def flows(self, caps):
        m = len(caps)
        # flow on edge e equals the residual of its backward arc
        return np.minimum(np.array(self.res[1::2][:m]), caps)


def max_flow(instance, source, sink, capacities=None) -> float:
    """Exact s-t max flow value (Dinic)."""
    s, t = _node(instance, source), _node(instance, sink)
    if s == t:
        raise ValueError("source and sink must differ")
    caps = instance.capacities if capacities is None else np.asarray(capacities, dtype=float)
    R = _Residual(instance.n, instance.tails, instance.heads, caps)
    scale = max(1.0, float(caps.max())) if len(caps) else 1.0
    total = 0.0
    while True:
        level = [-1] * R.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in R.adj[u]:
                v = R.to[a]
                if level[v] < 0 and R.res[a] > _EPS * scale:
                    level[v] = level[u] + 1
                    q.append(v)
        if level[t] < 0:
            return total
        it = [0] * R.n

        def dfs(u, pushed):
            if u == t:
                return pushed
            while it[u] < len(R.adj[u]):
                a = R.adj[u][it[u]]
                v = R.to[a]
                if level[v] == level[u] + 1 and R.res[a] > _EPS * scale:
                    got = dfs(v, min(pushed, R.res[a]))
                    if got > 0:
                        R.push(a, got, scale)
                        return got
                it[u] += 1
            return 0.0

        while True:
            got = dfs(s, float("inf"))
            if got <= 0:
                break
            total += got


def min_cost_flow(instance, lengths, source, sink, demand, capacities=None) -> FlowAssignment:
    """Route ``demand`` units from source to sink at minimum total length.

    Successive shortest paths with node potentials; lengths must be
    nonnegative so the initial zero potential is valid.
    """
    lengths = np.asarray(lengths, dtype=float)
    if demand <= 0:
        raise ValueError("demand must be positive")
    if (lengths < 0).any() or not np.isfinite(lengths).all():
        raise ValueError("lengths must be finite and nonnegative")
    s, t = _node(instance, source), _node(instance, sink)
    if s == t:
        raise ValueError("source and sink must differ")
    caps = instance.capacities if capacities is None else np.asarray(capacities, dtype=float)
    R = _Residual(instance.n, instance.tails, instance.heads, caps)
    cost = [0.0] * (2 * len(caps))
    cost[0::2] = lengths.tolist()
    cost[1::2] = (-lengths).tolist()
    scale = max(1.0, float(demand), float(caps.max()) if len(caps) else 1.0)
    pot = [0.0] * R.n
    remaining = float(demand)
    inf = float("inf")

    while remaining > _EPS * scale:
        dist = [inf] * R.n
        via = [-1] * R.n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = pot[u]
            for a in R.adj[u]:
                if R.res[a] <= 0.0:
                    continue
                v = R.to[a]
                rc = cost[a] + pu - pot[v]
                if rc < 0.0:
                    rc = 0.0  # round-off only; potentials keep reduced costs >= 0
                nd = d + rc
                if nd < dist[v]:
                    dist[v] = nd
                    via[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[t] == inf:
            raise Infeasible(f"cannot route {demand} units: max flow is {demand - remaining}")
        dt = dist[t]
        for v in range(R.n):
            pot[v] += dist[v] if dist[v] < dt else dt
        push = remaining
        v = t
        while v != s:
            a = via[v]
            push = min(push, R.res[a])
            v = R.to[a ^ 1]
        v = t
        while v != s:
            a = via[v]
            R.push(a, push, scale)
            v = R.to[a ^ 1]
        remaining -= push

    flow = R.flows(caps)
    return FlowAssignment(flow=flow, value=float(demand), cost=float(lengths @ flow))
