"""Exhaustive ground truth for tiny instances, plus the tiny regression suite."""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from anf.lp import LPInfeasible, build_compact_lp, solve_lp
from anf.model import Commodity, Edge, Instance, prune_unroutable

MAX_K = 12
MAX_N = 10


def _guard(instance: Instance) -> None:
    if instance.k > MAX_K or instance.n > MAX_N:
        raise ValueError(f"oracle limited to k <= {MAX_K}, n <= {MAX_N}; got k={instance.k}, n={instance.n}")


def subset_feasible(instance: Instance, subset) -> bool:
    """Can every commodity in ``subset`` be routed in full simultaneously?"""
    members = set(subset)
    fixed = {i: (1.0 if i in members else 0.0) for i in range(instance.k)}
    lp = build_compact_lp(instance, fixed=fixed)
    lp.c[:] = 0.0
    try:
        solve_lp(lp, method="bundled")
    except LPInfeasible:
        return False
    return True


def brute_force_opt(instance: Instance) -> tuple[tuple[int, ...], float]:
    """Max-weight simultaneously routable subset by enumerating all 2^k subsets."""
    _guard(instance)
    w = instance.weights
    best, best_val = (), 0.0
    subsets = [s for r in range(instance.k + 1) for s in itertools.combinations(range(instance.k), r)]
    # heaviest first so that feasibility checks stop early
    subsets.sort(key=lambda s: (-float(w[list(s)].sum()) if s else 0.0, s))
    for s in subsets:
        val = float(w[list(s)].sum()) if s else 0.0
        if val <= best_val:
            break
        if subset_feasible(instance, s):
            best, best_val = s, val
            break
    return best, best_val


def brute_force_lp_opt(instance: Instance) -> float:
    """OPT_LP from a separately assembled compact formulation solved by HiGHS.

    Shares no constraint-building code with ``anf.lp`` so the two can
    cross-check each other.  Uses the net-flow form: net outflow at s_i is
    f_i, net inflow at t_i is f_i, conservation elsewhere.
    """
    _guard(instance)
    k, m, n = instance.k, instance.m, instance.n
    if k == 0:
        return 0.0
    nv = k * (m + 1)
    # columns: for commodity i, block [f_i, f_i1..f_im] at offset i*(m+1)
    A = instance.incidence()
    eq_blocks, ub_rows = [], []
    for i in range(k):
        block = np.zeros((n, nv))
        off = i * (m + 1)
        block[:, off + 1: off + 1 + m] = A
        rhs_col = np.zeros(n)
        rhs_col[instance.sources[i]] = 1.0
        rhs_col[instance.sinks[i]] = -1.0
        block[:, off] = -rhs_col
        eq_blocks.append(block)
    A_eq = sp.csr_matrix(np.vstack(eq_blocks))
    b_eq = np.zeros(A_eq.shape[0])
    cap_rows = np.zeros((m, nv))
    for i in range(k):
        off = i * (m + 1)
        cap_rows[:, off + 1: off + 1 + m] = instance.demands[i] * np.eye(m)
        strength = np.zeros((m, nv))
        strength[:, off + 1: off + 1 + m] = instance.demands[i] * np.eye(m)
        strength[:, off] = -instance.capacities
        ub_rows.append(strength)
    A_ub = sp.csr_matrix(np.vstack([cap_rows] + ub_rows))
    b_ub = np.concatenate([instance.capacities, np.zeros(k * m)])
    c = np.zeros(nv)
    c[0::m + 1] = -instance.weights
    bounds = [(0.0, 1.0)] * nv
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return float(-res.fun)


def random_tiny_instance(rng: np.random.Generator, n_range=(4, 8), m_max=16, k_max=4, name="tiny") -> Instance:
    """Random connected-ish digraph with up to ``k_max`` routable commodities.

    A directed ring guarantees every pair is connected; extra chords are
    added at random.  Unroutable commodities are pruned, and the draw is
    repeated until at least one commodity survives.
    """
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        nodes = tuple(f"v{j}" for j in range(n))
        pairs = {(j, (j + 1) % n) for j in range(n)}
        m = int(rng.integers(max(n, 3), min(m_max, n * (n - 1)) + 1))
        while len(pairs) < m:
            a, b = rng.choice(n, size=2, replace=False)
            pairs.add((int(a), int(b)))
        edges = tuple(Edge(nodes[a], nodes[b], float(rng.integers(1, 11))) for a, b in sorted(pairs))
        k = int(rng.integers(1, k_max + 1))
        comms = []
        for _ in range(k):
            s, t = rng.choice(n, size=2, replace=False)
            comms.append(Commodity(nodes[int(s)], nodes[int(t)], float(rng.integers(1, 11)),
                                   float(rng.integers(1, 11))))
        inst, _ = prune_unroutable(Instance(nodes, edges, tuple(comms), name))
        if inst.k:
            return inst


def regression_suite(count: int = 24, seed: int = 20240611) -> list[Instance]:
    """Deterministic list of tiny instances (n <= 8, m <= 16, k <= 4)."""
    rng = np.random.default_rng(seed)
    return [random_tiny_instance(rng, name=f"tiny{j:02d}") for j in range(count)]
