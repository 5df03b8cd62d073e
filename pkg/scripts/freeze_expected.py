"""Recompute the derived reference values through the independent oracle routes
and freeze them into tests/expected.json.

Every number here comes from code that shares nothing with the solver under
test: exhaustive cut / integer-flow enumeration, subset enumeration, and the
separately assembled HiGHS LP in anf.oracle.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

from anf.model import Commodity, Edge, Instance
from anf.oracle import brute_force_lp_opt, brute_force_opt, regression_suite

OUT = Path(__file__).resolve().parent.parent / "tests" / "expected.json"


def min_cut_by_enumeration(nodes, edges, s, t):
    """Minimum s-t cut over all 2^(n-2) vertex bipartitions."""
    inner = [v for v in nodes if v not in (s, t)]
    best = math.inf
    for r in range(len(inner) + 1):
        for side in itertools.combinations(inner, r):
            S = {s, *side}
            best = min(best, sum(c for a, b, c in edges if a in S and b not in S))
    return best


def min_cost_by_integer_enumeration(nodes, edges, lengths, s, t, demand):
    """Cheapest integral flow of `demand` units, brute force over all edge values."""
    best = math.inf
    for g in itertools.product(*[range(int(c) + 1) for _, _, c in edges]):
        net = {v: 0 for v in nodes}
        for (a, b, _), x in zip(edges, g):
            net[a] += x
            net[b] -= x
        if net[s] == demand and net[t] == -demand and all(net[v] == 0 for v in nodes if v not in (s, t)):
            best = min(best, sum(l * x for l, x in zip(lengths, g)))
    return best


def main():
    exp = {}
    diamond = (["s", "a", "b", "t"], [("s", "a", 3), ("s", "b", 2), ("a", "b", 2), ("a", "t", 2), ("b", "t", 3)])
    exp["diamond_crossing_maxflow"] = min_cut_by_enumeration(*diamond, "s", "t")
    two_paths = (["s", "a", "b", "t"], [("s", "a", 2), ("a", "t", 2), ("s", "b", 9), ("b", "t", 9)])
    # cheap path s-a-t has edge lengths (1, 1); dear path s-b-t has total length 3
    exp["two_path_mcf_cost"] = min_cost_by_integer_enumeration(*two_paths, [1, 1, 3, 0], "s", "t", 5)

    shared = Instance(("s", "t"), (Edge("s", "t", 4.0),),
                      (Commodity("s", "t", 4.0, 1.0), Commodity("s", "t", 4.0, 1.0)))
    exp["shared_edge_lp"] = brute_force_lp_opt(shared)
    weighted = shared.with_commodities((Commodity("s", "t", 4.0, 1.0), Commodity("s", "t", 4.0, 10.0)))
    subset, val = brute_force_opt(weighted)
    exp["weighted_shared_ip"] = {"subset": list(subset), "value": val}
    exp["weighted_shared_lp"] = brute_force_lp_opt(weighted)

    exp["suite"] = []
    for inst in regression_suite():
        subset, ip = brute_force_opt(inst)
        exp["suite"].append({"name": inst.name, "n": inst.n, "m": inst.m, "k": inst.k,
                             "opt_lp": brute_force_lp_opt(inst), "opt_ip": ip, "ip_subset": list(subset)})

    exp["default_trials_m44_eps_1_9"] = math.ceil(10 * math.log(44) * 81)
    exp["pr_copies_m44_gamma_0_3"] = math.ceil(math.log(44) / 0.09)
    OUT.write_text(json.dumps(exp, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
