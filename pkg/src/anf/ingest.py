"""Instance I/O: canonical JSON, a subset of SNDlib native text, and perturbation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from anf.model import Commodity, Edge, FractionalSolution, Instance, RoundedSolution, validate


class IngestError(ValueError):
    pass


# canonical JSON

def _num(x: float):
    # integral values print as ints; everything else uses Python's shortest round-trip repr
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "nodes": list(inst.nodes),
        "edges": [{"from": e.tail, "to": e.head, "capacity": _num(e.capacity)} for e in inst.edges],
        "commodities": [
            {"source": c.source, "sink": c.sink, "demand": _num(c.demand), "weight": _num(c.weight)}
            for c in inst.commodities
        ],
    }


def dump_json(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def _positive(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise IngestError(f"{what}: expected a number, got {value!r}")
    if not value > 0:
        raise IngestError(f"{what}: must be positive, got {value!r}")
    return float(value)


def instance_from_dict(doc) -> Instance:
    if not isinstance(doc, dict):
        raise IngestError("instance document must be a JSON object")
    try:
        nodes = [str(v) for v in doc["nodes"]]
        edges = [
            Edge(str(e["from"]), str(e["to"]), _positive(e["capacity"], f"edge {j} capacity"))
            for j, e in enumerate(doc["edges"])
        ]
        comms = [
            Commodity(str(c["source"]), str(c["sink"]),
                      _positive(c["demand"], f"commodity {j} demand"),
                      _positive(c.get("weight", 1), f"commodity {j} weight"))
            for j, c in enumerate(doc.get("commodities", []))
        ]
    except (KeyError, TypeError) as exc:
        raise IngestError(f"malformed instance document: {exc!r}") from None
    inst = Instance(tuple(nodes), tuple(edges), tuple(comms), str(doc.get("name", "")))
    problems = validate(inst)
    if problems:
        raise IngestError("; ".join(problems))
    return inst


def parse_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)


# SNDlib native format

_SECTION = re.compile(r"^\s*([A-Z_]+)\s*\(\s*$")
_NODE = re.compile(r"^\s*(\S+)\s*\(")
_LINK = re.compile(r"^\s*(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)\s*(.*)$")


def _sections(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if current is None:
            m = _SECTION.match(line)
            if m:
                current = m.group(1)
                out[current] = []
            continue
        if line.strip() == ")":
            current = None
            continue
        out[current].append(line)
    return out


def _float(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise IngestError(f"{where}: cannot parse number {tok!r}") from None


def parse_sndlib_native(text: str, name: str = "") -> Instance:
    """NODES / LINKS / DEMANDS subset of the SNDlib native format.

    Each undirected link yields two antiparallel edges with the full link
    capacity: the pre-installed capacity if positive, else the first module
    capacity.  Demand values become demands with weight 1.
    """
    sec = _sections(text)
    for need in ("NODES", "LINKS", "DEMANDS"):
        if need not in sec:
            raise IngestError(f"missing {need} section")
    nodes = []
    for line in sec["NODES"]:
        m = _NODE.match(line)
        if not m:
            raise IngestError(f"bad node line {line!r}")
        nodes.append(m.group(1))
    edges = []
    for line in sec["LINKS"]:
        m = _LINK.match(line)
        if not m:
            raise IngestError(f"bad link line {line!r}")
        lid, a, b, rest = m.groups()
        head, _, modules = rest.partition("(")
        nums = head.split()
        if not nums:
            raise IngestError(f"link {lid}: missing pre-installed capacity")
        cap = _float(nums[0], f"link {lid}")
        if cap <= 0:
            mods = modules.replace(")", " ").split()
            if not mods:
                raise IngestError(f"link {lid}: no capacity and no modules")
            cap = _float(mods[0], f"link {lid} module")
        edges.append(Edge(a, b, cap))
        edges.append(Edge(b, a, cap))
    comms = []
    for line in sec["DEMANDS"]:
        m = _LINK.match(line)
        if not m:
            raise IngestError(f"bad demand line {line!r}")
        did, s, t, rest = m.groups()
        toks = rest.split()
        if len(toks) < 2:
            raise IngestError(f"demand {did}: expected routing unit and value")
        # toks[0] is the routing unit, ignored
        comms.append(Commodity(s, t, _float(toks[1], f"demand {did}"), 1.0))
    inst = Instance(tuple(nodes), tuple(edges), tuple(comms), name)
    problems = validate(inst)
    if problems:
        raise IngestError("; ".join(problems))
    return inst


def load_instance(path) -> Instance:
    """Dispatch on content: JSON documents start with '{'."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return parse_json(text)
    stem = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_sndlib_native(text, name=stem)


# perturbation

@dataclass(frozen=True)
class PerturbationSpec:
    capacity: tuple[float, float] = (20.0, 60.0)
    demand: tuple[float, float] = (50.0, 50.0)
    weight: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        for label in ("capacity", "demand", "weight"):
            lo, hi = getattr(self, label)
            if not (0 < lo <= hi):
                raise ValueError(f"{label} range must satisfy 0 < lo <= hi, got ({lo}, {hi})")


def perturb(instance: Instance, spec: PerturbationSpec) -> Instance:
    """Redraw capacities, then demands, then weights, uniformly from the given ranges."""
    rng = np.random.default_rng(spec.seed)
    caps = rng.uniform(*spec.capacity, size=instance.m)
    dem = rng.uniform(*spec.demand, size=instance.k)
    wts = rng.uniform(*spec.weight, size=instance.k)
    edges = tuple(Edge(e.tail, e.head, float(c)) for e, c in zip(instance.edges, caps))
    comms = tuple(
        Commodity(c.source, c.sink, float(d), float(w)) for c, d, w in zip(instance.commodities, dem, wts)
    )
    return Instance(instance.nodes, edges, comms, instance.name)


# solution files

def dump_fractional(sol: FractionalSolution, **meta) -> str:
    doc = {
        "kind": "fractional",
        "instance": instance_to_dict(sol.instance),
        "routed": [float(x) for x in sol.routed],
        "edge_fractions": [[float(x) for x in row] for row in sol.edge_fractions],
        "value": sol.value,
    }
    doc.update(meta)
    return json.dumps(doc) + "\n"


def parse_fractional(text: str) -> FractionalSolution:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") != "fractional":
        raise IngestError("not a fractional solution document")
    inst = instance_from_dict(doc["instance"])
    try:
        return FractionalSolution(inst, np.array(doc["routed"], float), np.array(doc["edge_fractions"], float))
    except (KeyError, ValueError) as exc:
        raise IngestError(f"malformed fractional solution: {exc}") from None


def dump_rounded(sol: RoundedSolution, **meta) -> str:
    """Routed set, per-commodity loads and the LP value, enough to recompute alpha and beta."""
    doc = {
        "kind": "rounded",
        "instance": instance_to_dict(sol.instance),
        "decisions": [int(z) for z in sol.decisions],
        "loads": [[float(x) for x in row] for row in sol.loads],
        "lp_value": sol.lp_value,
        "alpha": sol.alpha,
        "beta": sol.congestion,
    }
    doc.update(meta)
    return json.dumps(doc) + "\n"


def parse_rounded(text: str) -> RoundedSolution:
    doc = json.loads(text)
    if not isinstance(doc, dict) or doc.get("kind") != "rounded":
        raise IngestError("not a rounded solution document")
    inst = instance_from_dict(doc["instance"])
    return RoundedSolution(inst, np.array(doc["decisions"], bool), np.array(doc["loads"], float), float(doc["lp_value"]))
