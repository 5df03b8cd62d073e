"""Regenerate data/ from the SNDlib topologies bundled in the topohub wheel.

topohub carries node/link lists and demand pairs but no capacities, so the
files use the benchmark defaults: every link capacity 40, every demand 50,
weight 1.  Writes both SNDlib native text and canonical JSON.

    python3 scripts/make_sndlib_data.py path/to/topohub-*.whl
"""

from __future__ import annotations

import argparse
import json
import zipfile
from pathlib import Path

from anf.ingest import dump_json, parse_sndlib_native

NETWORKS = ("atlanta", "germany50", "di-yuan", "dfn-gwin")
CAPACITY = 40
DEMAND = 50


def to_native(doc: dict) -> str:
    names = {v["id"]: v["name"] for v in doc["nodes"]}
    lines = ["NODES ("]
    lines += [f"  {v['name']} ( {v['pos'][0]:.2f} {v['pos'][1]:.2f} )" for v in doc["nodes"]]
    lines += [")", "", "LINKS ("]
    for j, e in enumerate(doc["edges"]):
        a, b = names[e["source"]], names[e["target"]]
        lines.append(f"  L{j + 1} ( {a} {b} ) {CAPACITY:.2f} 0.00 0.00 0.00 ( {CAPACITY:.2f} 1.00 )")
    lines += [")", "", "DEMANDS ("]
    j = 0
    for src, row in doc["graph"]["demands"].items():
        for dst in row:
            j += 1
            lines.append(f"  D{j} ( {names[int(src)] if src.isdigit() else src} "
                         f"{names[int(dst)] if dst.isdigit() else dst} ) 1 {DEMAND:.2f} UNLIMITED")
    lines += [")", ""]
    return "\n".join(lines)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel", type=Path)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(args.wheel) as z:
        for net in NETWORKS:
            doc = json.loads(z.read(f"topohub/data/sndlib/{net}.json"))
            text = to_native(doc)
            inst = parse_sndlib_native(text, name=net)
            (args.out / f"{net}.txt").write_text(text)
            (args.out / f"{net}.json").write_text(dump_json(inst))
            print(f"{net}: n={inst.n} m={inst.m} k={inst.k}")


if __name__ == "__main__":
    main()
