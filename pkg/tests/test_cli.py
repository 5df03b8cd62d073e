import csv
import json

import pytest

from anf.cli import derive_seed, main
from anf.ingest import dump_json, load_instance, parse_fractional
from anf.model import RoundedSolution
from anf.rounding import beta_bound


@pytest.fixture
def tiny_file(tmp_path, suite):
    inst = next(s for s in suite if s.m >= 9 and s.k >= 2)
    path = tmp_path / "tiny.json"
    path.write_text(dump_json(inst))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_simplex_and_mwu(tiny_file, tmp_path, capsys):
    assert main(["solve", str(tiny_file), "--out", str(tmp_path / "lp.json")]) == 0
    assert "W_LP=" in capsys.readouterr().out
    lp = parse_fractional((tmp_path / "lp.json").read_text())
    trace = tmp_path / "mwu.jsonl"
    assert main(["solve", str(tiny_file), "--backend", "mwu", "--gamma", "0.2",
                 "--out", str(tmp_path / "mwu.json"), "--trace", str(trace)]) == 0
    mwu = parse_fractional((tmp_path / "mwu.json").read_text())
    assert mwu.value >= (1 - 0.2 - 1e-9) * lp.value
    records = [json.loads(x) for x in trace.read_text().splitlines()]
    assert records[-1]["termination"] in ("capacity", "iteration_cap")
    assert all("commodity" in r for r in records[:-1])


def test_solve_pr(tiny_file, tmp_path):
    assert main(["solve", str(tiny_file), "--backend", "pr", "--out", str(tmp_path / "pr.json")]) == 0
    assert parse_fractional((tmp_path / "pr.json").read_text()).violations() == []


def test_missing_file(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json")]) == 2
    assert main(["round", str(tmp_path / "nope.json")]) == 2
    assert main(["experiment", str(tmp_path / "nope.json")]) == 2


def test_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["solve", str(bad)]) == 2


@pytest.fixture
def frac_file(tiny_file, tmp_path):
    out = tmp_path / "frac.json"
    main(["solve", str(tiny_file), "--out", str(out)])
    return out


def test_round_rr_deterministic(frac_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["round", str(frac_file), "--mode", "rr", "--seed", "1", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert len(rows) == 10 * 100
    assert all(r["alpha"] and r["beta"] for r in rows)


def test_round_best_respects_cap(frac_file, tmp_path):
    best = tmp_path / "best.json"
    assert main(["round", str(frac_file), "--seed", "4", "--out", str(tmp_path / "r.csv"),
                 "--solution-out", str(best)]) == 0
    doc = json.loads(best.read_text())
    inst = parse_fractional(frac_file.read_text()).instance
    assert doc["beta"] <= beta_bound(inst.m)
    rows = read_csv(tmp_path / "r.csv")
    within = [float(r["alpha"]) for r in rows if float(r["beta"]) <= beta_bound(inst.m)]
    assert doc["alpha"] == max(within)


def test_round_derand_single_row(frac_file, tmp_path):
    out, trace = tmp_path / "d.csv", tmp_path / "trace.csv"
    assert main(["round", str(frac_file), "--mode", "derand", "--out", str(out),
                 "--estimator-trace", str(trace)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and rows[0]["accepted"] == "1"
    assert read_csv(trace)[0]["i"] == "-1"


def test_round_derand_precondition(tmp_path):
    small = tmp_path / "small.json"
    small.write_text(json.dumps({"name": "s", "nodes": ["a", "b"],
                                 "edges": [{"from": "a", "to": "b", "capacity": 2}],
                                 "commodities": [{"source": "a", "sink": "b", "demand": 1, "weight": 1}]}))
    frac = tmp_path / "f.json"
    main(["solve", str(small), "--out", str(frac)])
    assert main(["round", str(frac), "--mode", "derand"]) == 3


def test_round_alter(frac_file, tmp_path):
    out = tmp_path / "alt.csv"
    assert main(["round", str(frac_file), "--mode", "alter", "--executions", "2", "--rounds", "5",
                 "--out", str(out)]) == 0
    assert len(read_csv(out)) == 10


def _experiment(tmp_path, suite, **over):
    paths = []
    for inst in [s for s in suite if s.m >= 9][:2]:
        p = tmp_path / f"{inst.name}.json"
        p.write_text(dump_json(inst))
        paths.append(p.name)
    cfg = {"instances": paths, "backends": ["simplex", "mwu"], "gammas": [0.2],
           "modes": ["rr", "alter", "derand"], "trials": 4, "seed": 9}
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_experiment_grid(tmp_path, suite):
    cfg = _experiment(tmp_path, suite)
    out = tmp_path / "res.csv"
    assert main(["experiment", str(cfg), "--out", str(out), "--solutions", str(tmp_path / "sol")]) == 0
    rows = read_csv(out)
    # 2 instances x 2 backends x (rr: 4 + alter: 4 + derand: 1)
    assert len(rows) == 2 * 2 * 9
    assert all(r["status"] == "ok" for r in rows)
    assert {r["epsilon"] for r in rows} == {repr(1 / 9)} and {r["b"] for r in rows} == {"1.85"}
    # every alpha/beta pair is recomputable from the emitted files
    for r in rows:
        doc = json.loads((tmp_path / "sol" / r["solution_file"]).read_text())
        frac = parse_fractional((tmp_path / "sol" / doc["fractional"]).read_text())
        routed, = [t["routed"] for t in doc["trials"] if t["trial"] == int(r["trial"])]
        z = [i in routed for i in range(frac.instance.k)]
        sol = RoundedSolution.from_decisions(frac, z)
        assert repr(sol.alpha) == r["alpha_achieved"] and repr(sol.congestion) == r["beta_achieved"]


def test_experiment_reproducible(tmp_path, suite):
    cfg = _experiment(tmp_path, suite)

    def run(name, jobs):
        out = tmp_path / name
        main(["experiment", str(cfg), "--out", str(out), "--jobs", str(jobs),
              "--solutions", str(tmp_path / f"{name}_sol")])
        rows = read_csv(out)
        # wall-clock time is the only column allowed to differ between reruns
        return [{k: v for k, v in r.items() if k != "runtime_ms"} for r in rows]

    assert run("a.csv", 1) == run("b.csv", 2)


def test_experiment_records_failures(tmp_path, suite):
    cfg = _experiment(tmp_path, suite, instances=["missing.json"], backends=["simplex"], modes=["rr"])
    out = tmp_path / "res.csv"
    assert main(["experiment", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and rows[0]["status"].startswith("error")


def test_experiment_beta_bound_column(tmp_path):
    from conftest import DATA

    g50 = load_instance(DATA / "germany50.json")
    small = g50.with_commodities(g50.commodities[:3])
    (tmp_path / "germany50.json").write_text(dump_json(small))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"instances": ["germany50.json"], "backends": ["simplex"],
                               "modes": ["derand"], "trials": 1}))
    out = tmp_path / "res.csv"
    assert main(["experiment", str(cfg), "--out", str(out)]) == 0
    row, = read_csv(out)
    assert float(row["beta_bound"]) == pytest.approx(17.47, abs=0.01)


def test_derive_seed_stable():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2) != derive_seed(1, "a", 3)
