import io

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given

from anf.lp import (
    FractionalSolverConfig,
    LinearProgram,
    LPInfeasible,
    LPUnbounded,
    build_compact_lp,
    export_lp,
    solve_fractional,
    solve_lp,
)
from anf.model import Instance
from anf.oracle import brute_force_lp_opt
from conftest import DATA, line_instance, shared_edge, tiny_instances


def lp(c, A_ub=None, b_ub=(), A_eq=None, b_eq=(), lower=None, upper=None):
    c = np.asarray(c, float)
    n = len(c)
    A_ub = sp.csr_matrix(np.asarray(A_ub, float).reshape(-1, n))
    A_eq = sp.csr_matrix(np.asarray(A_eq, float).reshape(-1, n)) if A_eq is not None else sp.csr_matrix((0, n))
    lower = np.zeros(n) if lower is None else np.asarray(lower, float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    return LinearProgram(c, A_ub, np.asarray(b_ub, float), A_eq, np.asarray(b_eq, float), lower, upper)


@pytest.mark.parametrize("method", ["bundled", "highs"])
def test_solve_single_bound(method):
    res = solve_lp(lp([1.0], [[1.0]], [3.0], upper=[10.0]), method=method)
    assert res.x[0] == pytest.approx(3.0) and res.objective == pytest.approx(3.0)


@pytest.mark.parametrize("method", ["bundled", "highs"])
def test_infeasible_and_unbounded_are_distinct(method):
    with pytest.raises(LPInfeasible):
        solve_lp(lp([1.0], [[1.0]], [-1.0]), method=method)
    with pytest.raises(LPUnbounded):
        solve_lp(lp([1.0, 0.0], [[0.0, 1.0]], [1.0]), method=method)


def test_bundled_handles_equalities_and_degeneracy():
    # max x + y s.t. x + y == 1, x - y <= 0, both in [0, 1]: degenerate vertex at (0.5, 0.5) or any point on the face
    res = solve_lp(lp([1, 1], [[1, -1], [1, 1]], [0, 1], A_eq=[[1, 1]], b_eq=[1], upper=[1, 1]), method="bundled")
    assert res.objective == pytest.approx(1.0)


def test_compact_lp_shape_k1_m1():
    prog = build_compact_lp(line_instance())
    assert prog.num_vars == 2
    names = prog.row_names_eq + prog.row_names_ub
    assert "value_0" in names and "cap_0" in names and "strength_0_0" in names


def test_compact_lp_empty_commodities():
    inst = Instance(("s", "t"), line_instance().edges, ())
    assert solve_fractional(inst).value == 0.0


def test_single_commodity_full_routing():
    frac = solve_fractional(line_instance(cap=5, demand=3, weight=2.5))
    assert frac.routed[0] == pytest.approx(1.0) and frac.value == pytest.approx(2.5)


def test_shared_edge_objective(expected):
    frac = solve_fractional(shared_edge())
    assert frac.value == pytest.approx(expected["shared_edge_lp"])
    assert frac.routed.sum() == pytest.approx(1.0)


def test_atlanta_dimensions():
    from anf.ingest import load_instance

    prog = build_compact_lp(load_instance(DATA / "atlanta.json"))
    assert prog.num_vars == 210 + 210 * 44


def test_export_lp_lines():
    buf = io.StringIO()
    export_lp(build_compact_lp(line_instance()), buf)
    kinds = {line.split()[0] for line in buf.getvalue().splitlines() if not line.startswith("#")}
    assert kinds == {"VAR", "ROW", "COEF"}


@given(tiny_instances())
def test_bundled_matches_highs_and_oracle(inst):
    prog = build_compact_lp(inst)
    a = solve_lp(prog, method="bundled").objective
    b = solve_lp(prog, method="highs").objective
    assert a == pytest.approx(b, rel=1e-6, abs=1e-9)
    assert a == pytest.approx(brute_force_lp_opt(inst), rel=1e-6, abs=1e-9)


def test_fractional_backends_feasible(suite):
    for inst in suite[:6]:
        opt = solve_fractional(inst).value
        for backend in ("mwu", "pr"):
            frac = solve_fractional(inst, FractionalSolverConfig(backend=backend, gamma=0.15))
            assert frac.violations() == []
            assert frac.value <= opt * (1 + 1e-6) + 1e-9
        mwu = solve_fractional(inst, FractionalSolverConfig(backend="mwu", gamma=0.15))
        assert mwu.value >= (1 - 0.15) * opt - 1e-6


def test_config_rejects_bad_gamma():
    with pytest.raises(ValueError):
        FractionalSolverConfig(backend="mwu", gamma=1.5)
