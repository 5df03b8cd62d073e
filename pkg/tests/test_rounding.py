import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anf.lp import solve_fractional
from anf.model import Commodity, FractionalSolution
from anf.rounding import (
    RoundingConfig,
    alteration_round,
    beta_bound,
    congestion_cap,
    default_max_trials,
    randomized_round,
    round_once,
    scale_solution,
    trial_rng,
    write_trials_csv,
)
from conftest import line_instance, ring, tiny_instances


@pytest.mark.parametrize("m, value", [(44, 15.78), (176, 17.47), (84, 16.52), (94, 16.66)])
def test_beta_bound_reported_values(m, value):
    assert beta_bound(m, 1.85) == pytest.approx(value, abs=0.01)


def test_beta_bound_domain():
    with pytest.raises(ValueError):
        beta_bound(2)
    with pytest.raises(ValueError):
        beta_bound(44, b=1.0)


def test_congestion_cap_fallback():
    assert congestion_cap(8, 5) == 5.0
    assert congestion_cap(9, 5) == beta_bound(9)


def test_default_trials(expected):
    # exact arithmetic: 10 * ln 44 * 81 = 3065.2, so the ceiling is 3066
    assert default_max_trials(44, 1 / 9) == expected["default_trials_m44_eps_1_9"] == 3066


def test_round_once_all_one():
    inst = line_instance(cap=5, demand=3)
    sol = round_once(FractionalSolution(inst, [1.0], [[1.0]]), trial_rng(0, 0))
    assert sol.routed_indices() == [0] and sol.congestion == pytest.approx(0.6)


def test_round_once_all_zero():
    inst = line_instance()
    sol = round_once(FractionalSolution(inst, [0.0], [[0.0]]), trial_rng(0, 0))
    assert sol.throughput == 0 and sol.routed_indices() == []


def test_round_once_frequency():
    inst = line_instance(cap=5, demand=3)
    frac = FractionalSolution(inst, [0.3], [[0.3]])
    hits = sum(round_once(frac, trial_rng(17, t)).decisions[0] for t in range(10_000))
    assert abs(hits / 10_000 - 0.3) <= 0.02


def test_trial_streams_order_independent():
    a = [trial_rng(5, t).random() for t in range(5)]
    b = [trial_rng(5, t).random() for t in reversed(range(5))][::-1]
    assert a == b


def test_integral_accepted_first_trial():
    inst = line_instance(cap=5, demand=3)
    frac = FractionalSolution(inst, [1.0], [[1.0]])
    sol, records = randomized_round(frac, RoundingConfig(max_trials=5, select="first"))
    assert sol.accepted and sol.trial == 0 and sol.alpha == 1.0 and len(records) == 1


@given(tiny_instances(), st.integers(0, 2**32))
def test_accepted_records_meet_predicates(inst, seed):
    frac = solve_fractional(inst)
    cfg = RoundingConfig(max_trials=30, seed=seed)
    sol, records = randomized_round(frac, cfg)
    cap = congestion_cap(inst.m, inst.k, cfg.b)
    for r in records:
        if r.accepted:
            assert r.alpha >= 1 - cfg.epsilon - 1e-12 and r.beta <= cap * (1 + 1e-12)
    if sol.accepted:
        assert max(r.alpha for r in records if r.accepted) == sol.alpha


def test_overflow_rate_below_closed_form_bound(suite):
    b = 1.85
    for inst in [s for s in suite if s.m >= 9][:6]:
        frac = solve_fractional(inst)
        cap = beta_bound(inst.m, b)
        lm = math.log(inst.m)
        per_edge = math.exp(-1.5 * b * lm - 3 * b * math.log(b) * lm / math.log(lm) - 1)
        bound = min(1.0, inst.m * per_edge)
        n = 10_000
        bad = sum(round_once(frac, trial_rng(1, t)).congestion > cap for t in range(n))
        p = bad / n
        assert p <= bound + 3 * math.sqrt(max(p * (1 - p), 1e-300) / n)


def _contended_ring(count=40, frac=0.5):
    """count commodities stacked on one ring edge; deliberately over capacity."""
    comms = [Commodity("r0", "r1", 10.0) for _ in range(count)]
    inst = ring(10, cap=10.0, commodities=comms)
    ef = np.zeros((count, inst.m))
    ef[:, 0] = frac
    return FractionalSolution(inst, np.full(count, frac), ef)


def test_alteration_ample_capacity_matches_phase_one():
    inst = ring(10, cap=1000.0, commodities=[Commodity("r0", "r2", 5.0), Commodity("r3", "r1", 5.0)])
    frac = solve_fractional(inst)
    frac = FractionalSolution(inst, 0.5 * frac.routed, 0.5 * frac.edge_fractions)
    for t in range(50):
        a = alteration_round(frac, rng=trial_rng(9, t))
        b = round_once(frac, trial_rng(9, t))
        assert np.array_equal(a.decisions, b.decisions)


def test_alteration_all_zero():
    frac = _contended_ring(frac=0.5)
    zero = FractionalSolution(frac.instance, np.zeros(frac.instance.k), np.zeros_like(frac.edge_fractions))
    assert alteration_round(zero).throughput == 0


def test_alteration_discards_and_caps():
    frac = _contended_ring()
    cfg = RoundingConfig()
    limit = 1 + beta_bound(frac.instance.m, cfg.b)
    discarded = 0
    for t in range(1000):
        rng_a, rng_b = trial_rng(t, 0), trial_rng(t, 0)
        sol = alteration_round(frac, cfg, rng_a)
        first = round_once(frac, rng_b)
        discarded += int(first.decisions.sum() - sol.decisions.sum())
        assert sol.congestion <= limit * (1 + 1e-12)
    assert discarded > 0


def test_scale_identity_and_half():
    frac = solve_fractional(ring(10, commodities=[Commodity("r0", "r4", 6.0, 2.0)]))
    same = scale_solution(frac, 1.0).solution
    assert np.array_equal(same.routed, frac.routed) and np.array_equal(same.edge_fractions, frac.edge_fractions)
    half = scale_solution(frac, 0.5).solution
    assert half.value == 0.5 * frac.value
    assert np.array_equal(half.edge_fractions, 0.5 * frac.edge_fractions)


def test_scale_applicability_threshold(suite):
    inst = next(s for s in suite if s.k >= 2 and solve_fractional(s).value > s.w_max * 1.01)
    frac = solve_fractional(inst)
    c0 = inst.w_max / frac.value
    assert scale_solution(frac, min(1.0, c0 * 1.001)).applicable
    assert not scale_solution(frac, c0 * 0.999).applicable


def test_scale_domain():
    frac = solve_fractional(line_instance())
    for c in (0.0, 1.5):
        with pytest.raises(ValueError):
            scale_solution(frac, c)


def test_trials_csv():
    frac = solve_fractional(line_instance())
    _, records = randomized_round(frac, RoundingConfig(max_trials=3, select="best"))
    buf = io.StringIO()
    write_trials_csv(records, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "trial,alpha,beta,accepted,seed" and len(lines) == 4


def test_config_validation():
    for kw in ({"epsilon": 0}, {"epsilon": 1}, {"b": 1.0}, {"select": "worst"}):
        with pytest.raises(ValueError):
            RoundingConfig(**kw)
