"""Pessimistic-estimator derandomization of the rounding step.

The estimator is est_alpha + sum_e est_beta(e), each a Chernoff-style
moment-generating product over independent commodity coins.  Fixing a
coin replaces that commodity's expected factor by its realized one, so
the products are kept as sums of logarithms and updated incrementally.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from anf.model import FractionalSolution, RoundedSolution
from anf.rounding import B_DEFAULT, RoundingConfig, _as_compact, beta_bound

FREE, ZERO, ONE = -1, 0, 1


class EstimatorPreconditionError(RuntimeError):
    """The initial estimate is not below 1, or m is too small for the analysis."""


def chernoff_lower(delta: float, mu: float) -> float:
    """exp(-delta^2 mu / 2): lower-tail bound for delta in (0, 1)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return math.exp(-delta * delta * mu / 2.0)


def chernoff_upper(delta: float, mu: float) -> float:
    """(e^delta / (1+delta)^(1+delta))^mu, evaluated in log space."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return math.exp(mu * (delta - (1.0 + delta) * math.log1p(delta)))


def lower_tail_mgf_bound(delta, mu_lower, means_mgf) -> float:
    """Middle expression of the lower-tail chain: exp(-theta(1-delta)mu) * prod E[exp(theta X_i)]."""
    theta = math.log1p(-delta)
    return math.exp(-theta * (1 - delta) * mu_lower + float(np.sum(np.log(means_mgf))))


def upper_tail_mgf_bound(delta, mu_upper, means_mgf) -> float:
    theta = math.log1p(delta)
    return math.exp(-theta * (1 + delta) * mu_upper + float(np.sum(np.log(means_mgf))))


@dataclass(frozen=True)
class EstimatorParams:
    m: int
    b: float
    delta_alpha: float
    theta_alpha: float
    mu_tilde: float
    delta_beta: float
    theta_beta: float
    mu_hat: float = 1.0

    @classmethod
    def for_solution(cls, frac: FractionalSolution, b: float = B_DEFAULT) -> "EstimatorParams":
        m = frac.instance.m
        target = beta_bound(m, b)
        da = 1.0 / m
        w_max = frac.w_max
        return cls(
            m=m,
            b=b,
            delta_alpha=da,
            theta_alpha=math.log1p(-da),
            mu_tilde=frac.value / w_max if w_max > 0 else 0.0,
            delta_beta=target - 1.0,
            theta_beta=math.log(target),
        )

    @property
    def log_alpha_offset(self) -> float:
        return -self.theta_alpha * (1 - self.delta_alpha) * self.mu_tilde

    @property
    def log_beta_offset(self) -> float:
        return -self.theta_beta * (1 + self.delta_beta) * self.mu_hat


class _Compensated:
    """Element-wise Neumaier summation over a numpy array of accumulators."""

    def __init__(self, init):
        self.s = np.array(init, dtype=float)
        self.c = np.zeros_like(self.s)

    def add(self, idx, x):
        s = self.s[idx]
        t = s + x
        big = np.abs(s) >= np.abs(x)
        self.c[idx] += np.where(big, (s - t) + x, (x - t) + s)
        self.s[idx] = t

    def value(self, idx=slice(None)):
        return self.s[idx] + self.c[idx]


def _log_factors(p, x, theta):
    """log E[exp(theta * Z * x)] for Z ~ Bernoulli(p): log1p(p * expm1(theta x))."""
    return np.log1p(p * np.expm1(theta * x))


class EstimatorState:
    """Per-commodity coin status plus the logarithms of the estimator products."""

    def __init__(self, frac: FractionalSolution, params: EstimatorParams):
        frac = _as_compact(frac)
        inst = frac.instance
        self.params = params
        self.p = frac.routed.copy()
        w_max = frac.w_max
        self.u = inst.weights / w_max if w_max > 0 else np.zeros(inst.k)
        self.a = frac.normalized_loads()
        self.status = np.full(inst.k, FREE, dtype=np.int8)
        self.touched = [np.flatnonzero(row > 0) for row in self.a]
        self._alpha = _Compensated([float(np.sum(self._alpha_terms(np.arange(inst.k))))])
        self._beta = _Compensated(self._beta_terms_full())

    # log-factor of commodity i in each product, given a status
    def _alpha_log(self, i, status):
        th = self.params.theta_alpha
        if status == ONE:
            return th * self.u[i]
        if status == ZERO:
            return 0.0
        return float(_log_factors(self.p[i], self.u[i], th))

    def _alpha_terms(self, idx):
        out = np.zeros(len(idx))
        for j, i in enumerate(idx):
            out[j] = self._alpha_log(i, self.status[i])
        return out

    def _beta_log_row(self, i, status, edges):
        th = self.params.theta_beta
        x = self.a[i, edges]
        if status == ONE:
            return th * x
        if status == ZERO:
            return np.zeros(len(edges))
        return _log_factors(self.p[i], x, th)

    def _beta_terms_full(self):
        m = self.a.shape[1]
        cols = np.arange(m)
        acc = np.zeros(m)
        terms = [self._beta_log_row(i, self.status[i], cols) for i in range(len(self.p))]
        if terms:
            stacked = np.vstack(terms)
            acc = np.array([math.fsum(stacked[:, e]) for e in range(m)])
        return acc

    def est_alpha(self) -> float:
        return math.exp(self.params.log_alpha_offset + float(self._alpha.value()[0]))

    def est_beta(self) -> np.ndarray:
        return np.exp(self.params.log_beta_offset + self._beta.value())

    def estimate(self) -> float:
        return self.est_alpha() + math.fsum(self.est_beta())

    def estimate_if(self, i: int, status: int) -> float:
        """Estimate after setting commodity i's status, without committing."""
        cur = self.status[i]
        da = self._alpha_log(i, status) - self._alpha_log(i, cur)
        alpha = math.exp(self.params.log_alpha_offset + float(self._alpha.value()[0]) + da)
        beta_logs = self.params.log_beta_offset + self._beta.value()
        e = self.touched[i]
        if len(e):
            beta_logs = beta_logs.copy()
            beta_logs[e] += self._beta_log_row(i, status, e) - self._beta_log_row(i, cur, e)
        return alpha + math.fsum(np.exp(beta_logs))

    def fix(self, i: int, status: int) -> None:
        cur = self.status[i]
        if cur == status:
            return
        self._alpha.add(np.array([0]), np.array([self._alpha_log(i, status) - self._alpha_log(i, cur)]))
        e = self.touched[i]
        if len(e):
            self._beta.add(e, self._beta_log_row(i, status, e) - self._beta_log_row(i, cur, e))
        self.status[i] = status

    def recomputed(self) -> float:
        """Same estimate from scratch, for cross-checking the incremental path."""
        k = len(self.p)
        la = math.fsum(self._alpha_terms(np.arange(k)))
        lb = self._beta_terms_full()
        return math.exp(self.params.log_alpha_offset + la) + math.fsum(
            np.exp(self.params.log_beta_offset + lb)
        )


def est_alpha(state: EstimatorState, params: EstimatorParams | None = None) -> float:
    return state.est_alpha()


def est_beta_edge(state: EstimatorState, params: EstimatorParams | None, edge: int) -> float:
    return float(state.est_beta()[edge])


def conditional_estimate(state: EstimatorState, params: EstimatorParams | None = None) -> float:
    return state.estimate()


@dataclass(frozen=True)
class TraceRow:
    index: int
    decision: int
    estimate: float


def deterministic_round(frac, config: RoundingConfig | None = None):
    """Fix coins one commodity at a time, never increasing the estimate.

    Returns ``(solution, trace)`` where trace row 0 holds the initial
    estimate (index -1).  Raises EstimatorPreconditionError if m < 9 or the
    initial estimate is not below 1.
    """
    config = config or RoundingConfig()
    frac = _as_compact(frac)
    inst = frac.instance
    if inst.m < 9:
        raise EstimatorPreconditionError(f"derandomization needs m >= 9, got m={inst.m}")
    params = EstimatorParams.for_solution(frac, config.b)
    state = EstimatorState(frac, params)
    current = state.estimate()
    trace = [TraceRow(-1, -1, current)]
    if not current < 1:
        raise EstimatorPreconditionError(f"initial estimate {current:.6g} is not below 1")
    for i in range(inst.k):
        if frac.routed[i] <= 0:
            # no fractional flow to rescale: the commodity cannot be admitted
            choice = ZERO
        elif state.estimate_if(i, ZERO) < current:
            choice = ZERO
        else:
            choice = ONE
        state.fix(i, choice)
        current = state.estimate()
        trace.append(TraceRow(i, int(choice), current))
    z = state.status == ONE
    sol = RoundedSolution.from_decisions(frac, z, accepted=bool(current < 1))
    return sol, trace


def write_trace_csv(trace, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["i", "z", "estimate"])
    for row in trace:
        w.writerow([row.index, row.decision, repr(row.estimate)])
