"""Compact edge-flow LP and a desk-scale bounded-variable revised simplex.

Variable layout of the compact LP: ``f_i`` for i < k first, then
``f_ie`` at column ``k + i*m + e``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from anf.model import FractionalSolution, Instance

log = logging.getLogger(__name__)


class LPError(Exception):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


@dataclass
class LinearProgram:
    """maximize c @ x  s.t.  A_ub x <= b_ub,  A_eq x == b_eq,  lower <= x <= upper."""

    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: list[str] = field(default_factory=list)
    row_names_ub: list[str] = field(default_factory=list)
    row_names_eq: list[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return self.A_ub.shape[0] + self.A_eq.shape[0]


class LPResult(NamedTuple):
    x: np.ndarray
    objective: float
    iterations: int
    method: str


def build_compact_lp(instance: Instance, fixed: dict[int, float] | None = None) -> LinearProgram:
    """Compact edge-flow relaxation with the strengthening rows d_i f_ie <= c_e f_i.

    ``fixed`` pins selected routed fractions (used by the brute-force oracle).
    Flow into s_i and out of t_i is pinned to zero; such arcs only carry
    cycles and leaving them free lets the source outflow exceed the net flow.
    """
    k, m, n = instance.k, instance.m, instance.n
    nv = k + k * m
    tails, heads = instance.tails, instance.heads
    caps, dem, w = instance.capacities, instance.demands, instance.weights

    def col(i, e):
        return k + i * m + e

    c = np.zeros(nv)
    c[:k] = w
    lower = np.zeros(nv)
    upper = np.ones(nv)
    for i, val in (fixed or {}).items():
        lower[i] = upper[i] = val

    eq_r, eq_c, eq_v, eq_names = [], [], [], []
    row = 0
    for i in range(k):
        s, t = instance.sources[i], instance.sinks[i]
        for e in range(m):
            if heads[e] == s or tails[e] == t:
                upper[col(i, e)] = 0.0
        # source outflow equals f_i
        for e in np.flatnonzero(tails == s):
            eq_r.append(row); eq_c.append(col(i, e)); eq_v.append(1.0)
        eq_r.append(row); eq_c.append(i); eq_v.append(-1.0)
        eq_names.append(f"value_{i}")
        row += 1
        for v in range(n):
            if v == s or v == t:
                continue
            for e in np.flatnonzero(heads == v):
                eq_r.append(row); eq_c.append(col(i, e)); eq_v.append(1.0)
            for e in np.flatnonzero(tails == v):
                eq_r.append(row); eq_c.append(col(i, e)); eq_v.append(-1.0)
            eq_names.append(f"cons_{i}_{instance.nodes[v]}")
            row += 1
    A_eq = sp.csr_matrix((eq_v, (eq_r, eq_c)), shape=(row, nv))
    b_eq = np.zeros(row)

    ub_r, ub_c, ub_v, ub_names = [], [], [], []
    row = 0
    for e in range(m):
        for i in range(k):
            ub_r.append(row); ub_c.append(col(i, e)); ub_v.append(dem[i])
        ub_names.append(f"cap_{e}")
        row += 1
    b_ub = list(caps)
    for i in range(k):
        for e in range(m):
            ub_r += [row, row]
            ub_c += [col(i, e), i]
            ub_v += [dem[i], -caps[e]]
            ub_names.append(f"strength_{i}_{e}")
            b_ub.append(0.0)
            row += 1
    A_ub = sp.csr_matrix((ub_v, (ub_r, ub_c)), shape=(row, nv))

    names = [f"f_{i}" for i in range(k)] + [f"f_{i}_{e}" for i in range(k) for e in range(m)]
    return LinearProgram(c, A_ub, np.asarray(b_ub, dtype=float), A_eq, b_eq, lower, upper,
                         names, ub_names, eq_names)


def export_lp(lp: LinearProgram, fh) -> None:
    """Line-oriented dump: ``VAR name lb ub obj``, ``ROW name rel rhs``, ``COEF row var value``."""
    fh.write("# maximize; one record per line\n")
    names = lp.var_names or [f"x{j}" for j in range(lp.num_vars)]
    for j, nm in enumerate(names):
        fh.write(f"VAR {nm} {lp.lower[j]!r} {lp.upper[j]!r} {lp.c[j]!r}\n")
    for A, b, rel, rnames, tag in ((lp.A_ub, lp.b_ub, "<=", lp.row_names_ub, "ub"),
                                    (lp.A_eq, lp.b_eq, "=", lp.row_names_eq, "eq")):
        A = A.tocsr()
        for r in range(A.shape[0]):
            rn = rnames[r] if rnames else f"{tag}{r}"
            fh.write(f"ROW {rn} {rel} {b[r]!r}\n")
            lo, hi = A.indptr[r], A.indptr[r + 1]
            for j, v in zip(A.indices[lo:hi], A.data[lo:hi]):
                fh.write(f"COEF {rn} {names[j]} {v!r}\n")


# ---------------------------------------------------------------- simplex

_FEAS = 1e-9
_OPT = 1e-9
_PIVOT = 1e-9
_REFACTOR = 50


class _Simplex:
    """Bounded-variable revised simplex on  min d@x, A x = b, lb <= x <= ub.

    Explicit basis inverse with product-form updates and periodic
    refactorization.  Dantzig pricing; switches to Bland's rule after a
    run of non-improving pivots.
    """

    def __init__(self, A, b, lb, ub, max_iter):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.rows, self.cols = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    def _refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        nb = self.x.copy()
        nb[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.A @ nb)

    def run(self, cost, basis, x):
        A, lb, ub = self.A, self.lb, self.ub
        self.basis = list(basis)
        self.x = x
        self._refactor()
        is_basic = np.zeros(self.cols, dtype=bool)
        is_basic[self.basis] = True
        stall_limit = 5 * (self.rows + self.cols)
        stall, bland = 0, False
        since = 0
        obj = cost @ self.x
        while True:
            if self.iterations >= self.max_iter:
                raise LPError("simplex iteration limit reached")
            if since >= _REFACTOR:
                self._refactor()
                since = 0
            y = cost[self.basis] @ self.Binv
            d = cost - y @ A
            at_upper = (~is_basic) & (self.x >= ub - _FEAS) & (ub > lb)
            at_lower = (~is_basic) & (self.x <= lb + _FEAS) & (ub > lb)
            free_mid = (~is_basic) & ~at_upper & ~at_lower & (ub > lb)
            score = np.zeros(self.cols)
            score[at_lower] = np.where(d[at_lower] < -_OPT, -d[at_lower], 0.0)
            score[at_upper] = np.maximum(score[at_upper], np.where(d[at_upper] > _OPT, d[at_upper], 0.0))
            score[free_mid] = np.where(np.abs(d[free_mid]) > _OPT, np.abs(d[free_mid]), 0.0)
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return
            j = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.Binv @ A[:, j]
            # x_B(t) = x_B - direction * t * alpha
            step = direction * alpha
            xb = self.x[self.basis]
            lbB = lb[self.basis]
            ubB = ub[self.basis]
            ratios = np.full(self.rows, np.inf)
            dec = step > _PIVOT
            inc = step < -_PIVOT
            ratios[dec] = (xb[dec] - lbB[dec]) / step[dec]
            ratios[inc] = (ubB[inc] - xb[inc]) / (-step[inc])
            ratios = np.maximum(ratios, 0.0)
            t_flip = (ub[j] - lb[j]) if np.isfinite(ub[j] - lb[j]) else np.inf
            if free_mid[j]:
                t_flip = (ub[j] - self.x[j]) if direction > 0 else (self.x[j] - lb[j])
            r = -1
            t = t_flip
            if self.rows:
                tmin = ratios.min()
                if tmin < t_flip:
                    t = tmin
                    ties = np.flatnonzero(ratios <= tmin + 1e-12)
                    if bland:
                        r = int(min(ties, key=lambda q: self.basis[q]))
                    else:
                        r = int(ties[np.argmax(np.abs(step[ties]))])
            if not np.isfinite(t):
                raise LPUnbounded("objective unbounded")
            self.x[j] += direction * t
            self.x[self.basis] = xb - t * step
            self.iterations += 1
            since += 1
            if r >= 0:
                leaving = self.basis[r]
                # snap the leaving variable onto the bound it reached
                self.x[leaving] = lb[leaving] if step[r] > 0 else ub[leaving]
                is_basic[leaving] = False
                is_basic[j] = True
                self.basis[r] = j
                piv = alpha[r]
                row_r = self.Binv[r] / piv
                self.Binv -= np.outer(alpha, row_r)
                self.Binv[r] = row_r
            new_obj = cost @ self.x
            if new_obj < obj - 1e-12 * max(1.0, abs(obj)):
                stall = 0
            else:
                stall += 1
                if stall >= stall_limit and not bland:
                    log.debug("simplex: switching to Bland's rule after %d stalled pivots", stall)
                    bland = True
            obj = new_obj


def _solve_bundled(lp: LinearProgram, max_iter: int) -> LPResult:
    A_ub = lp.A_ub.toarray()
    A_eq = lp.A_eq.toarray()
    n, mu, me = lp.num_vars, A_ub.shape[0], A_eq.shape[0]
    rows = mu + me
    # columns: original | slacks for <= rows | artificials
    A = np.zeros((rows, n + mu + rows))
    A[:mu, :n] = A_ub
    A[mu:, :n] = A_eq
    A[:mu, n:n + mu] = np.eye(mu)
    b = np.concatenate([lp.b_ub, lp.b_eq])
    lb = np.concatenate([lp.lower, np.zeros(mu), np.zeros(rows)])
    ub = np.concatenate([lp.upper, np.full(mu, np.inf), np.full(rows, np.inf)])
    if (lb > ub).any():
        raise LPInfeasible("inconsistent variable bounds")
    if not np.isfinite(lb[:n]).all():
        raise LPError("bundled simplex requires finite lower bounds")

    x = lb.copy()
    resid = b - A[:, :n + mu] @ x[:n + mu]
    art = n + mu + np.arange(rows)
    A[np.arange(rows), art] = np.where(resid >= 0, 1.0, -1.0)
    # slack crash: a satisfied <= row starts with its slack basic, its artificial pinned at 0
    slack_ok = np.zeros(rows, dtype=bool)
    slack_ok[:mu] = resid[:mu] >= 0
    x[n:n + mu] = np.where(slack_ok[:mu], resid[:mu], 0.0)
    x[art] = np.where(slack_ok, 0.0, np.abs(resid))
    ub[art[slack_ok]] = 0.0
    basis = [n + r if slack_ok[r] else int(art[r]) for r in range(rows)]

    S = _Simplex(A, b, lb, ub, max_iter)
    phase1 = np.zeros(A.shape[1])
    phase1[art] = 1.0
    S.run(phase1, basis, x)
    infeas = float(S.x[art].sum())
    if infeas > 1e-7 * max(1.0, float(np.abs(b).max()) if rows else 1.0):
        raise LPInfeasible(f"phase 1 ended with infeasibility {infeas:.3g}")
    # artificials are pinned at zero; basic ones may stay degenerate in the basis
    S.ub[art] = 0.0
    S.x[art] = 0.0
    phase2 = np.zeros(A.shape[1])
    phase2[:n] = -lp.c
    S.run(phase2, S.basis, S.x)
    xs = np.clip(S.x[:n], lp.lower, lp.upper)
    return LPResult(xs, float(lp.c @ xs), S.iterations, "bundled")


def _solve_highs(lp: LinearProgram) -> LPResult:
    from scipy.optimize import linprog

    res = linprog(
        -lp.c,
        A_ub=lp.A_ub if lp.A_ub.shape[0] else None,
        b_ub=lp.b_ub if lp.A_ub.shape[0] else None,
        A_eq=lp.A_eq if lp.A_eq.shape[0] else None,
        b_eq=lp.b_eq if lp.A_eq.shape[0] else None,
        bounds=np.column_stack([lp.lower, lp.upper]),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status == 2:
        raise LPInfeasible(res.message)
    if res.status == 3:
        raise LPUnbounded(res.message)
    if res.status != 0:
        raise LPError(res.message)
    x = np.clip(res.x, lp.lower, lp.upper)
    return LPResult(x, float(lp.c @ x), int(res.nit), "highs-ds")


# dense tableau cells beyond which the bundled solver is not attempted
BUNDLED_LIMIT = 4_000_000


def solve_lp(lp: LinearProgram, method: str = "auto", max_iter: int = 200_000) -> LPResult:
    """Optimal basic solution of ``lp``.

    ``method`` is ``"bundled"`` (the dense revised simplex above),
    ``"highs"`` (HiGHS dual simplex via scipy) or ``"auto"``, which uses the
    bundled solver whenever its dense working matrix stays small.
    """
    if lp.num_vars == 0:
        return LPResult(np.zeros(0), 0.0, 0, "trivial")
    if method == "auto":
        cells = lp.num_rows * (lp.num_vars + 2 * lp.num_rows)
        method = "bundled" if cells <= BUNDLED_LIMIT else "highs"
    if method == "bundled":
        return _solve_bundled(lp, max_iter)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------- dispatch

BACKENDS = ("simplex", "mwu", "pr")


@dataclass
class FractionalSolverConfig:
    backend: str = "simplex"
    gamma: float = 0.2
    max_iterations: int = 10_000
    skip_threshold: float = 0.5
    seed: int = 0
    est: float | None = None
    lp_method: str = "auto"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.backend != "simplex" and not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")


def compact_from_lp(instance: Instance, x: np.ndarray) -> FractionalSolution:
    k, m = instance.k, instance.m
    return FractionalSolution(instance, x[:k], x[k:].reshape(k, m)).cleaned()


def solve_fractional(instance: Instance, config: FractionalSolverConfig | None = None) -> FractionalSolution:
    """Fractional ANF solution in compact form from the configured backend."""
    from anf.model import packing_to_compact

    config = config or FractionalSolverConfig()
    if config.backend == "simplex":
        res = solve_lp(build_compact_lp(instance), method=config.lp_method)
        return compact_from_lp(instance, res.x)
    if config.backend == "mwu":
        from anf.mwu import MwuConfig, mwu_solve

        packing, _ = mwu_solve(instance, MwuConfig(config.gamma, config.max_iterations, config.skip_threshold))
        return packing_to_compact(packing)
    from anf.permutation import PrConfig, pr_estimate, pr_solve

    pc = PrConfig(gamma=config.gamma, seed=config.seed, est=config.est)
    packing = pr_solve(instance, pc) if config.est is not None else pr_estimate(instance, pc).solution
    return packing_to_compact(packing)
