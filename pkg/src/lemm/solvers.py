"""Solvers and the threshold decision problem.

Every exact solution returned here has been re-checked with
:func:`lemm.core.verify_certificate`.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .conditions import (ConditionReport, Status, check_c1_general,
                         check_c1_nonneg, check_c2, check_c4, has_nonneg_rows)
from .core import (DecisionQuery, InstanceError, LemmSystem, Solution,
                   strategies, strategy_count, strategy_matrix,
                   verify_certificate)
from .lp import Infeasible, LpProblem, Optimal, Unbounded, lp_solve

DEFAULT_BUDGET = 2 ** 20


class BudgetExceeded(RuntimeError):
    """The strategy count exceeds the enumeration budget."""


class PreconditionError(InstanceError):
    """A solver was called on an instance outside its conditions."""


def default_budget() -> int:
    env = os.environ.get("LEMM_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InstanceError(f"LEMM_BUDGET is not an integer: {env!r}") from None
    return DEFAULT_BUDGET


@dataclass(frozen=True)
class SolveOutcome:
    """``status`` is ``"unique"``, ``"none"`` or ``"multiple"``.

    ``multiple`` lists the distinct solutions found; ``infinite`` is set when
    some strategy admits a whole segment of solutions.
    """

    status: str
    solutions: tuple = ()
    strategy: Optional[tuple] = None
    infinite: bool = False

    @property
    def solution(self) -> Optional[Solution]:
        return self.solutions[0] if self.status == "unique" else None


@dataclass(frozen=True)
class ApproxSolution:
    values: tuple
    error_bound: float
    iterations: int
    converged: bool
    weights: tuple


@dataclass(frozen=True)
class Decision:
    answer: str  # "yes" | "no" | "unknown"
    witness: Optional[tuple] = None
    reason: str = ""
    budget_exceeded: bool = False


def _budget(budget):
    return default_budget() if budget is None else budget


# -- fixed strategies ------------------------------------------------------------

def solve_fixed_strategy(system: LemmSystem, strategy: Sequence[int]):
    """Solve the affine system obtained by fixing every choice."""
    return linalg.solve_linear(strategy_matrix(system, strategy), list(system.offsets))


def consistency_rows(system: LemmSystem, strategy) -> list:
    """Rows ``a`` with ``a . x <= 0`` saying each chosen successor is extremal."""
    n = system.n
    rows = []
    for i, (c, js) in enumerate(zip(strategy, system.choices)):
        sign = 1 if i < system.n1 else -1
        for l in js:
            if l == c:
                continue
            row = [Fraction(0)] * n
            row[c - 1] += sign
            row[l - 1] -= sign
            rows.append(row)
    return rows


@dataclass
class _Piece:
    """Solutions of the LEMM that are consistent with one strategy.

    Either a single point or ``{p + K t : A t <= c}``.
    """

    point: Optional[tuple] = None
    particular: Optional[tuple] = None
    kernel: tuple = ()
    lp_rows: list = field(default_factory=list)

    def to_x(self, t) -> tuple:
        x = list(self.particular)
        for tj, kj in zip(t, self.kernel):
            if tj:
                for r, v in enumerate(kj):
                    if v:
                        x[r] += tj * v
        return tuple(x)

    def lp(self, objective, sense="min") -> LpProblem:
        p = LpProblem(list(objective), sense=sense, nonneg=[False] * len(self.kernel))
        for row, rhs in self.lp_rows:
            p.add(row, "<=", rhs)
        return p


def _piece(system: LemmSystem, strategy) -> Optional[_Piece]:
    res = solve_fixed_strategy(system, strategy)
    if isinstance(res, linalg.Unique):
        if verify_certificate(system, res.x):
            return _Piece(point=res.x)
        return None
    if res.particular is None:
        return None
    p, K = res.particular, res.kernel
    piece = _Piece(particular=p, kernel=K)
    for a in consistency_rows(system, strategy):
        coeffs = [sum((u * v for u, v in zip(a, k) if u and v), Fraction(0)) for k in K]
        rhs = -sum((u * v for u, v in zip(a, p) if u and v), Fraction(0))
        if not any(coeffs):
            if rhs < 0:
                return None
            continue
        piece.lp_rows.append((coeffs, rhs))
    return piece


def _piece_points(piece: _Piece):
    """A feasible point of the piece and whether it is the only one (None if empty)."""
    if piece.point is not None:
        return piece.point, True
    d = len(piece.kernel)
    res = lp_solve(piece.lp([0] * d))
    if isinstance(res, Infeasible):
        return None
    t0 = res.x if isinstance(res, Optimal) else res.point
    single = True
    for j in range(d):
        obj = [0] * d
        obj[j] = 1
        lo = lp_solve(piece.lp(obj))
        hi = lp_solve(piece.lp(obj, sense="max"))
        if not (isinstance(lo, Optimal) and isinstance(hi, Optimal) and lo.value == hi.value):
            single = False
            break
    return piece.to_x(t0), single


def _map(fn, items, jobs: int):
    # ordered results; batches keep early exits cheap
    if jobs <= 1:
        yield from map(fn, items)
        return
    items = iter(items)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        while True:
            batch = list(itertools.islice(items, 16 * jobs))
            if not batch:
                return
            yield from pool.map(fn, batch)


def solve_enumerate(system: LemmSystem, budget: Optional[int] = None,
                    early_exit: bool = False, jobs: int = 1) -> SolveOutcome:
    """Find every solution by trying all strategies in lexicographic order.

    With ``early_exit`` the search stops at the first verified solution,
    which is only sound when the solution is known to be unique (C1).
    """
    budget = _budget(budget)
    if strategy_count(system) > budget:
        raise BudgetExceeded(
            f"{strategy_count(system)} strategies exceed the budget of {budget}")
    found: list = []
    seen = set()
    first_strategy = None
    infinite = False

    def work(s):
        piece = _piece(system, s)
        return s, (None if piece is None else _piece_points(piece))

    for s, result in _map(work, strategies(system), jobs):
        if result is None:
            continue
        x, single = result
        if not verify_certificate(system, x):
            raise AssertionError(f"strategy {s} produced an infeasible point")
        if not single:
            infinite = True
        if x not in seen:
            seen.add(x)
            found.append(Solution(tuple(x), verified=True))
            if first_strategy is None:
                first_strategy = tuple(s)
        if early_exit:
            break
    if not found:
        return SolveOutcome("none")
    if len(found) == 1 and not infinite:
        return SolveOutcome("unique", tuple(found), first_strategy)
    return SolveOutcome("multiple", tuple(found), first_strategy, infinite)


# -- one operator type, nonnegative, halting --------------------------------------

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise PreconditionError(message)


def solve_lp_one_type(system: LemmSystem, check: bool = True) -> Solution:
    """Solve a halting, nonnegative, one-operator-type instance by one LP.

    Max-only: minimise ``sum x`` over ``x_i >= x_l`` and ``x_k >= q_k x + b_k``.
    Min-only: the mirrored maximisation with ``<=``.
    """
    if check:
        _require(check_c2(system).holds, "solve_lp_one_type needs nonnegative rows (C2)")
        _require(check_c4(system).holds, "solve_lp_one_type needs one operator type (C4)")
        _require(check_c1_nonneg(system).holds, "solve_lp_one_type needs the halting condition (C1)")
    n = system.n
    maximize = system.n1 > 0
    rel = "<=" if maximize else ">="
    p = LpProblem([Fraction(1)] * n, sense="max" if maximize else "min", nonneg=[False] * n)
    for i, js in enumerate(system.choices):
        for l in js:
            row = [Fraction(0)] * n
            row[i] += 1
            row[l - 1] -= 1
            p.add(row, rel, 0)
    for k, q in enumerate(system.affine, start=system.m):
        row = [-v for v in q]
        row[k] += 1
        p.add(row, rel, system.offsets[k])
    res = lp_solve(p)
    if isinstance(res, Unbounded):
        raise PreconditionError("one-type LP is unbounded; the halting condition fails")
    if isinstance(res, Infeasible):
        raise PreconditionError("one-type LP is infeasible")
    if not verify_certificate(system, res.x):
        raise AssertionError("one-type LP optimum is not a solution")
    return Solution(tuple(res.x), verified=True)


# -- value iteration ----------------------------------------------------------------

def solve_value_iteration(system: LemmSystem, max_iters: int = 1_000_000,
                          epsilon: float = 1e-9, witness=None) -> ApproxSolution:
    """Iterate ``x <- F(x)`` from zero with a certified stopping rule.

    The halting-LP witness ``w`` (``w >= Q w + 1`` for every strategy matrix)
    makes ``F`` a contraction with factor ``1 - 1/max(w)`` in the norm
    ``max |v_i| / w_i``; the returned bound is in that norm and includes a
    conservative allowance for floating-point rounding.
    """
    _require(check_c2(system).holds, "value iteration needs nonnegative rows (C2)")
    if witness is None:
        verdict = check_c1_nonneg(system)
        _require(verdict.holds, "value iteration needs the halting condition (C1)")
        witness = verdict.witness["x"]
    w = [float(v) for v in witness]
    n, n1, m = system.n, system.n1, system.m
    if n == 0:
        return ApproxSolution((), 0.0, 0, True, ())
    gamma = 1.0 - 1.0 / max(w)
    choices = [[l - 1 for l in js] for js in system.choices]
    rows = [[(j, float(v)) for j, v in enumerate(q) if v] for q in system.affine]
    b = [float(v) for v in system.offsets]
    row_abs = max([sum(abs(v) for _, v in r) for r in rows] + [1.0])
    x = [0.0] * n
    bound = math.inf
    for it in range(1, max_iters + 1):
        new = [0.0] * n
        for i, js in enumerate(choices):
            vals = [x[l] for l in js]
            new[i] = min(vals) if i < n1 else max(vals)
        for k, r in enumerate(rows, start=m):
            new[k] = sum(v * x[j] for j, v in r) + b[k]
        delta = max(abs(a - c) / wi for a, c, wi in zip(new, x, w))
        x = new
        scale = max(abs(v) for v in x) * row_abs + max(abs(v) for v in b)
        rounding = 4 * (n + 2) * 2.0 ** -52 * scale / (1 - gamma)
        bound = gamma / (1 - gamma) * delta + rounding
        if bound <= epsilon:
            return ApproxSolution(tuple(x), bound, it, True, tuple(w))
    return ApproxSolution(tuple(x), bound, max_iters, False, tuple(w))


# -- the decision problem -------------------------------------------------------------

def solve_auto(system: LemmSystem, budget: Optional[int] = None, jobs: int = 1,
               c1=None) -> SolveOutcome:
    """Route by the condition profile: LP, early-exit enumeration, or full enumeration."""
    c1 = check_c1_general(system) if c1 is None else c1
    if c1.holds and has_nonneg_rows(system) and check_c2(system).holds and check_c4(system).holds:
        sol = solve_lp_one_type(system, check=False)
        return SolveOutcome("unique", (sol,), None)
    return solve_enumerate(system, budget, early_exit=c1.holds, jobs=jobs)


def decide(system: LemmSystem, query: DecisionQuery, profile: Optional[ConditionReport] = None,
           budget: Optional[int] = None, jobs: int = 1) -> Decision:
    """Is there a feasible ``x`` with ``x[query.index] < query.threshold``?"""
    query.check(system)
    i, beta = query.index - 1, query.threshold
    c1 = profile.c1 if profile is not None and profile.c1 is not None else None
    if c1 is None:
        c1 = check_c1_general(system)
    budget = _budget(budget)
    if c1.holds:
        try:
            outcome = solve_auto(system, budget, jobs, c1)
        except BudgetExceeded as exc:
            return Decision("unknown", None, str(exc), budget_exceeded=True)
        if outcome.status != "unique":
            raise AssertionError("halting instance without a unique solution")
        x = outcome.solution.values
        return Decision("yes", x) if x[i] < beta else Decision("no", None, "unique solution")
    if strategy_count(system) > budget:
        return Decision("unknown", None,
                        f"{strategy_count(system)} strategies exceed the budget of {budget}",
                        budget_exceeded=True)

    def work(s):
        return _strategy_infimum(system, s, i, beta)

    for hit in _map(work, strategies(system), jobs):
        if hit is not None:
            return Decision("yes", hit)
    return Decision("no", None, "no strategy reaches the threshold")


def _strategy_infimum(system: LemmSystem, strategy, i: int, beta: Fraction):
    """A solution consistent with ``strategy`` with ``x_i < beta``, if any."""
    piece = _piece(system, strategy)
    if piece is None:
        return None
    if piece.point is not None:
        return piece.point if piece.point[i] < beta else None
    d = len(piece.kernel)
    slope = [k[i] for k in piece.kernel]
    res = lp_solve(piece.lp(slope))
    if isinstance(res, Infeasible):
        return None
    if isinstance(res, Optimal):
        x = piece.to_x(res.x)
        return x if x[i] < beta else None
    # unbounded below: walk along the ray until x_i < beta
    x0 = piece.to_x(res.point)
    rate = sum((s * r for s, r in zip(slope, res.ray)), Fraction(0))
    assert rate < 0
    lam = max(Fraction(0), (x0[i] - beta) / -rate + 1)
    t = [a + lam * r for a, r in zip(res.point, res.ray)]
    x = piece.to_x(t)
    assert x[i] < beta and verify_certificate(system, x)
    return x
