"""Checks for the four restrictive conditions, with witnesses.

C2 (nonnegative rows), C3 (row sums at most one) and C4 (one operator type)
are syntactic.  C1 asks that every matrix in the convex hull of the strategy
matrices has powers tending to zero.  With nonnegative affine rows this is
exactly the feasibility of the linear system ``x >= 0, x >= Q x + 1`` for all
strategy matrices ``Q``.  For mixed signs the general question is coNP-hard,
so :func:`check_c1_general` answers ``unknown`` when its budgeted search
neither certifies nor refutes.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .core import (InstanceError, LemmSystem, format_fraction, strategies,
                   strategy_count, strategy_matrix)
from .lp import Infeasible, LpProblem, Optimal, lp_solve

DEFAULT_SAMPLE_BUDGET = 1000
DEFAULT_PRODUCT_DEPTH = 8
DEFAULT_VERTEX_BUDGET = 2 ** 16
# float screen threshold; anything flagged is re-checked exactly
SCREEN = 1 - 1e-7


class Status(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: Optional[dict] = None

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    def to_json(self) -> dict:
        out = {"verdict": self.status.value}
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        return out


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, ConvexCombination):
        return obj.to_json()
    return obj


@dataclass(frozen=True)
class ConvexCombination:
    """Nonnegative weights summing to one over strategies."""

    terms: tuple  # ((strategy, weight), ...)

    def __post_init__(self):
        terms = tuple((tuple(s), Fraction(w)) for s, w in self.terms)
        if not terms:
            raise InstanceError("empty convex combination")
        if any(w < 0 for _, w in terms):
            raise InstanceError("negative weight in convex combination")
        if sum(w for _, w in terms) != 1:
            raise InstanceError("convex combination weights do not sum to 1")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def vertex(cls, strategy) -> "ConvexCombination":
        return cls(((tuple(strategy), Fraction(1)),))

    @classmethod
    def from_row_mixture(cls, mixture) -> "ConvexCombination":
        """Decompose independent per-row distributions into few strategies.

        ``mixture[i]`` is a list of ``(choice, weight)`` pairs for choice row
        ``i`` summing to one.  The product of per-row hulls is the hull of the
        strategy set, so the staircase split over the merged cumulative
        breakpoints gives an exact decomposition.
        """
        bounds = []
        for row in mixture:
            acc, ends = Fraction(0), []
            for choice, w in row:
                if w:
                    acc += Fraction(w)
                    ends.append((acc, choice))
            if acc != 1:
                raise InstanceError("row weights do not sum to 1")
            bounds.append(ends)
        points = sorted({end for row in bounds for end, _ in row})
        terms, prev = [], Fraction(0)
        for pt in points:
            s = tuple(next(c for end, c in row if end > prev) for row in bounds)
            terms.append((s, pt - prev))
            prev = pt
        return cls(tuple(terms))

    def matrix(self, system: LemmSystem):
        n = system.n
        W = [[Fraction(0)] * n for _ in range(n)]
        for s, w in self.terms:
            for i, c in enumerate(s):
                W[i][c - 1] += w
        for k, q in enumerate(system.affine, start=system.m):
            W[k] = list(q)
        return W

    def to_json(self) -> list:
        return [{"strategy": list(s), "weight": format_fraction(w)} for s, w in self.terms]


@dataclass
class ConditionReport:
    c1: Optional[Verdict] = None
    c2: Optional[Verdict] = None
    c3: Optional[Verdict] = None
    c4: Optional[Verdict] = None

    def verdicts(self) -> dict:
        return {name: v for name, v in (("c1", self.c1), ("c2", self.c2),
                                        ("c3", self.c3), ("c4", self.c4)) if v is not None}

    def to_json(self) -> dict:
        return {name: v.to_json() for name, v in self.verdicts().items()}

    @property
    def any_unknown(self) -> bool:
        return any(v.status is Status.UNKNOWN for v in self.verdicts().values())


# -- syntactic conditions --------------------------------------------------------

def check_c2(system: LemmSystem) -> Verdict:
    for k, q in enumerate(system.affine, start=system.m + 1):
        for j, v in enumerate(q, start=1):
            if v < 0:
                return Verdict(Status.FAILS, {"row": k, "column": j, "value": v})
        if system.offsets[k - 1] < 0:
            return Verdict(Status.FAILS, {"row": k, "offset": system.offsets[k - 1]})
    return Verdict(Status.HOLDS)


def check_c3(system: LemmSystem) -> Verdict:
    for k, q in enumerate(system.affine, start=system.m + 1):
        total = sum(q, Fraction(0)) + system.offsets[k - 1]
        if total > 1:
            return Verdict(Status.FAILS, {"row": k, "sum": total})
    return Verdict(Status.HOLDS)


def check_c4(system: LemmSystem) -> Verdict:
    if system.n1 == 0 or system.n2 == 0:
        return Verdict(Status.HOLDS)
    return Verdict(Status.FAILS, {"n1": system.n1, "n2": system.n2})


def has_nonneg_rows(system: LemmSystem) -> bool:
    return all(v >= 0 for q in system.affine for v in q)


# -- C1, nonnegative rows ------------------------------------------------------

def halting_lp(system: LemmSystem) -> LpProblem:
    """``min sum x`` s.t. ``x_i >= x_l + 1`` (l in J(i)), ``x_k >= q_k x + 1``, ``x >= 0``."""
    n = system.n
    p = LpProblem([Fraction(1)] * n, nonneg=[True] * n)
    for i, js in enumerate(system.choices):
        for l in js:
            row = [Fraction(0)] * n
            row[i] += 1
            row[l - 1] -= 1
            p.add(row, ">=", 1)
    for k, q in enumerate(system.affine, start=system.m):
        row = [-v for v in q]
        row[k] += 1
        p.add(row, ">=", 1)
    return p


def dominates(system: LemmSystem, x: Sequence[Fraction], strategy) -> bool:
    """``x >= Q x + 1`` for the strategy matrix of ``strategy``."""
    Q = strategy_matrix(system, strategy)
    return all(a >= b + 1 for a, b in zip(x, linalg.mat_vec(Q, x)))


def unstable_vertex_nonneg(system: LemmSystem) -> tuple:
    """A strategy whose (nonnegative) matrix has spectral radius >= 1.

    Strategy improvement on ``x = (I - Q)^-1 1``: each round switches every
    choice row to a maximising successor.  The values strictly increase, so
    no strategy repeats.  Must only be called when the halting LP is
    infeasible.
    """
    s = tuple(js[0] for js in system.choices)
    ones = [Fraction(1)] * system.n
    seen = set()
    while True:
        if s in seen:
            raise AssertionError("strategy improvement cycled")
        seen.add(s)
        res = linalg.solve_linear(strategy_matrix(system, s), ones)
        if not isinstance(res, linalg.Unique) or any(v < 0 for v in res.x):
            return s
        x = res.x
        new = []
        for cur, js in zip(s, system.choices):
            best = max(x[l - 1] for l in js)
            new.append(cur if x[cur - 1] == best else next(l for l in js if x[l - 1] == best))
        new = tuple(new)
        if new == s:
            raise AssertionError("halting LP infeasible but no improving switch exists")
        s = new


def check_c1_nonneg(system: LemmSystem) -> Verdict:
    """Decide C1 exactly for systems whose affine rows are nonnegative."""
    if not has_nonneg_rows(system):
        raise InstanceError("check_c1_nonneg: affine rows must be nonnegative")
    res = lp_solve(halting_lp(system))
    if isinstance(res, Optimal):
        return Verdict(Status.HOLDS, {"method": "nonneg-lp", "x": list(res.x)})
    assert isinstance(res, Infeasible)
    s = unstable_vertex_nonneg(system)
    return Verdict(Status.FAILS, {
        "method": "nonneg-lp",
        "farkas": list(res.certificate),
        "combination": ConvexCombination.vertex(s),
        "rho_at_least": Fraction(1),
    })


def absolute_system(system: LemmSystem) -> LemmSystem:
    return LemmSystem(system.n1, system.n2, system.n, system.choices,
                      tuple(tuple(abs(v) for v in q) for q in system.affine),
                      system.offsets)


# -- C1, general -----------------------------------------------------------------

def certify_unstable(system: LemmSystem, combo: ConvexCombination) -> bool:
    """Exact check that the combination's matrix has spectral radius >= 1."""
    return not linalg.spectral_radius_below(combo.matrix(system), 1)


class _FloatBuilder:
    def __init__(self, system: LemmSystem):
        self.system = system
        base = np.zeros((system.n, system.n))
        for k, q in enumerate(system.affine, start=system.m):
            base[k] = [float(v) for v in q]
        self.base = base

    def mixture(self, rows) -> np.ndarray:
        A = self.base.copy()
        for i, row in enumerate(rows):
            for c, w in row:
                A[i, c - 1] += float(w)
        return A

    def vertex(self, s) -> np.ndarray:
        A = self.base.copy()
        for i, c in enumerate(s):
            A[i, c - 1] = 1.0
        return A


def _rho(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def _fails(combo, source, **extra) -> Verdict:
    witness = {"combination": combo, "source": source, "rho_at_least": Fraction(1)}
    witness.update(extra)
    return Verdict(Status.FAILS, witness)


def _dyadic_split(rng: random.Random, k: int, bits: int = 4) -> list[Fraction]:
    # k positive dyadic weights summing to one
    total = 2 ** bits
    cuts = sorted(rng.sample(range(1, total), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    return [Fraction(p, total) for p in parts]


def check_c1_general(system: LemmSystem, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                     product_depth: int = DEFAULT_PRODUCT_DEPTH, seed: int = 0,
                     vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> Verdict:
    """Sound, budgeted C1 check for arbitrary coefficients.

    ``holds`` comes from the halting LP, either on the system itself (all
    rows nonnegative) or on its entrywise absolute value, which dominates
    every matrix of the hull.  ``fails`` always carries a convex combination
    whose spectral radius is certified exactly to be at least one; it is
    searched among vertices (lexicographic order), random row mixtures with
    dyadic weights, and mixtures of strategies whose products look unstable.
    """
    if has_nonneg_rows(system):
        return check_c1_nonneg(system)
    majorant = lp_solve(halting_lp(absolute_system(system)))
    if isinstance(majorant, Optimal):
        return Verdict(Status.HOLDS, {"method": "abs-majorant-lp", "x": list(majorant.x)})

    fb = _FloatBuilder(system)
    total = strategy_count(system)
    checked = 0
    for s in strategies(system):
        if checked >= vertex_budget:
            break
        checked += 1
        if _rho(fb.vertex(s)) >= SCREEN:
            combo = ConvexCombination.vertex(s)
            if certify_unstable(system, combo):
                return _fails(combo, "vertex")

    rng = random.Random(seed)
    choice_rows = [i for i, js in enumerate(system.choices) if len(js) > 1]
    samples = 0
    if choice_rows:
        for _ in range(sample_budget):
            samples += 1
            mixture = []
            for i, js in enumerate(system.choices):
                if len(js) > 1 and rng.random() < 0.5:
                    k = min(len(js), rng.choice((2, 2, 3)))
                    picks = sorted(rng.sample(js, k))
                    mixture.append(list(zip(picks, _dyadic_split(rng, k))))
                else:
                    mixture.append([(rng.choice(js), Fraction(1))])
            if _rho(fb.mixture(mixture)) >= SCREEN:
                combo = ConvexCombination.from_row_mixture(mixture)
                if certify_unstable(system, combo):
                    return _fails(combo, "sample")

    products = 0
    if choice_rows and product_depth >= 2:
        all_choices = system.choices
        for _ in range(max(1, sample_budget // 4)):
            depth = rng.randint(2, product_depth)
            seq = [tuple(rng.choice(js) for js in all_choices) for _ in range(depth)]
            products += 1
            P = np.eye(system.n)
            for s in seq:
                P = fb.vertex(s) @ P
            if _rho(P) ** (1.0 / depth) < SCREEN:
                continue
            # the product only nominates; the witness must be a hull member
            distinct = sorted(set(seq))
            weights = _uniformish(len(distinct))
            mixture = [_row_weights(i, distinct, weights) for i in range(system.m)]
            combo = ConvexCombination.from_row_mixture(mixture)
            if _rho(fb.mixture(mixture)) >= SCREEN and certify_unstable(system, combo):
                return _fails(combo, "product")

    return Verdict(Status.UNKNOWN, {
        "vertices_checked": checked,
        "vertices_total": total,
        "samples": samples,
        "products": products,
    })


def _uniformish(k: int, bits: int = 10) -> list[Fraction]:
    # dyadic weights close to 1/k summing to one
    total = 2 ** bits
    base = [total // k] * k
    base[-1] += total - sum(base)
    return [Fraction(b, total) for b in base]


def _row_weights(i, strats, weights):
    acc: dict = {}
    for s, w in zip(strats, weights):
        acc[s[i]] = acc.get(s[i], Fraction(0)) + w
    return sorted(acc.items())


def check_conditions(system: LemmSystem, conditions=("c1", "c2", "c3", "c4"),
                     sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                     product_depth: int = DEFAULT_PRODUCT_DEPTH,
                     seed: int = 0) -> ConditionReport:
    report = ConditionReport()
    wanted = set(conditions)
    unknown = wanted - {"c1", "c2", "c3", "c4"}
    if unknown:
        raise InstanceError(f"unknown condition(s): {', '.join(sorted(unknown))}")
    if "c1" in wanted:
        report.c1 = check_c1_general(system, sample_budget, product_depth, seed)
    if "c2" in wanted:
        report.c2 = check_c2(system)
    if "c3" in wanted:
        report.c3 = check_c3(system)
    if "c4" in wanted:
        report.c4 = check_c4(system)
    return report
