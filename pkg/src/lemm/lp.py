"""Exact rational two-phase simplex with Bland's anti-cycling rule.

Every result carries a certificate that is re-checked before it is returned:
optimal points are checked for feasibility, infeasibility comes with a Farkas
vector and unboundedness with a recession ray.

Farkas convention: multipliers ``y`` over the constraints with ``y >= 0`` on
``>=`` rows, ``y <= 0`` on ``<=`` rows and free on ``=`` rows, such that
``sum_c y_c a_c`` is ``<= 0`` on nonnegative variables, ``= 0`` on free
variables, and ``sum_c y_c rhs_c > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import InstanceError, to_fraction

LE, GE, EQ = "<=", ">=", "=="
_RELATIONS = {"<=": LE, ">=": GE, "=": EQ, "==": EQ}


@dataclass
class LpProblem:
    """``minimize``/``maximize`` ``objective . x`` subject to ``constraints``.

    Each constraint is ``(row, relation, rhs)`` with relation one of
    ``"<="``, ``">="``, ``"=="``.  ``nonneg[j]`` marks ``x_j >= 0``; variables
    are free otherwise (default: all free).
    """

    objective: list
    constraints: list = field(default_factory=list)
    sense: str = "min"
    nonneg: Optional[list] = None

    def __post_init__(self):
        n = len(self.objective)
        self.objective = [to_fraction(c) for c in self.objective]
        if self.sense not in ("min", "max"):
            raise InstanceError(f"unknown sense {self.sense!r}")
        if self.nonneg is None:
            self.nonneg = [False] * n
        if len(self.nonneg) != n:
            raise InstanceError("nonneg flags have the wrong length")
        cons = []
        for row, rel, rhs in self.constraints:
            if len(row) != n:
                raise InstanceError("constraint row has the wrong length")
            if rel not in _RELATIONS:
                raise InstanceError(f"unknown relation {rel!r}")
            cons.append(([to_fraction(v) for v in row], _RELATIONS[rel], to_fraction(rhs)))
        self.constraints = cons

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, row, rel, rhs) -> None:
        if rel not in _RELATIONS:
            raise InstanceError(f"unknown relation {rel!r}")
        self.constraints.append(([to_fraction(v) for v in row], _RELATIONS[rel], to_fraction(rhs)))

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        if any(flag and v < 0 for flag, v in zip(self.nonneg, x)):
            return False
        for row, rel, rhs in self.constraints:
            lhs = _dot(row, x)
            if (rel == LE and lhs > rhs) or (rel == GE and lhs < rhs) or (rel == EQ and lhs != rhs):
                return False
        return True

    def value(self, x: Sequence[Fraction]) -> Fraction:
        return _dot(self.objective, x)


@dataclass(frozen=True)
class Optimal:
    x: tuple
    value: Fraction


@dataclass(frozen=True)
class Infeasible:
    certificate: tuple


@dataclass(frozen=True)
class Unbounded:
    ray: tuple
    point: tuple


def _dot(a, b) -> Fraction:
    return sum((u * v for u, v in zip(a, b) if u and v), Fraction(0))


def check_farkas(p: LpProblem, y: Sequence[Fraction]) -> bool:
    if len(y) != len(p.constraints):
        return False
    for yc, (_, rel, _) in zip(y, p.constraints):
        if (rel == GE and yc < 0) or (rel == LE and yc > 0):
            return False
    combo = [Fraction(0)] * p.num_vars
    for yc, (row, _, _) in zip(y, p.constraints):
        if yc:
            for j, a in enumerate(row):
                if a:
                    combo[j] += yc * a
    for j, v in enumerate(combo):
        if (p.nonneg[j] and v > 0) or (not p.nonneg[j] and v != 0):
            return False
    return _dot(y, [rhs for _, _, rhs in p.constraints]) > 0


def check_ray(p: LpProblem, d: Sequence[Fraction]) -> bool:
    if any(flag and v < 0 for flag, v in zip(p.nonneg, d)):
        return False
    for row, rel, _ in p.constraints:
        s = _dot(row, d)
        if (rel == LE and s > 0) or (rel == GE and s < 0) or (rel == EQ and s != 0):
            return False
    gain = _dot(p.objective, d)
    return gain < 0 if p.sense == "min" else gain > 0


class _Tableau:
    """Dense tableau; rows are lists with the right-hand side last."""

    def __init__(self, rows, basis, objectives):
        self.rows = rows
        self.basis = basis
        self.obj = objectives  # reduced-cost rows, rhs entry holds -value

    def pivot(self, r, c):
        row = self.rows[r]
        piv = row[c]
        if piv != 1:
            inv = 1 / piv
            for j, v in enumerate(row):
                if v:
                    row[j] = v * inv
        nz = [(j, v) for j, v in enumerate(row) if v]
        for i, other in enumerate(self.rows):
            if i != r:
                f = other[c]
                if f:
                    for j, v in nz:
                        other[j] -= f * v
        for other in self.obj:
            f = other[c]
            if f:
                for j, v in nz:
                    other[j] -= f * v
        self.basis[r] = c

    def run(self, obj_index, allowed):
        """Bland's rule simplex on objective ``obj_index``; returns unbounded column or None."""
        obj = self.obj[obj_index]
        while True:
            enter = next((j for j in allowed if obj[j] < 0), None)
            if enter is None:
                return None
            best, leave = None, None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if (best is None or ratio < best
                            or (ratio == best and self.basis[i] < self.basis[leave])):
                        best, leave = ratio, i
            if leave is None:
                return enter
            self.pivot(leave, enter)


def lp_solve(p: LpProblem):
    """Solve ``p`` exactly; returns Optimal, Infeasible or Unbounded."""
    nvars = p.num_vars
    # structural columns: (original var, sign)
    cols = []
    for j in range(nvars):
        cols.append((j, 1))
        if not p.nonneg[j]:
            cols.append((j, -1))
    nstruct = len(cols)
    m = len(p.constraints)
    nslack = sum(1 for _, rel, _ in p.constraints if rel != EQ)
    signs, needs_art = [], []
    for row, rel, rhs in p.constraints:
        s = -1 if rhs < 0 else 1
        signs.append(s)
        needs_art.append(not (rel == LE and s == 1) and not (rel == GE and s == -1))
    nart = sum(needs_art)
    width = nstruct + nslack + nart
    rows, basis, init_col, init_cost = [], [], [], []
    slack_at, art_at = nstruct, nstruct + nslack
    for ci, (row, rel, rhs) in enumerate(p.constraints):
        s = signs[ci]
        t = [Fraction(0)] * (width + 1)
        for k, (j, sign) in enumerate(cols):
            if row[j]:
                t[k] = s * sign * row[j]
        slack_col = None
        if rel != EQ:
            slack_col = slack_at
            t[slack_col] = Fraction(s if rel == LE else -s)
            slack_at += 1
        if needs_art[ci]:
            t[art_at] = Fraction(1)
            basis.append(art_at)
            init_col.append(art_at)
            init_cost.append(Fraction(1))
            art_at += 1
        else:
            basis.append(slack_col)
            init_col.append(slack_col)
            init_cost.append(Fraction(0))
        t[width] = s * rhs
        rows.append(t)

    # phase-1 objective: sum of artificials, priced out
    phase1 = [Fraction(0)] * (width + 1)
    for k in range(nstruct + nslack, width):
        phase1[k] = Fraction(1)
    for i, row in enumerate(rows):
        if basis[i] >= nstruct + nslack:
            for j, v in enumerate(row):
                if v:
                    phase1[j] -= v
    sense = 1 if p.sense == "min" else -1
    phase2 = [Fraction(0)] * (width + 1)
    for k, (j, sign) in enumerate(cols):
        phase2[k] = sense * sign * p.objective[j]
    for i, row in enumerate(rows):
        cb = phase2[basis[i]]
        if cb:
            for j, v in enumerate(row):
                if v:
                    phase2[j] -= cb * v
    tab = _Tableau(rows, basis, [phase1, phase2])
    real = list(range(nstruct + nslack))

    if nart:
        tab.run(0, list(range(width)))
        if -phase1[width] > 0:
            y = []
            for i in range(m):
                yi = init_cost[i] - phase1[init_col[i]]
                y.append(signs[i] * yi)
            y = tuple(y)
            if not check_farkas(p, y):
                raise AssertionError("Farkas certificate failed validation")
            return Infeasible(y)
        # drive zero-level artificials out of the basis where possible
        for i in range(m):
            if tab.basis[i] >= nstruct + nslack:
                c = next((j for j in real if tab.rows[i][j] != 0), None)
                if c is not None:
                    tab.pivot(i, c)

    enter = tab.run(1, real)

    def primal(values_by_col):
        x = [Fraction(0)] * nvars
        for k, (j, sign) in enumerate(cols):
            v = values_by_col.get(k)
            if v:
                x[j] += sign * v
        return x

    point = primal({tab.basis[i]: tab.rows[i][width] for i in range(m)})
    if not p.is_feasible(point):
        raise AssertionError("simplex produced an infeasible point")
    if enter is not None:
        d = {enter: Fraction(1)}
        for i in range(m):
            a = tab.rows[i][enter]
            if a:
                d[tab.basis[i]] = d.get(tab.basis[i], Fraction(0)) - a
        ray = tuple(primal(d))
        if not check_ray(p, ray):
            raise AssertionError("unbounded ray failed validation")
        return Unbounded(ray, tuple(point))
    return Optimal(tuple(point), p.value(point))
