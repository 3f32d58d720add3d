"""Shared instances, random generators and independent oracles for the tests."""

import itertools
import random
from fractions import Fraction
from pathlib import Path

import sympy

from lemm.core import LemmSystem, load_system, strategies, strategy_matrix

DATA = Path(__file__).parent / "data"
F = Fraction


def example(k: int) -> LemmSystem:
    return load_system(DATA / f"example{k}.json")


def example1_raised() -> LemmSystem:
    # the same system with b3 raised from 1/5 to 1/4
    return example(1).with_offsets([0, 1, F(1, 4)])


def random_system(rng: random.Random, n_max=6, n_choice_max=3, nonneg=False,
                  one_type=False, denominators=(1, 2, 4, 5), no_self=True) -> LemmSystem:
    while True:
        n = rng.randint(2, n_max)
        m = rng.randint(1, n - 1)
        if one_type:
            n1, n2 = (m, 0) if rng.random() < 0.5 else (0, m)
        else:
            n1 = rng.randint(0, m)
            n2 = m - n1
        choices = []
        for i in range(1, m + 1):
            pool = [j for j in range(1, n + 1) if not (no_self and j == i)]
            k = rng.randint(1, min(n_choice_max, len(pool)))
            choices.append(tuple(rng.sample(pool, k)))
        rows, b = [], []
        for _ in range(n - m):
            row = []
            for _ in range(n):
                if rng.random() < 0.5:
                    row.append(F(0))
                else:
                    d = rng.choice(denominators)
                    lo = 0 if nonneg else -2 * d
                    row.append(F(rng.randint(lo, d), d * rng.randint(1, n)))
            rows.append(row)
            b.append(F(rng.randint(0 if nonneg else -4, 4), rng.choice(denominators)))
        return LemmSystem.from_rows(n1, n2, choices, rows, b)


# -- oracles ---------------------------------------------------------------------------

def sympy_charpoly(Q):
    lam = sympy.Symbol("lam")
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in Q]) \
        .charpoly(lam).as_poly()


def nonneg_rho_below_one(Q) -> bool:
    """Perron: for a nonnegative matrix, rho >= 1 iff the characteristic
    polynomial has a real root in [1, max row sum]."""
    bound = max([sum(row) for row in Q] + [F(1)])
    poly = sympy_charpoly(Q)
    return poly.count_roots(1, sympy.Rational(bound.numerator, bound.denominator) + 1) == 0


def all_vertices_stable_nonneg(system) -> bool:
    return all(nonneg_rho_below_one(strategy_matrix(system, s)) for s in strategies(system))


def subset_sum_partitionable(a) -> bool:
    total = sum(a)
    return any(2 * sum(c) == total
               for r in range(len(a) + 1) for c in itertools.combinations(a, r))


def brute_force_sat(formula) -> bool:
    return any(formula.satisfied_by(bits)
               for bits in itertools.product((False, True), repeat=formula.num_vars))


def brute_solutions(system, beta=None, i=None):
    """Independent oracle: every strategy's affine system solved with sympy,
    kept when the chosen successors are extremal.  Only valid when each
    strategy system is nonsingular."""
    out = set()
    n = system.n
    for s in strategies(system):
        Q = strategy_matrix(system, s)
        A = sympy.eye(n) - sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in Q])
        if A.det() == 0:
            raise ValueError("singular strategy system")
        x = A.LUsolve(sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in system.offsets]))
        x = tuple(F(int(v.p), int(v.q)) for v in x)
        ok = True
        for r, js in enumerate(system.choices):
            vals = [x[j - 1] for j in js]
            target = min(vals) if r < system.n1 else max(vals)
            ok &= x[r] == target
        if ok:
            out.add(x)
    return out


def random_halting(rng: random.Random, n_max=8, n_choice_max=3, one_type=True, nonneg=True,
                   **kw) -> LemmSystem:
    """Random instance on which the nonnegative halting LP is feasible."""
    from lemm.conditions import check_c1_general, check_c1_nonneg

    while True:
        s = random_system(rng, n_max=n_max, n_choice_max=n_choice_max, nonneg=nonneg,
                          one_type=one_type, **kw)
        verdict = check_c1_nonneg(s) if nonneg else check_c1_general(s, sample_budget=0)
        if verdict.holds:
            return s
