import random
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from lemm import linalg
from lemm.core import InstanceError, strategy_matrix
from lemm.linalg import (Decay, Singular, Unique, charpoly, determinant,
                         inverse_nonneg, mat_vec, matrix_power_decays,
                         schur_stable, solve_linear, spectral_radius_below,
                         spectral_radius_estimate)

from helpers import example, nonneg_rho_below_one, sympy_charpoly


def rand_matrix(rng, n, lo=-3, hi=3, den=4, density=0.7):
    return [[F(rng.randint(lo, hi), rng.randint(1, den)) if rng.random() < density else F(0)
             for _ in range(n)] for _ in range(n)]


def np_rho(Q):
    # repeated eigenvalues lose accuracy in floating point, hence the loose tolerances
    return float(np.max(np.abs(np.linalg.eigvals(np.array(Q, dtype=float)))))


def to_sympy(A):
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in A])


class TestSolveLinear:
    def test_geometric(self):
        assert solve_linear([[F(1, 2)]], [1]) == Unique((F(2),))

    def test_example3(self):
        s = example(3)
        res = solve_linear(strategy_matrix(s, (2,)), list(s.offsets))
        assert res == Unique((F(-26, 3), F(-26, 3), F(-6), F(-44, 3)))
        res = solve_linear(strategy_matrix(s, (3,)), list(s.offsets))
        assert res == Unique((F(-114, 7), F(-162, 7), F(-114, 7), F(-236, 7)))

    def test_singular_consistent(self):
        res = solve_linear([[F(1)]], [0])
        assert isinstance(res, Singular)
        assert res.particular == (0,)
        assert [list(k) for k in res.kernel] == [[1]]

    def test_singular_inconsistent(self):
        res = solve_linear([[F(1)]], [1])
        assert isinstance(res, Singular) and res.particular is None

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_against_sympy(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 6)
        Q = rand_matrix(rng, n)
        if rng.random() < 0.3:
            # make the last row of I - Q equal the first to hit the singular path
            if n > 1:
                Q[-1] = [a + (i == n - 1) - (i == 0) for i, a in enumerate(Q[0])]
            else:
                Q = [[F(1)]]
        b = [F(rng.randint(-3, 3)) for _ in range(n)]
        A = sympy.eye(n) - to_sympy(Q)
        res = solve_linear(Q, b)
        IQ = linalg.i_minus(Q)
        if A.det() != 0:
            assert isinstance(res, Unique)
            expected = A.LUsolve(sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in b]))
            assert [F(int(v.p), int(v.q)) for v in expected] == list(res.x)
        else:
            assert isinstance(res, Singular)
            assert len(res.kernel) == n - A.rank()
            for k in res.kernel:
                assert not any(mat_vec(IQ, k))
            consistent = A.rank() == A.row_join(
                sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in b])).rank()
            assert (res.particular is not None) == consistent
            if res.particular is not None:
                assert mat_vec(IQ, res.particular) == b

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_determinant_and_charpoly(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 6)
        Q = rand_matrix(rng, n)
        assert determinant(Q) == F(str(to_sympy(Q).det()))
        ours = charpoly(Q)
        theirs = sympy_charpoly(Q).all_coeffs()[::-1]
        assert ours == [F(str(c)) for c in theirs]


class TestInverseNonneg:
    def test_scalar(self):
        assert inverse_nonneg([[F(1, 2)]]) == [[2]]

    def test_zero(self):
        assert inverse_nonneg([[F(0)] * 3 for _ in range(3)]) == linalg.identity(3)

    def test_two_by_two(self):
        inv = inverse_nonneg([[0, F(1, 2)], [F(1, 2), 0]])
        assert inv == [[F(4, 3), F(2, 3)], [F(2, 3), F(4, 3)]]
        # cross-check columns with solve_linear
        Q = [[0, F(1, 2)], [F(1, 2), 0]]
        for j, e in enumerate(([1, 0], [0, 1])):
            assert list(solve_linear(Q, e).x) == [row[j] for row in inv]

    def test_singular_and_unstable(self):
        assert inverse_nonneg([[F(1)]]) is None
        assert inverse_nonneg([[F(2)]]) is None

    def test_negative_input(self):
        with pytest.raises(InstanceError):
            inverse_nonneg([[F(-1)]])

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_nonneg_closure_and_partial_sums(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 5)
        Q = [[F(rng.randint(0, 3), 4 * n) if rng.random() < 0.7 else F(0) for _ in range(n)]
             for _ in range(n)]
        if matrix_power_decays(Q) is not Decay.HOLDS:
            return
        inv = inverse_nonneg(Q)
        assert inv is not None and all(v >= 0 for r in inv for v in r)
        # partial sums I + Q + ... + Q^m increase entrywise towards the inverse
        Qf = np.array(Q, dtype=float)
        S = np.eye(n)
        P = np.eye(n)
        prev = S.copy()
        for _ in range(64):
            P = P @ Qf
            S = S + P
            assert np.all(S >= prev - 1e-12)
            assert np.all(S <= np.array(inv, dtype=float) + 1e-9)
            prev = S.copy()


class TestSpectral:
    def test_scalar_interval(self):
        lo, hi = spectral_radius_estimate([[F(1, 2)]])
        assert lo <= F(1, 2) <= hi and hi - lo <= F(1, 2 ** 30)

    def test_permutation(self):
        lo, hi = spectral_radius_estimate([[0, 1], [1, 0]])
        assert lo <= 1 <= hi

    def test_iterations_checked(self):
        with pytest.raises(InstanceError):
            spectral_radius_estimate([[1]], iterations=0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_nonneg_interval_contains_root(self, seed):
        rng = random.Random(seed)
        Q = rand_matrix(rng, 4, lo=0, hi=3)
        lo, hi = spectral_radius_estimate(Q)
        assert hi - lo <= F(1, 2 ** 30)
        # oracle: the Perron root is the largest real root of the charpoly
        poly = sympy_charpoly(Q)
        roots = [r for r in sympy.real_roots(poly)]
        rho = max([sympy.Rational(0)] + roots)
        rl = sympy.Rational(lo.numerator, lo.denominator)
        rh = sympy.Rational(hi.numerator, hi.denominator)
        assert bool(rl <= rho) and bool(rho <= rh)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_general_interval_contains_rho(self, seed):
        rng = random.Random(seed)
        Q = rand_matrix(rng, rng.randint(1, 4))
        lo, hi = spectral_radius_estimate(Q)
        rho = np_rho(Q)
        assert float(lo) - 1e-6 <= rho <= float(hi) + 1e-6

    def test_schur_stable(self):
        assert schur_stable([F(-1, 4), 0, 1])       # z^2 - 1/4
        assert not schur_stable([-1, 0, 1])         # z^2 - 1
        assert not schur_stable([F(1, 2), F(-9, 4), 1])  # (z - 2)(z - 1/4)
        assert schur_stable([5])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_below_one_matches_numeric_roots(self, seed):
        rng = random.Random(seed)
        Q = rand_matrix(rng, rng.randint(1, 4))
        rho = np_rho(Q)
        if abs(rho - 1) < 1e-6:
            return
        assert spectral_radius_below(Q, 1) == (rho < 1)


class TestDecay:
    @pytest.mark.parametrize("Q, expected", [
        ([[F(1, 2)]], Decay.HOLDS),
        ([[F(1)]], Decay.FAILS),
        ([[0, F(3, 4)], [F(3, 4), 0]], Decay.HOLDS),
        ([[0, F(-3, 4)], [F(3, 4), 0]], Decay.HOLDS),
        ([[0, -1], [1, 0]], Decay.FAILS),
    ])
    def test_examples(self, Q, expected):
        assert matrix_power_decays(Q) is expected

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_nonneg_matches_charpoly(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 5)
        Q = rand_matrix(rng, n, lo=0, hi=3, den=2 * n)
        assert (matrix_power_decays(Q) is Decay.HOLDS) == nonneg_rho_below_one(Q)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_witness_implies_power_decay(self, seed):
        # x >= Qx + 1 with x >= 0 forces Q^m 1 -> 0
        rng = random.Random(seed)
        n = rng.randint(1, 5)
        Q = rand_matrix(rng, n, lo=0, hi=2, den=3 * n)
        res = solve_linear(Q, [1] * n)
        if not (isinstance(res, Unique) and all(v >= 0 for v in res.x)):
            return
        x = res.x
        assert all(a >= b + 1 for a, b in zip(x, mat_vec(Q, x)))
        # in the x-weighted max norm each step contracts by 1 - 1/max(x)
        w = np.array([float(t) for t in x])
        rate = 1 - 1 / w.max()
        v = np.ones(n)
        A = np.array(Q, dtype=float)
        norm = np.max(v / w)
        for _ in range(64):
            v = A @ v
            nxt = np.max(v / w)
            assert nxt <= norm * rate + 1e-12
            norm = nxt
        assert np.max(v) <= w.max() * rate ** 64 + 1e-12
