import json
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lemm.conditions import (ConvexCombination, Status, check_c1_general,
                             check_c1_nonneg, check_c2, check_c3, check_c4,
                             check_conditions, dominates)
from lemm.core import (InstanceError, LemmSystem, strategies, strategy_count,
                       strategy_matrix)
from lemm.linalg import mat_vec, spectral_radius_below, spectral_radius_estimate
from lemm.reductions import (CnfFormula, normalize_sum_to_1, partition_to_lemm,
                             sat_to_condition_instance)

from helpers import all_vertices_stable_nonneg, example, random_system


def single(q, b=0):
    return LemmSystem.from_rows(0, 0, [], [[q]], [b])


def assert_valid_failure(system, verdict):
    assert verdict.fails
    combo = verdict.witness["combination"]
    assert isinstance(combo, ConvexCombination)
    assert all(w >= 0 for _, w in combo.terms) and sum(w for _, w in combo.terms) == 1
    for s, _ in combo.terms:
        assert len(s) == system.m and all(c in js for c, js in zip(s, system.choices))
    W = combo.matrix(system)
    assert not spectral_radius_below(W, 1)
    _, hi = spectral_radius_estimate(W)
    assert hi >= 1
    assert np.max(np.abs(np.linalg.eigvals(np.array(W, dtype=float)))) > 1 - 1e-6


class TestSyntactic:
    def test_c2(self):
        assert check_c2(partition_to_lemm([1, 2, 3])).holds
        v = check_c2(example(1))
        assert v.fails and v.witness["row"] == 2
        assert check_c2(single(0)).holds

    def test_c3(self):
        assert check_c3(normalize_sum_to_1(example(1))).holds
        assert check_c3(LemmSystem.from_rows(0, 0, [], [[2, 0], [0, 0]], [0, 0])).fails
        assert check_c3(single(0, 1)).holds

    def test_c4(self):
        assert check_c4(example(1)).holds
        assert check_c4(example(2)).fails
        assert check_c4(single(0)).holds

    def test_report_json(self):
        report = check_conditions(example(2))
        doc = report.to_json()
        assert set(doc) == {"c1", "c2", "c3", "c4"}
        assert doc["c4"]["verdict"] == "fails"
        json.dumps(doc)

    def test_unknown_condition_name(self):
        with pytest.raises(InstanceError):
            check_conditions(example(1), ["c5"])


class TestC1Nonneg:
    def test_half(self):
        v = check_c1_nonneg(single(F(1, 2), 3))
        assert v.holds and v.witness["x"] == [2]

    def test_self_loop(self):
        v = check_c1_nonneg(single(1, 3))
        assert v.fails
        assert_valid_failure(single(1, 3), v)

    def test_partition_instance(self):
        s = partition_to_lemm([1, 2])
        v = check_c1_nonneg(s)
        assert_valid_failure(s, v)

    def test_negative_rejected(self):
        with pytest.raises(InstanceError):
            check_c1_nonneg(example(1))

    @settings(max_examples=120, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_against_vertex_charpoly(self, seed):
        rng = random.Random(seed)
        s = random_system(rng, n_max=5, nonneg=True)
        v = check_c1_nonneg(s)
        assert v.holds == all_vertices_stable_nonneg(s)
        if v.holds:
            x = v.witness["x"]
            assert all(t >= 0 for t in x)
            assert all(dominates(s, x, strat) for strat in strategies(s))
            # the same x dominates convex combinations of vertex matrices
            for _ in range(20):
                mixture = []
                for js in s.choices:
                    ws = [F(rng.randint(0, 8)) for _ in js]
                    if not any(ws):
                        ws[0] = F(1)
                    total = sum(ws)
                    mixture.append([(c, w / total) for c, w in zip(js, ws)])
                W = ConvexCombination.from_row_mixture(mixture).matrix(s)
                assert all(a >= b + 1 for a, b in zip(x, mat_vec(W, x)))
        else:
            assert_valid_failure(s, v)


class TestConvexCombination:
    def test_validation(self):
        with pytest.raises(InstanceError):
            ConvexCombination((((1,), F(1, 2)),))
        with pytest.raises(InstanceError):
            ConvexCombination((((1,), F(3, 2)), ((2,), F(-1, 2))))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_row_mixture_decomposition_is_exact(self, seed):
        rng = random.Random(seed)
        s = random_system(rng, n_max=6)
        mixture = []
        for js in s.choices:
            ws = [F(rng.randint(1, 5), 8) for _ in js]
            total = sum(ws)
            mixture.append([(c, w / total) for c, w in zip(js, ws)])
        combo = ConvexCombination.from_row_mixture(mixture)
        W = combo.matrix(s)
        for i, row in enumerate(mixture):
            expected = [F(0)] * s.n
            for c, w in row:
                expected[c - 1] += w
            assert W[i] == expected
        # a staircase needs at most (sum of row sizes) terms
        assert len(combo.terms) <= sum(len(js) for js in s.choices)


class TestC1General:
    def test_example2_not_fails(self):
        v = check_c1_general(example(2))
        assert not v.fails

    def test_example1_holds(self):
        v = check_c1_general(example(1))
        assert v.holds and v.witness["method"] == "abs-majorant-lp"

    def test_identity_row_fails_at_vertex(self):
        s = LemmSystem.from_rows(0, 1, [(2, 3)], [[0, 1, 0], [0, -1, F(1, 2)]], [0, 0])
        v = check_c1_general(s)
        assert v.fails and v.witness["source"] == "vertex"
        assert_valid_failure(s, v)

    def test_sat_single_literal(self):
        s = sat_to_condition_instance(CnfFormula.from_ints(1, [[1]]))
        v = check_c1_general(s)
        assert_valid_failure(s, v)

    def test_sat_contradiction(self):
        s = sat_to_condition_instance(CnfFormula.from_ints(1, [[1], [-1]]))
        assert not check_c1_general(s).fails

    def test_deterministic(self):
        s = sat_to_condition_instance(CnfFormula.from_ints(3, [[1, -2], [2, 3], [-1, -3]]))
        a = check_c1_general(s, seed=5).to_json()
        b = check_c1_general(s, seed=5).to_json()
        assert a == b

    def test_unknown_reports_effort(self):
        v = check_c1_general(example(3), sample_budget=10, product_depth=2)
        if v.status is Status.UNKNOWN:
            assert v.witness["vertices_total"] == strategy_count(example(3))
            assert v.witness["samples"] == 10

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10 ** 9))
    def test_soundness(self, seed):
        rng = random.Random(seed)
        s = random_system(rng, n_max=5)
        v = check_c1_general(s, sample_budget=50, product_depth=4, seed=seed)
        if v.fails:
            assert_valid_failure(s, v)
        elif v.holds:
            # holds means every vertex is stable, in particular
            for strat in strategies(s):
                assert spectral_radius_below(strategy_matrix(s, strat), 1)
