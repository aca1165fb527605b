#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试分支定界。
"""

import itertools
import math
import os
import sys
import unittest
from unittest.mock import patch

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.core.solvers import LpModel, MilpParams, branch_and_bound, solve_milp
from src.app.utils.constants import MilpStatus, ObjectiveSense, Relation


def knapsack_model() -> LpModel:
    """max 5a + 4b + 3c，三个资源约束，0/1 变量。最优 a=b=1，目标 9。"""
    model = LpModel(ObjectiveSense.MAXIMIZE, name="knapsack")
    cols = [model.add_variable(0.0, 1.0, cost=c, integer=True, name=n)
            for c, n in ((5.0, "a"), (4.0, "b"), (3.0, "c"))]
    for coefs, rhs in (((2.0, 3.0, 1.0), 5.0), ((4.0, 1.0, 2.0), 11.0), ((3.0, 4.0, 2.0), 8.0)):
        model.add_constraint(dict(zip(cols, coefs)), Relation.LE, rhs)
    return model


class TestSolveMilp(unittest.TestCase):

    def test_knapsack_optimum(self):
        result = solve_milp(knapsack_model())
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 9.0)
        np.testing.assert_allclose(result.x, [1.0, 1.0, 0.0])
        self.assertGreaterEqual(result.best_bound, result.objective - 1e-9)

    def test_general_integer_minimization(self):
        """测试: min x + y, 2x + 2y ≥ 3, x,y ∈ {0..5} 的最优值为 2，LP 界为 1.5。"""
        model = LpModel()
        x = model.add_variable(0.0, 5.0, cost=1.0, integer=True)
        y = model.add_variable(0.0, 5.0, cost=1.0, integer=True)
        model.add_constraint({x: 2.0, y: 2.0}, Relation.GE, 3.0)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 2.0)
        self.assertTrue(np.all(np.abs(result.x - np.round(result.x)) < 1e-9))

    def test_mixed_continuous_part(self):
        """测试: 连续变量不参与分支。"""
        model = LpModel()
        x = model.add_variable(0.0, 1.0, cost=10.0, integer=True)
        z = model.add_variable(0.0, 4.0, cost=1.0)
        model.add_constraint({x: 4.0, z: 1.0}, Relation.GE, 2.5)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 2.5)
        self.assertAlmostEqual(result.x[1], 2.5)

    def test_infeasible(self):
        model = LpModel()
        x = model.add_variable(0.0, 1.0, integer=True)
        model.add_constraint({x: 2.0}, Relation.EQ, 1.0)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.INFEASIBLE)
        self.assertFalse(result.has_solution)
        self.assertTrue(math.isinf(result.best_bound))

    def test_node_limit_stops_search(self):
        result = solve_milp(knapsack_model(), MilpParams(node_limit=1))
        self.assertIn(result.status, (MilpStatus.FEASIBLE, MilpStatus.UNKNOWN))
        self.assertEqual(result.nodes, 1)
        if result.has_solution:
            self.assertLessEqual(result.objective, result.best_bound + 1e-9)

    def test_integer_variable_needs_finite_bounds(self):
        model = LpModel()
        model.add_variable(0.0, math.inf, integer=True)
        with self.assertRaises(ValueError):
            solve_milp(model)

    def test_params_from_dict_ignores_unknown_keys(self):
        params = MilpParams.from_dict({'time_limit': 5.0, 'gap_tol': 1e-4, 'extra': 1})
        self.assertEqual(params.time_limit, 5.0)
        self.assertEqual(params.gap_tol, 1e-4)
        self.assertIsNone(params.node_limit)


class TestBranching(unittest.TestCase):

    def test_priority_column_is_branched_first(self):
        x = np.array([0.5, 0.2, 0.4])
        integer = np.array([True, True, True])
        self.assertEqual(branch_and_bound._most_fractional(x, integer, np.zeros(3, dtype=int), 1e-6), 0)
        self.assertEqual(
            branch_and_bound._most_fractional(x, integer, np.array([0, 1, 1]), 1e-6), 2)
        # 高优先级列已取整时回到低优先级列
        x = np.array([0.5, 1.0, 0.0])
        self.assertEqual(
            branch_and_bound._most_fractional(x, integer, np.array([0, 1, 1]), 1e-6), 0)

    def test_priority_is_recorded_on_model(self):
        model = LpModel()
        model.add_variable(0.0, 1.0, integer=True)
        model.add_variable(0.0, 1.0, integer=True, priority=3)
        self.assertEqual(model.priority, [0, 3])
        self.assertEqual(model.copy().priority, [0, 3])

    def test_priority_does_not_change_optimum(self):
        """测试: 给容量列更高的分支优先级，最优值不变。"""
        model = LpModel(ObjectiveSense.MAXIMIZE)
        cols = [model.add_variable(0.0, 1.0, cost=c, integer=True, priority=p)
                for c, p in ((5.0, 0), (4.0, 2), (3.0, 1))]
        for coefs, rhs in (((2.0, 3.0, 1.0), 5.0), ((4.0, 1.0, 2.0), 11.0), ((3.0, 4.0, 2.0), 8.0)):
            model.add_constraint(dict(zip(cols, coefs)), Relation.LE, rhs)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 9.0)

    def test_children_are_warm_started(self):
        """测试: 根节点冷启动，子节点 LP 收到父节点的基。"""
        seen = []
        original = branch_and_bound.solve_lp

        def record(model, params=None, warm_start=None, bounds=None):
            seen.append(warm_start)
            return original(model, params, warm_start=warm_start, bounds=bounds)

        with patch.object(branch_and_bound, 'solve_lp', side_effect=record):
            result = solve_milp(knapsack_model())
        self.assertAlmostEqual(result.objective, 9.0)
        self.assertGreater(len(seen), 1)
        self.assertIsNone(seen[0])
        self.assertTrue(any(basis is not None for basis in seen[1:]))


class TestRejectedIncumbent(unittest.TestCase):
    """取整后复核失败的节点不能被静默丢弃。"""

    @staticmethod
    def nearly_integral_model(rhs: float) -> LpModel:
        model = LpModel(name="near")
        x = model.add_variable(0.0, 5.0, cost=1.0, integer=True, name="x")
        model.add_constraint({x: 1.0}, Relation.GE, rhs, name="floor")
        return model

    def test_rejected_point_is_branched(self):
        """测试: LP 顶点 x = 1.0000005 在整数容差内，复核被拒后仍在 x 上分支并找到 2。"""
        original = branch_and_bound._accept_incumbent
        calls = []

        def reject_first(*args):
            calls.append(args[1].copy())
            return None if len(calls) == 1 else original(*args)

        with patch.object(branch_and_bound, '_accept_incumbent', side_effect=reject_first):
            result = solve_milp(self.nearly_integral_model(1.0000005))
        self.assertAlmostEqual(calls[0][0], 1.0000005)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 2.0)
        self.assertEqual(result.nodes, 3)

    def test_unbranchable_node_is_not_claimed_infeasible(self):
        """测试: 整数取值本身被拒绝且无列可分支时，结果为 UNKNOWN 而非 INFEASIBLE。"""
        with patch.object(branch_and_bound, '_accept_incumbent', return_value=None):
            with self.assertLogs(branch_and_bound.logger, level='WARNING') as logs:
                result = solve_milp(self.nearly_integral_model(1.0))
        self.assertIs(result.status, MilpStatus.UNKNOWN)
        self.assertFalse(result.has_solution)
        self.assertAlmostEqual(result.best_bound, 1.0)
        self.assertTrue(any('搜索不再完整' in line for line in logs.output))


class TestAgainstEnumeration(unittest.TestCase):

    def test_random_binary_programs(self):
        """测试: 随机 0/1 规划上分支定界与 2^n 穷举的结论一致。"""
        rng = np.random.default_rng(17)
        for trial in range(20):
            n, m = int(rng.integers(3, 9)), int(rng.integers(1, 4))
            c = rng.integers(-5, 10, size=n).astype(float)
            A = rng.integers(-2, 7, size=(m, n)).astype(float)
            b = rng.uniform(0.0, 2.0 * n, size=m)
            need = float(rng.uniform(0.0, 1.5 * n))
            model = LpModel(ObjectiveSense.MAXIMIZE)
            for j in range(n):
                model.add_variable(0.0, 1.0, cost=float(c[j]), integer=True)
            for i in range(m):
                model.add_constraint({j: A[i, j] for j in range(n)}, Relation.LE, float(b[i]))
            model.add_constraint({j: 1.0 for j in range(n)}, Relation.GE, need)

            best = -math.inf
            for bits in itertools.product((0.0, 1.0), repeat=n):
                v = np.array(bits)
                if np.all(A @ v <= b + 1e-9) and v.sum() >= need - 1e-9:
                    best = max(best, float(c @ v))
            result = solve_milp(model)
            with self.subTest(trial=trial, n=n):
                if math.isinf(best):
                    self.assertIs(result.status, MilpStatus.INFEASIBLE)
                else:
                    self.assertIs(result.status, MilpStatus.OPTIMAL)
                    self.assertAlmostEqual(result.objective, best, places=6)
                    self.assertLessEqual(model.row_violations(result.x).max(), 1e-6)


if __name__ == '__main__':
    unittest.main()
