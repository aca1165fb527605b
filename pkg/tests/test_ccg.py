#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试列池、受限主问题与两阶段列生成。
"""

import math
import os
import sys
import unittest
from dataclasses import replace

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.core.ccg import (CcgParams, ColumnPool, MasterProblem, build_master_lp,
                              initialize_columns, run_ccg, solve_stage2)
from src.app.core.formulations import build_milp, evaluate_objective, relax
from src.app.core.formulations.var_index import T_KC, Y
from src.app.core.patterns import pattern_from_solution
from src.app.core.solvers import MilpParams, solve_lp, solve_milp
from src.app.core.validation import validate_solution
from src.app.utils.constants import CcgStatus, LpStatus, MilpStatus
from src.app.utils.exceptions import NumericalFailure
from tests.fixtures import (CHAIN_OBJECTIVE, chain_instance, chain_solution, diamond_instance,
                            overloaded_instance, tiny_generated_instance)


def twin_chain_instance(link_capacity: float = 8.0):
    """链式实例复制出第二个业务；容量 8 时两业务各自可行、合起来不可行。"""
    inst = chain_instance(link_capacity=link_capacity)
    svc = inst.services[0]
    return replace(inst, services=(svc, replace(svc, name='s1')), name='twin')


class TestColumnPool(unittest.TestCase):

    def test_duplicates_are_ignored(self):
        inst = chain_instance()
        pool = ColumnPool(1)
        first = pattern_from_solution(inst, chain_solution(inst), 0)
        again = pattern_from_solution(inst, chain_solution(inst, split=True), 0)
        self.assertEqual(pool.add(first), 0)
        self.assertEqual(pool.add(again), -1)
        self.assertEqual(len(pool), 1)
        self.assertEqual(pool.counts(), {0: 1})
        self.assertIn(first.key, pool.keys(0))
        self.assertEqual([(k, c) for k, c, _ in pool], [(0, 0)])

    def test_initial_columns_one_per_service(self):
        pool = initialize_columns(diamond_instance())
        self.assertEqual(pool.counts(), {0: 1, 1: 1})


class TestMasterProblem(unittest.TestCase):

    def setUp(self):
        self.inst = diamond_instance()
        self.pool = initialize_columns(self.inst)

    def test_master_shape(self):
        """测试: 行数为 K + |V|K + |V| + |L| + |V|，列为 y 与各模式。"""
        model, vi = build_master_lp(self.pool, self.inst)
        self.assertEqual(model.num_constraints, 2 + 4 + 2 + 5 + 2)
        self.assertEqual(len(vi.columns(Y)), 2)
        self.assertEqual(len(vi.columns(T_KC)), 2)
        self.assertFalse(model.has_integers)

    def test_dual_signs(self):
        master = MasterProblem(self.inst, self.pool)
        outcome = master.solve()
        self.assertIs(outcome.status, LpStatus.OPTIMAL)
        duals = master.dual_prices(outcome)
        self.assertFalse(duals.is_ray)
        self.assertLessEqual(duals.sign_violation(), 1e-9)
        self.assertEqual(set(duals.alpha), {0, 1})

    def test_stage2_on_initial_pool(self):
        solution = solve_stage2(self.pool, self.inst)
        report = validate_solution(self.inst, solution)
        self.assertTrue(report.passed, report.failures())
        self.assertGreaterEqual(report.objective, 1.01 - 1e-9)

    def test_infeasible_master_needs_a_ray(self):
        """测试: 主问题不可行却没有射线(变量界冲突)时不能当作对偶价格使用。"""
        master = MasterProblem(self.inst, self.pool)
        outcome = master.solve()
        broken = replace(outcome, status=LpStatus.INFEASIBLE, farkas=None, bound_conflict=(0,))
        with self.assertRaises(NumericalFailure):
            master.dual_prices(broken)


class TestRunCcg(unittest.TestCase):

    def test_chain_is_solved(self):
        result = run_ccg(chain_instance())
        self.assertIs(result.status, CcgStatus.SOLVED)
        self.assertAlmostEqual(result.master_value, CHAIN_OBJECTIVE, places=9)
        self.assertAlmostEqual(result.stage2_objective, CHAIN_OBJECTIVE, places=9)
        self.assertEqual(result.total_columns, 1)
        self.assertGreaterEqual(result.iterations, 1)

    def test_without_acceleration(self):
        result = run_ccg(chain_instance(), CcgParams(lp_acceleration=False))
        self.assertIs(result.status, CcgStatus.SOLVED)
        self.assertAlmostEqual(result.stage2_objective, CHAIN_OBJECTIVE, places=9)
        self.assertGreaterEqual(result.milp_pricing_solves, 1)
        self.assertEqual(result.lp_recovered, 0)

    def test_bounds_are_sandwiched(self):
        """测试: ν(LP-I) ≤ 主问题值 ≤ ν(MILP) ≤ 第二阶段目标值。"""
        for inst in (diamond_instance(), diamond_instance(link_capacity=6.0)):
            with self.subTest(instance=inst.name, capacity=inst.links[0].capacity):
                model, _ = build_milp(inst)
                lp1 = solve_lp(relax(model)).objective
                milp = solve_milp(model)
                self.assertIs(milp.status, MilpStatus.OPTIMAL)
                result = run_ccg(inst)
                self.assertIs(result.status, CcgStatus.SOLVED)
                self.assertLessEqual(lp1, result.master_value + 1e-6)
                self.assertLessEqual(result.master_value, milp.objective + 1e-6)
                self.assertLessEqual(milp.objective, result.stage2_objective + 1e-6)
                self.assertTrue(validate_solution(inst, result.solution).passed)
                self.assertAlmostEqual(evaluate_objective(inst, result.solution),
                                       result.stage2_objective)

    def test_infeasible_service_found_at_initialization(self):
        result = run_ccg(overloaded_instance())
        self.assertIs(result.status, CcgStatus.INFEASIBLE)
        self.assertEqual(result.infeasible_service, 0)
        self.assertIsNone(result.solution)

    def test_joint_infeasibility_through_rays(self):
        """测试: 两个业务单独可行但合起来超出链路容量，由 Farkas 射线判定不可行。"""
        inst = twin_chain_instance()
        self.assertIs(solve_milp(build_milp(inst)[0]).status, MilpStatus.INFEASIBLE)
        result = run_ccg(inst)
        self.assertIs(result.status, CcgStatus.INFEASIBLE)
        self.assertIsNone(result.infeasible_service)
        self.assertTrue(result.iteration_trace[-1]['ray'])

    def test_stage1_only(self):
        result = run_ccg(chain_instance(), stage2=False)
        self.assertIs(result.status, CcgStatus.SOLVED)
        self.assertIsNone(result.solution)
        self.assertTrue(math.isnan(result.stage2_objective))
        self.assertAlmostEqual(result.master_value, CHAIN_OBJECTIVE, places=9)

    def test_iteration_limit(self):
        result = run_ccg(twin_chain_instance(link_capacity=20.0), CcgParams(iter_max=1))
        self.assertIn(result.status, (CcgStatus.ITER_LIMIT, CcgStatus.SOLVED))
        self.assertEqual(result.iterations, 1)

    def test_summary_and_traces(self):
        result = run_ccg(diamond_instance())
        summary = result.summary()
        self.assertEqual(summary['status'], 'solved')
        self.assertEqual(summary['columns'], result.total_columns)
        self.assertAlmostEqual(summary['mean_columns'], result.total_columns / 2)
        self.assertEqual(len(result.iteration_trace), result.iterations)
        self.assertEqual(len(result.pricing_trace), 2 * result.iterations)
        self.assertEqual({row['service'] for row in result.pricing_trace}, {0, 1})


class TestCcgOnGeneratedInstances(unittest.TestCase):
    """随机小实例上的界、解质量与 LP 加速效果。"""

    SEEDS = range(5)

    @classmethod
    def setUpClass(cls):
        cls.instances = [tiny_generated_instance(seed) for seed in cls.SEEDS]
        cls.exact = [solve_milp(build_milp(inst)[0], MilpParams(time_limit=60.0))
                     for inst in cls.instances]
        cls.accelerated = [run_ccg(inst, CcgParams(lp_acceleration=True)) for inst in cls.instances]

    def test_bounds_and_quality(self):
        """测试: ν(LP-I) ≤ 主问题值 ≤ ν(MILP) ≤ 第二阶段目标，且多数实例的目标在最优值 5% 以内。"""
        compared = within = 0
        for inst, milp, result in zip(self.instances, self.exact, self.accelerated):
            with self.subTest(instance=inst.name):
                if result.status is CcgStatus.INFEASIBLE:
                    self.assertIn(milp.status, (MilpStatus.INFEASIBLE, MilpStatus.UNKNOWN))
                    continue
                if milp.status is MilpStatus.INFEASIBLE:
                    self.assertIsNone(result.solution)
                    continue
                if milp.status is not MilpStatus.OPTIMAL or result.status is not CcgStatus.SOLVED:
                    continue
                lp1 = solve_lp(relax(build_milp(inst)[0])).objective
                self.assertLessEqual(lp1, result.master_value + 1e-6)
                self.assertLessEqual(result.master_value, milp.objective + 1e-6)
                self.assertLessEqual(milp.objective, result.stage2_objective + 1e-6)
                self.assertTrue(validate_solution(inst, result.solution).passed,
                                validate_solution(inst, result.solution).failures())
                compared += 1
                if result.stage2_objective <= 1.05 * milp.objective + 1e-9:
                    within += 1
        self.assertGreater(compared, 0)
        self.assertGreaterEqual(within, 0.8 * compared)

    def test_acceleration_saves_milp_pricing(self):
        """测试: 开启 LP 加速时定价 MILP 的总求解次数不多于关闭时，两者的解都通过校验。"""
        with_lp = without_lp = 0
        for inst, fast in zip(self.instances, self.accelerated):
            slow = run_ccg(inst, CcgParams(lp_acceleration=False))
            with self.subTest(instance=inst.name):
                self.assertIs(fast.status is CcgStatus.INFEASIBLE,
                              slow.status is CcgStatus.INFEASIBLE)
                if fast.status is CcgStatus.SOLVED and slow.status is CcgStatus.SOLVED:
                    same = abs(fast.stage2_objective - slow.stage2_objective) <= 1e-6
                    both_valid = (validate_solution(inst, fast.solution).passed
                                  and validate_solution(inst, slow.solution).passed)
                    self.assertTrue(same or both_valid)
                self.assertEqual(slow.lp_recovered, 0)
            with_lp += fast.milp_pricing_solves
            without_lp += slow.milp_pricing_solves
        self.assertLessEqual(with_lp, without_lp)


if __name__ == '__main__':
    unittest.main()
