#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试各模型的构造、求解与解向量映射。
"""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.core.formulations import (SliceSolution, build_lp2, build_milp,
                                       build_minlp_linearized, evaluate_objective,
                                       extract_solution, model_census, pack_solution, relax)
from src.app.core.formulations.var_index import R_IJKS, R_KSP, X_VKS, Y, Z_IJK, Z_IJKSP
from src.app.core.solvers import MilpParams, solve_lp, solve_milp
from src.app.core.validation import strip_cycles, validate_solution
from src.app.utils.constants import LpStatus, MilpStatus
from tests.fixtures import (CHAIN_OBJECTIVE, chain_instance, diamond_instance,
                            tiny_generated_instance)


class TestModelStructure(unittest.TestCase):

    def test_milp_census(self):
        """测试: 链式实例的变量与约束计数符合模型规模公式。"""
        inst = chain_instance()
        model, vi = build_milp(inst)
        table = model_census(model, vi)
        # |V|=1, |L|=2, K=1, ℓ=1, P=2
        self.assertEqual(table['y_v'].variables, 1)
        self.assertEqual(table['x_vks'].variables, 1)
        self.assertEqual(table['z_ijksp'].variables, 2 * 2 * 2)
        self.assertEqual(table['r_ijksp'].variables, 2 * 2 * 2)
        self.assertEqual(table['theta_ks'].variables, 2)
        self.assertEqual(table['placement'].constraints, 1)
        self.assertEqual(table['link_capacity'].constraints, 2)
        self.assertEqual(model.num_variables, len(vi))

    def test_lp2_is_smaller_and_continuous(self):
        inst = diamond_instance()
        milp, _ = build_milp(inst)
        lp2, vi2 = build_lp2(inst)
        self.assertFalse(lp2.has_integers)
        self.assertTrue(vi2.has_family(R_IJKS))
        self.assertLess(lp2.num_variables, milp.num_variables)
        self.assertLess(lp2.num_constraints, milp.num_constraints)

    def test_minlp_has_split_variables(self):
        model, vi = build_minlp_linearized(diamond_instance())
        self.assertTrue(vi.has_family(R_KSP))
        self.assertTrue(model.has_integers)

    def test_disallowed_placement_has_zero_upper_bound(self):
        inst = diamond_instance()
        stage = inst.services[0].stage(1)
        stage.nfv_delay['B'] = None
        model, vi = build_milp(inst)
        self.assertEqual(model.upper[vi.col(X_VKS, ('B', 0, 1))], 0.0)
        self.assertEqual(model.upper[vi.col(X_VKS, ('A', 0, 1))], 1.0)

    def test_relax_is_idempotent(self):
        model, _ = build_milp(chain_instance())
        once = relax(model)
        twice = relax(once)
        self.assertFalse(once.has_integers)
        self.assertTrue(model.has_integers)
        self.assertEqual(once.name, twice.name)
        self.assertEqual(once.lower, twice.lower)
        self.assertEqual(once.upper, twice.upper)

    def test_subset_of_services(self):
        model, vi = build_milp(diamond_instance(), services=[1])
        self.assertEqual(vi.services, (1,))
        self.assertIsNone(vi.get(X_VKS, ('A', 0, 1)))
        self.assertIsNotNone(vi.get(X_VKS, ('A', 1, 1)))
        self.assertEqual(model.num_variables, len(vi))

    def test_branch_priority_follows_families(self):
        """测试: 开通变量优先于放置变量，放置变量优先于链路与路径指示变量。"""
        model, vi = build_milp(diamond_instance())
        priority = model.priority
        self.assertEqual(priority[vi.col(Y, ('A',))], 3)
        self.assertEqual(priority[vi.col(X_VKS, ('A', 0, 1))], 2)
        self.assertEqual(priority[vi.col(Z_IJK, ('S', 'A', 0))], 1)
        self.assertEqual(priority[vi.col(Z_IJKSP, ('S', 'A', 0, 0, 1))], 0)


class TestExactModels(unittest.TestCase):

    def test_chain_milp_optimum(self):
        """测试: 唯一嵌入的实例上 MILP 最优值为 1 + σ·(5 + 5)。"""
        inst = chain_instance()
        model, vi = build_milp(inst)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, CHAIN_OBJECTIVE, places=9)
        sol = strip_cycles(inst, extract_solution(vi, result.x, model).snapped())
        self.assertAlmostEqual(evaluate_objective(inst, sol), CHAIN_OBJECTIVE, places=9)
        self.assertTrue(validate_solution(inst, sol).passed)

    def test_chain_minlp_optimum(self):
        inst = chain_instance()
        model, vi = build_minlp_linearized(inst)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, CHAIN_OBJECTIVE, places=9)
        sol = extract_solution(vi, result.x, model)
        self.assertIsNotNone(sol.r_ksp)

    def test_milp_and_minlp_agree_on_diamond(self):
        inst = diamond_instance()
        milp_model, _ = build_milp(inst)
        minlp_model, _ = build_minlp_linearized(inst)
        milp = solve_milp(milp_model)
        minlp = solve_milp(minlp_model)
        self.assertAlmostEqual(milp.objective, 1.01, places=9)
        self.assertAlmostEqual(minlp.objective, milp.objective, places=6)

    def test_tight_links_force_second_cloud(self):
        """测试: 链路容量 6 时两个速率 5 的业务无法共用云节点 A。"""
        inst = diamond_instance(link_capacity=6.0)
        model, vi = build_milp(inst)
        result = solve_milp(model)
        self.assertIs(result.status, MilpStatus.OPTIMAL)
        self.assertAlmostEqual(result.objective, 2.01, places=9)
        sol = extract_solution(vi, result.x, model).snapped()
        self.assertEqual(sum(sol.y_v.values()), 2.0)

    def test_milp_and_minlp_agree_on_generated_instances(self):
        """测试: 随机小实例上 MILP 与线性化 MINLP 的最优值相同，未证明最优时两者的界互相一致。"""
        params = MilpParams(time_limit=60.0, gap_tol=1e-9)
        solved = 0
        for seed in range(4):
            inst = tiny_generated_instance(seed)
            milp_model, vi = build_milp(inst)
            milp = solve_milp(milp_model, params)
            minlp = solve_milp(build_minlp_linearized(inst)[0], params)
            with self.subTest(seed=seed):
                if MilpStatus.INFEASIBLE in (milp.status, minlp.status):
                    self.assertIn(milp.status, (MilpStatus.INFEASIBLE, MilpStatus.UNKNOWN))
                    self.assertIn(minlp.status, (MilpStatus.INFEASIBLE, MilpStatus.UNKNOWN))
                    continue
                if milp.status is MilpStatus.OPTIMAL and minlp.status is MilpStatus.OPTIMAL:
                    self.assertAlmostEqual(milp.objective, minlp.objective, delta=1e-6)
                    solved += 1
                if milp.has_solution:
                    self.assertGreaterEqual(milp.objective, minlp.best_bound - 1e-6)
                    sol = strip_cycles(inst, extract_solution(vi, milp.x, milp_model).snapped())
                    self.assertTrue(validate_solution(inst, sol).passed,
                                    validate_solution(inst, sol).failures())
                if minlp.has_solution:
                    self.assertGreaterEqual(minlp.objective, milp.best_bound - 1e-6)
        self.assertGreater(solved, 0)


class TestRelaxations(unittest.TestCase):

    def test_lp1_equals_lp2(self):
        """测试: MILP 的线性松弛与紧凑 LP 的最优值相同。"""
        for inst in (chain_instance(), diamond_instance(), diamond_instance(link_capacity=6.0)):
            with self.subTest(instance=inst.name):
                lp1 = solve_lp(relax(build_milp(inst)[0]))
                lp2 = solve_lp(build_lp2(inst)[0])
                self.assertIs(lp1.status, LpStatus.OPTIMAL)
                self.assertAlmostEqual(lp1.objective, lp2.objective, places=6)

    def test_bound_ordering(self):
        """测试: ν(NLP-L) ≤ ν(LP-I) ≤ ν(MILP)。"""
        inst = diamond_instance(link_capacity=6.0)
        nlpl = solve_lp(relax(build_minlp_linearized(inst)[0])).objective
        lp1 = solve_lp(relax(build_milp(inst)[0])).objective
        milp = solve_milp(build_milp(inst)[0]).objective
        self.assertLessEqual(nlpl, lp1 + 1e-6)
        self.assertLessEqual(lp1, milp + 1e-6)

    def test_lp2_solution_expands_to_first_path(self):
        inst = chain_instance()
        model, vi = build_lp2(inst)
        outcome = solve_lp(model)
        sol = extract_solution(vi, outcome.x, model)
        self.assertAlmostEqual(sol.r_ijksp[('S', 'A', 0, 0, 1)], 1.0)
        self.assertEqual(sol.r_ijksp[('S', 'A', 0, 0, 2)], 0.0)
        self.assertAlmostEqual(sol.z_ijksp[('S', 'A', 0, 0, 2)], 1.0)


class TestSolutionMapping(unittest.TestCase):

    def test_pack_inverts_extract(self):
        inst = diamond_instance()
        model, vi = build_milp(inst)
        result = solve_milp(model)
        sol = extract_solution(vi, result.x, model)
        np.testing.assert_allclose(pack_solution(vi, sol), np.clip(result.x, model.lower, model.upper))

    def test_solution_document_keeps_keys(self):
        inst = chain_instance()
        model, vi = build_milp(inst)
        sol = extract_solution(vi, solve_milp(model).x, model).snapped()
        again = SliceSolution.from_dict(sol.to_dict())
        self.assertEqual(again.y_v, {key: val for key, val in sol.y_v.items() if val})
        self.assertEqual(again.x_vks.get(('A', 0, 1)), 1.0)

    def test_service_block_and_merge(self):
        inst = diamond_instance()
        model, vi = build_milp(inst)
        sol = extract_solution(vi, solve_milp(model).x, model).snapped()
        blocks = [sol.service_block(k) for k in range(2)]
        self.assertTrue(all(key[1] == 0 for key in blocks[0].x_vks))
        merged = SliceSolution.merge(blocks)
        self.assertAlmostEqual(evaluate_objective(inst, merged), evaluate_objective(inst, sol))
        self.assertEqual(merged.y_v.get(('A',), 0.0), sol.y_v.get(('A',), 0.0))

    def test_extract_rejects_wrong_length(self):
        from src.app.utils.exceptions import SolutionShapeError
        model, vi = build_milp(chain_instance())
        with self.assertRaises(SolutionShapeError):
            extract_solution(vi, np.zeros(len(vi) + 1))


if __name__ == '__main__':
    unittest.main()
