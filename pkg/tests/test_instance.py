#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试实例模型: 文档读写、不变量检查、最短路指标与流守恒右端项。
"""

import json
import math
import os
import sys
import unittest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.core.instance import (FlowBalanceTerm, flow_balance_rhs, flow_endpoints,
                                   instance_to_dict, load_instance, save_instance,
                                   shortest_path_metrics)
from src.app.utils.exceptions import (InstanceParseError, InstanceValidationError,
                                      UnreachableError)
from tests.fixtures import SIGMA, chain_instance, diamond_instance


class TestInstanceDocument(unittest.TestCase):
    """测试实例文档的解析与序列化。"""

    def test_save_then_load_gives_equal_instance(self):
        """测试: 序列化后再解析得到相同的实例。"""
        inst = diamond_instance()
        again = load_instance(save_instance(inst))
        self.assertEqual(again, inst)
        self.assertEqual(again.sigma, SIGMA)
        self.assertEqual(again.path_budget, 2)

    def test_missing_optional_fields_use_defaults(self):
        """测试: 缺少 P 和 sigma 时使用默认值 2 和 0.0005。"""
        doc = instance_to_dict(chain_instance())
        del doc['P']
        del doc['sigma']
        inst = load_instance(json.dumps(doc).encode('utf-8'))
        self.assertEqual(inst.path_budget, 2)
        self.assertAlmostEqual(inst.sigma, 0.0005)

    def test_invalid_json_raises_parse_error(self):
        with self.assertRaises(InstanceParseError):
            load_instance(b"{not json")

    def test_missing_field_raises_parse_error(self):
        doc = instance_to_dict(chain_instance())
        del doc['links']
        with self.assertRaises(InstanceParseError):
            load_instance(json.dumps(doc).encode('utf-8'))

    def test_bad_reliability_reports_field(self):
        """测试: 可靠性越界时异常带有字段路径。"""
        doc = instance_to_dict(chain_instance())
        doc['links'][1]['reliability'] = 1.5
        with self.assertRaises(InstanceValidationError) as ctx:
            load_instance(json.dumps(doc).encode('utf-8'))
        self.assertEqual(ctx.exception.field, "links[1].reliability")

    def test_cloud_node_cannot_be_source(self):
        doc = instance_to_dict(chain_instance())
        doc['services'][0]['source'] = 'A'
        with self.assertRaises(InstanceValidationError):
            load_instance(json.dumps(doc).encode('utf-8'))

    def test_rates_length_must_match_chain(self):
        doc = instance_to_dict(chain_instance())
        doc['services'][0]['rates'] = [5.0]
        with self.assertRaises(InstanceValidationError):
            load_instance(json.dumps(doc).encode('utf-8'))

    def test_disallowed_function_placement_is_null(self):
        """测试: nfv_delay 为 null 表示不允许放置，并能原样写回。"""
        doc = instance_to_dict(diamond_instance())
        doc['services'][0]['chain'][0]['nfv_delay']['B'] = None
        inst = load_instance(json.dumps(doc).encode('utf-8'))
        stage = inst.services[0].stage(1)
        self.assertFalse(stage.allowed('B'))
        self.assertTrue(stage.allowed('A'))
        written = json.loads(save_instance(inst))
        self.assertIsNone(written['services'][0]['chain'][0]['nfv_delay']['B'])

    def test_with_overrides(self):
        inst = chain_instance()
        changed = inst.with_overrides(sigma=0.01, path_budget=3)
        self.assertEqual(changed.sigma, 0.01)
        self.assertEqual(changed.path_budget, 3)
        self.assertIs(inst.with_overrides(), inst)


class TestInstanceMetrics(unittest.TestCase):
    """测试最短路指标。"""

    def test_shortest_path_metrics_on_diamond(self):
        """测试: 最小时延路径为 S-A-D，最大可靠性路径同样经过 A。"""
        dist, dist_rel = shortest_path_metrics(diamond_instance(), 0)
        self.assertAlmostEqual(dist, 2.0)
        self.assertAlmostEqual(dist_rel, 0.999 * 0.999)

    def test_unreachable_destination(self):
        doc = instance_to_dict(chain_instance())
        doc['links'] = [doc['links'][0]]
        inst = load_instance(json.dumps(doc).encode('utf-8'))
        with self.assertRaises(UnreachableError):
            shortest_path_metrics(inst, 0)


class TestFlowBalance(unittest.TestCase):
    """测试流守恒右端项 b_i^{k,s}(x)。"""

    def setUp(self):
        self.inst = chain_instance()

    def test_source_and_destination_constants(self):
        self.assertEqual(flow_balance_rhs(self.inst, 0, 0, 'S', {}), -1)
        self.assertEqual(flow_balance_rhs(self.inst, 0, 1, 'D', {}), 1)
        self.assertEqual(flow_balance_rhs(self.inst, 0, 1, 'S', {}), 0)

    def test_cloud_term_depends_on_placement(self):
        """测试: 云节点在放置处吸收第 0 段、发出第 1 段的流。"""
        x = {('A', 0, 1): 1.0}
        self.assertEqual(flow_balance_rhs(self.inst, 0, 0, 'A', x), 1.0)
        self.assertEqual(flow_balance_rhs(self.inst, 0, 1, 'A', x), -1.0)
        self.assertEqual(flow_balance_rhs(self.inst, 0, 0, 'A', {}), 0.0)

    def test_symbolic_form(self):
        term = flow_balance_rhs(self.inst, 0, 0, 'A')
        self.assertIsInstance(term, FlowBalanceTerm)
        self.assertEqual(term.constant, 0)
        self.assertEqual(term.terms, ((('A', 0, 1), 1),))
        self.assertTrue(flow_balance_rhs(self.inst, 0, 0, 'D').is_zero)

    def test_net_inflow_sums_to_zero_over_nodes(self):
        """测试: 对任意整数放置，所有节点的右端项之和为 0。"""
        inst = diamond_instance()
        for host in ('A', 'B'):
            x = {(host, 0, 1): 1.0}
            for s in inst.services[0].segments:
                total = sum(flow_balance_rhs(inst, 0, s, i, x) for i in inst.nodes)
                self.assertTrue(math.isclose(total, 0.0, abs_tol=1e-12))

    def test_flow_endpoints(self):
        inst = diamond_instance()
        x = {('B', 0, 1): 1.0}
        self.assertEqual(flow_endpoints(inst, 0, 0, x), ('S', 'B'))
        self.assertEqual(flow_endpoints(inst, 0, 1, x), ('B', 'D'))


if __name__ == '__main__':
    unittest.main()
