#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试命令行子命令、批量对比的统计量与导出工具。
"""

import json
import math
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path

import pandas as pd

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.cli import main
from src.app.cli.bench import aggregate_records, annotate_gaps, expand_instances, gap_improvement
from src.app.core.controller import RunRecord
from src.app.core.instance import instance_to_dict, load_instance
from src.app.utils.constants import EXIT_FAILURE, EXIT_INVALID_SOLUTION, EXIT_OK, EXIT_USAGE
from src.app.utils.exporter import Exporter
from tests.fixtures import CHAIN_OBJECTIVE, chain_instance


def run_cli(*argv: str) -> int:
    """运行命令行并吞掉标准输出与标准错误。"""
    with redirect_stdout(StringIO()), redirect_stderr(StringIO()):
        return main(list(argv))


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.instance = self.write_instance(chain_instance(), 'chain.json')

    def tearDown(self):
        self._tmp.cleanup()

    def write_instance(self, inst, filename: str, name: str = None) -> str:
        doc = instance_to_dict(inst)
        if name is not None:
            doc['name'] = name
        path = self.tmp / filename
        path.write_text(json.dumps(doc), encoding='utf-8')
        return str(path)


class TestGenerateCommand(CliTestCase):

    def test_single_instance(self):
        out = self.tmp / 'gen.json'
        code = run_cli('generate', '--nodes', '6', '--clouds', '2', '--services', '2',
                       '--chain-length', '2', '--seed', '3', '--out', str(out))
        self.assertEqual(code, EXIT_OK)
        inst = load_instance(out.read_bytes())
        self.assertEqual(inst.name, 'gen-3')
        self.assertEqual(len(inst.nodes), 6)
        self.assertEqual(len(inst.services), 2)

    def test_batch_into_directory(self):
        out = self.tmp / 'batch'
        code = run_cli('generate', '--nodes', '6', '--clouds', '2', '--services', '1',
                       '--chain-length', '1', '--seed', '10', '--count', '2', '--out', str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(sorted(p.name for p in out.iterdir()), ['gen-10.json', 'gen-11.json'])

    def test_bad_generator_combination(self):
        code = run_cli('generate', '--nodes', '4', '--clouds', '4', '--out',
                       str(self.tmp / 'bad.json'))
        self.assertEqual(code, EXIT_FAILURE)


class TestSolveAndValidate(CliTestCase):

    def test_solve_writes_solution_and_records(self):
        solution = self.tmp / 'sol.json'
        records = self.tmp / 'runs.csv'
        for method in ('milp', 'ccg'):
            code = run_cli('solve', self.instance, '--method', method, '--out', str(solution),
                           '--records', str(records))
            self.assertEqual(code, EXIT_OK)
        doc = Exporter.read_json(solution)
        self.assertEqual(doc['method'], 'ccg')
        self.assertAlmostEqual(doc['objective'], CHAIN_OBJECTIVE, places=9)
        rows = Exporter.read_csv_rows(records)
        self.assertEqual([row['method'] for row in rows], ['milp', 'ccg'])
        self.assertEqual({row['validated'] for row in rows}, {'passed'})
        self.assertEqual(run_cli('validate', self.instance, str(solution)), EXIT_OK)

    def test_validate_rejects_tampered_solution(self):
        solution = self.tmp / 'sol.json'
        self.assertEqual(run_cli('solve', self.instance, '--method', 'milp', '--out',
                                 str(solution)), EXIT_OK)
        doc = Exporter.read_json(solution)
        doc['solution']['y_v'] = []
        Exporter.export_json(doc, solution)
        self.assertEqual(run_cli('validate', self.instance, str(solution)), EXIT_INVALID_SOLUTION)

    def test_validate_needs_solution_document(self):
        self.assertEqual(run_cli('validate', self.instance, self.instance), EXIT_FAILURE)

    def test_trace_directory(self):
        trace = self.tmp / 'trace'
        self.assertEqual(run_cli('solve', self.instance, '--method', 'ccg', '--trace',
                                 str(trace)), EXIT_OK)
        iterations = pd.read_csv(trace / 'iterations.csv')
        pricing = pd.read_csv(trace / 'pricing.csv')
        self.assertIn('master_value', iterations.columns)
        self.assertEqual(set(pricing['service']), {0})

    def test_relaxation_without_solution_file(self):
        solution = self.tmp / 'none.json'
        self.assertEqual(run_cli('solve', self.instance, '--method', 'lp-ii', '--out',
                                 str(solution)), EXIT_OK)
        self.assertFalse(solution.exists())

    def test_dump_model(self):
        out = self.tmp / 'model.lp'
        code = run_cli('dump-model', self.instance, '--formulation', 'lp-ii', '--census',
                       '--out', str(out))
        self.assertEqual(code, EXIT_OK)
        text = out.read_text(encoding='utf-8')
        self.assertIn('minimize', text)
        self.assertTrue(text.rstrip().endswith('end'))

    def test_usage_errors(self):
        for argv in (('solve',), ('solve', self.instance, '--method', 'nope'),
                     ('frobnicate',), ('solve', self.instance, '--log-level', 'LOUD')):
            with self.subTest(argv=argv):
                self.assertEqual(run_cli(*argv), EXIT_USAGE)

    def test_missing_instance_file(self):
        self.assertEqual(run_cli('solve', str(self.tmp / 'absent.json')), EXIT_FAILURE)

    def test_malformed_instance_file(self):
        path = self.tmp / 'broken.json'
        path.write_text('{"nodes": ', encoding='utf-8')
        self.assertEqual(run_cli('solve', str(path), '--method', 'milp'), EXIT_FAILURE)


class TestBench(CliTestCase):

    def test_bench_rows_and_aggregates(self):
        """测试: 2 个实例 × 2 个方法得到 4 行记录加 2 行均值。"""
        self.write_instance(chain_instance(), 'b1.json', name='chain-1')
        self.write_instance(chain_instance(link_capacity=10.0), 'b2.json', name='chain-2')
        out = self.tmp / 'bench.csv'
        code = run_cli('bench', str(self.tmp / 'b*.json'), '--methods', 'milp,ccg',
                       '--out', str(out))
        self.assertEqual(code, EXIT_OK)
        df = pd.read_csv(out)
        self.assertEqual(len(df), 6)
        runs = df[df['status'] != 'aggregate']
        self.assertEqual(sorted(runs['instance'].unique()), ['chain-1', 'chain-2'])
        agg = df[df['status'] == 'aggregate'].set_index('method')
        self.assertEqual(agg.loc['milp', 'runs'], 2)
        self.assertEqual(agg.loc['ccg', 'feasible_count'], 2)
        self.assertAlmostEqual(agg.loc['milp', 'objective'], CHAIN_OBJECTIVE, places=9)

    def test_bench_without_matches(self):
        code = run_cli('bench', str(self.tmp / 'nothing-*.json'), '--out', str(self.tmp / 'x.csv'))
        self.assertEqual(code, EXIT_USAGE)

    def test_bench_unknown_method(self):
        code = run_cli('bench', self.instance, '--methods', 'milp,nope', '--out',
                       str(self.tmp / 'x.csv'))
        self.assertEqual(code, EXIT_FAILURE)

    def test_expand_instances_deduplicates(self):
        paths = expand_instances([self.instance, str(self.tmp / '*.json')])
        self.assertEqual(paths, [self.instance])


class TestBenchStatistics(unittest.TestCase):

    def test_gap_improvement(self):
        self.assertAlmostEqual(gap_improvement(1.5, 1.0, 2.0), 0.5)
        self.assertAlmostEqual(gap_improvement(2.0, 1.0, 2.0), 1.0)
        self.assertTrue(math.isnan(gap_improvement(1.0, 1.0, 1.0)))
        self.assertTrue(math.isnan(gap_improvement(1.0, math.nan, 2.0)))
        self.assertTrue(math.isnan(gap_improvement(1.0, 0.5, math.inf)))

    def test_annotate_gaps(self):
        records = [
            RunRecord('g', 'milp', 'optimal', objective=2.0),
            RunRecord('g', 'lp-i', 'optimal', objective=1.5),
            RunRecord('g', 'nlp-l', 'optimal', objective=1.0),
            RunRecord('g', 'p-lp', 'solved', objective=1.8),
            RunRecord('h', 'lp-i', 'optimal', objective=1.0),
        ]
        annotate_gaps(records)
        self.assertAlmostEqual(records[1].gap_improvement, 0.5)
        self.assertAlmostEqual(records[3].plp_gap_improvement, 0.6)
        self.assertTrue(math.isnan(records[0].gap_improvement))
        self.assertTrue(math.isnan(records[4].gap_improvement))

    def test_minlp_stands_in_for_milp(self):
        records = [RunRecord('g', 'minlp-lin', 'optimal', objective=2.0),
                   RunRecord('g', 'lp-i', 'optimal', objective=1.5),
                   RunRecord('g', 'nlp-l', 'optimal', objective=1.0)]
        annotate_gaps(records)
        self.assertAlmostEqual(records[1].gap_improvement, 0.5)

    def test_aggregate_skips_nan(self):
        records = [
            RunRecord('a', 'ccg', 'solved', objective=1.0, iterations=2, validated='passed'),
            RunRecord('b', 'ccg', 'infeasible', iterations=4),
            RunRecord('a', 'lp-i', 'optimal', objective=0.5),
        ]
        rows = {row['method']: row for row in aggregate_records(records)}
        self.assertEqual(list(rows), ['ccg', 'lp-i'])
        self.assertEqual(rows['ccg']['runs'], 2)
        self.assertEqual(rows['ccg']['feasible_count'], 1)
        self.assertAlmostEqual(rows['ccg']['objective'], 1.0)
        self.assertAlmostEqual(rows['ccg']['iterations'], 3.0)
        self.assertEqual(rows['lp-i']['feasible_count'], 0)
        self.assertEqual(aggregate_records([]), [])


class TestExporter(unittest.TestCase):

    def test_json_writes_null_for_nan(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'doc.json'
            Exporter.export_json({'a': math.nan, 'b': [1.0, math.inf], 'c': 'x'}, path)
            self.assertEqual(Exporter.read_json(path), {'a': None, 'b': [1.0, None], 'c': 'x'})

    def test_csv_round_trip_with_missing_values(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'rows.csv'
            Exporter.export_to_csv([{'a': 1, 'b': None}, {'a': 2, 'b': 'y'}], path, ['b', 'a'])
            self.assertEqual(path.read_text(encoding='utf-8').splitlines()[0], 'b,a')
            rows = Exporter.read_csv_rows(path)
            self.assertIsNone(rows[0]['b'])
            self.assertEqual(rows[1]['a'], 2)

    def test_empty_csv_needs_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValueError):
                Exporter.export_to_csv([], Path(tmp) / 'empty.csv')


if __name__ == '__main__':
    unittest.main()
