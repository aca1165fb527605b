"""generate / solve / validate / dump-model 子命令的实现。"""

import argparse
import copy
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from ..core.controller import Controller, RunRecord
from ..core.formulations import model_census
from ..core.formulations.slice_solution import SliceSolution
from ..core.instance import NetworkInstance, load_instance, save_instance
from ..core.instance_generator import GeneratorConfig, generate_instance
from ..core.solvers import dump_model
from ..core.validation import ValidationParams, validate_solution
from ..utils.constants import (EXIT_INVALID_SOLUTION, EXIT_OK, SOLUTION_STATUSES,
                               ParameterKeys)
from ..utils.exceptions import ConfigError, SlicingError
from ..utils.exporter import Exporter

logger = logging.getLogger(__name__)

GENERATOR_FLAGS = {
    'nodes': 'num_nodes',
    'arcs': 'num_arcs',
    'density': 'density',
    'clouds': 'num_cloud',
    'services': 'num_services',
    'chain_length': 'chain_length',
}


def read_instance(path: str, args: Optional[argparse.Namespace] = None) -> NetworkInstance:
    """读取实例文件；命令行显式给出 --sigma / --paths 时覆盖实例中的值。"""
    inst = load_instance(Path(path).read_bytes())
    if args is not None and (args.sigma is not None or args.paths is not None):
        inst = inst.with_overrides(sigma=args.sigma, path_budget=args.paths)
    return inst


def seed_of(inst: NetworkInstance) -> Optional[int]:
    match = re.fullmatch(r'gen-(\d+)', inst.name or '')
    return int(match.group(1)) if match else None


def generator_config(controller: Controller, args: argparse.Namespace) -> GeneratorConfig:
    """合并默认参数、--generator-config 文件与命令行参数。"""
    data: Dict[str, Any] = copy.deepcopy(controller.params[ParameterKeys.GENERATOR.value])
    model = controller.params[ParameterKeys.MODEL.value]
    data['sigma'] = model.get('sigma', data.get('sigma'))
    data['path_budget'] = model.get('paths', data.get('path_budget'))
    if args.generator_config:
        try:
            override = json.loads(Path(args.generator_config).read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"无法读取生成器参数文件: {e}") from e
        ranges = override.pop('ranges', None) or {}
        data.update(override)
        data.setdefault('ranges', {}).update(ranges)
    for flag, key in GENERATOR_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    if args.arcs is not None:
        data['density'] = None
    return GeneratorConfig.from_dict(data)


def cmd_generate(controller: Controller, args: argparse.Namespace) -> int:
    config = generator_config(controller, args)
    seed = args.seed if args.seed is not None else 0
    out = Path(args.out)
    if args.count > 1 or out.suffix.lower() != '.json':
        out.mkdir(parents=True, exist_ok=True)
        targets = [(seed + i, out / f"gen-{seed + i}.json") for i in range(args.count)]
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        targets = [(seed, out)]
    for s, path in targets:
        inst = generate_instance(config, s)
        path.write_bytes(save_instance(inst))
        logger.info("已写出 %s", path)
    print(f"生成 {len(targets)} 个实例")
    return EXIT_OK


def _print_census(controller: Controller, inst: NetworkInstance, method_id: str) -> None:
    method = controller.get_method(method_id)
    if not hasattr(method, 'build_model'):
        logger.warning("方法 %s 没有单一模型，跳过规模统计", method_id)
        return
    model, vi = method.build_model(inst)
    table = model_census(model, vi)
    df = pd.DataFrame([{'family': name, 'variables': entry.variables,
                        'constraints': entry.constraints} for name, entry in table.items()])
    print(df.to_string(index=False))


def _write_traces(controller: Controller, directory: str) -> None:
    result = controller.last_result
    if result is None or not result.traces:
        return
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    for name, rows in result.traces.items():
        if rows:
            Exporter.export_to_csv(rows, target / f"{name}.csv")


def solution_document(inst: NetworkInstance, record: RunRecord,
                      solution: SliceSolution) -> Dict[str, Any]:
    return {
        'instance': inst.name,
        'method': record.method,
        'status': record.status,
        'objective': record.objective,
        'solution': solution.to_dict(),
    }


def cmd_solve(controller: Controller, args: argparse.Namespace) -> int:
    inst = read_instance(args.instance, args)
    if args.census:
        _print_census(controller, inst, args.method)
    record, solution = controller.run_method(inst, args.method, seed=seed_of(inst))
    if args.trace:
        _write_traces(controller, args.trace)
    if args.records:
        path = Path(args.records)
        rows = Exporter.read_csv_rows(path) if path.exists() else []
        rows.append(record.to_row())
        Exporter.export_to_csv(rows, path, RunRecord.columns_order())
    if solution is not None and args.out:
        Exporter.export_json(solution_document(inst, record, solution), Path(args.out))
    print(f"{record.method}: status={record.status} objective={record.objective:.9g} "
          f"bound={record.bound:.9g} time={record.wall_time:.2f}s")
    if record.validated == 'failed':
        return EXIT_INVALID_SOLUTION
    if record.status not in SOLUTION_STATUSES:
        logger.info("%s 没有给出可行解 (%s)", record.method, record.status)
    return EXIT_OK


def cmd_validate(controller: Controller, args: argparse.Namespace) -> int:
    inst = read_instance(args.instance, args)
    doc = Exporter.read_json(Path(args.solution))
    if 'solution' not in doc:
        raise SlicingError(f"{args.solution} 不是解文件(缺少 solution 字段)")
    solution = SliceSolution.from_dict(doc['solution'])
    params = ValidationParams.from_dict(controller.params.get(ParameterKeys.VALIDATION.value))
    report = validate_solution(inst, solution, params)
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return EXIT_OK if report.passed else EXIT_INVALID_SOLUTION


def cmd_dump_model(controller: Controller, args: argparse.Namespace) -> int:
    inst = read_instance(args.instance, args)
    model, vi = controller.get_method(args.formulation).build_model(inst)
    text = dump_model(model)
    if args.census:
        table = model_census(model, vi)
        lines = [f"\\ {name}: {entry.variables} 变量, {entry.constraints} 约束"
                 for name, entry in table.items()]
        text = "\n".join(lines) + "\n" + text
    if args.out:
        Path(args.out).write_text(text, encoding='utf-8')
    else:
        print(text)
    return EXIT_OK
