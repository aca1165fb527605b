"""批量对比: 在一组实例上运行多个方法，输出逐次记录与按方法的均值行。"""

import argparse
import glob
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .commands import read_instance, seed_of
from ..core.controller import Controller, RunRecord
from ..utils.constants import EXIT_OK, MethodIds
from ..utils.exceptions import UsageError
from ..utils.exporter import Exporter

logger = logging.getLogger(__name__)

AGGREGATE_STATUS = 'aggregate'
AGGREGATE_COLUMNS = ['runs', 'feasible_count']
MEAN_COLUMNS = ['objective', 'bound', 'iterations', 'columns', 'milp_pricing_solves', 'nodes',
                'wall_time', 'gap_improvement', 'plp_gap_improvement']


def gap_improvement(v_strong: float, v_weak: float, v_milp: float) -> float:
    """(v_strong − v_weak) / (v_milp − v_weak)；分母退化时返回 NaN。

    gap_improvement(ν(LP-I), ν(NLP-L), ν(MILP)) 衡量 LP-I 相对 NLP-L 收紧的间隙比例；
    gap_improvement(ν(P-LP), ν(LP-I), ν(MILP)) 衡量模式 LP 相对 LP-I 的改进。
    """
    values = (v_strong, v_weak, v_milp)
    if any(v is None or not math.isfinite(v) for v in values):
        return math.nan
    denom = v_milp - v_weak
    if denom <= 1e-9 * (1.0 + abs(v_milp)):
        return math.nan
    return (v_strong - v_weak) / denom


def expand_instances(patterns: Sequence[str]) -> List[str]:
    paths: List[str] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern))
        paths.extend(m for m in matches if m not in paths)
    return paths


def _run_one(job: Tuple[str, str, Optional[str], Dict[str, Any], Optional[float],
                        Optional[int]]) -> RunRecord:
    path, method_id, config_path, params, sigma, paths = job
    name = Path(path).stem
    try:
        controller = Controller(config_path)
        inst = read_instance(path)
        if sigma is not None or paths is not None:
            inst = inst.with_overrides(sigma=sigma, path_budget=paths)
        name = inst.name or name
        record, _solution = controller.run_method(inst, method_id, params, seed=seed_of(inst))
        return record
    except Exception as e:
        # 单次失败只记录，不中断整批
        logger.warning("%s / %s 失败: %s", path, method_id, e)
        return RunRecord(instance=name, method=method_id, status='error', error=str(e))


def _optimal_value(rows: Dict[str, RunRecord], method_id: str) -> float:
    record = rows.get(method_id)
    if record is None or record.status != 'optimal':
        return math.nan
    return record.objective


def annotate_gaps(records: List[RunRecord]) -> None:
    """按实例计算间隙改进，写入 lp-i 与 p-lp 记录。"""
    by_instance: Dict[str, Dict[str, RunRecord]] = {}
    for record in records:
        by_instance.setdefault(record.instance, {})[record.method] = record
    for rows in by_instance.values():
        v_milp = _optimal_value(rows, MethodIds.MILP.value)
        if math.isnan(v_milp):
            v_milp = _optimal_value(rows, MethodIds.MINLP_LIN.value)
        v_lp1 = _optimal_value(rows, MethodIds.LP_I.value)
        if math.isnan(v_lp1):
            v_lp1 = _optimal_value(rows, MethodIds.LP_II.value)
        v_nlpl = _optimal_value(rows, MethodIds.NLP_L.value)
        if MethodIds.LP_I.value in rows:
            rows[MethodIds.LP_I.value].gap_improvement = gap_improvement(v_lp1, v_nlpl, v_milp)
        plp = rows.get(MethodIds.P_LP.value)
        if plp is not None and plp.status == 'solved':
            plp.plp_gap_improvement = gap_improvement(plp.objective, v_lp1, v_milp)


def aggregate_records(records: Sequence[RunRecord]) -> List[Dict[str, Any]]:
    """按方法求均值(NaN 不计入)，并统计运行数与给出通过校验的可行解的次数。"""
    if not records:
        return []
    df = pd.DataFrame([r.to_row() for r in records])
    rows = []
    for method, group in df.groupby('method', sort=False):
        numeric = group[MEAN_COLUMNS].apply(pd.to_numeric, errors='coerce')
        means = numeric.mean(skipna=True)
        row: Dict[str, Any] = {'instance': '*', 'method': method, 'status': AGGREGATE_STATUS}
        row.update({col: float(means[col]) for col in MEAN_COLUMNS})
        row['runs'] = int(len(group))
        row['feasible_count'] = int((group['validated'] == 'passed').sum())
        rows.append(row)
    return rows


def cmd_bench(controller: Controller, args: argparse.Namespace) -> int:
    paths = expand_instances(args.instances)
    if not paths:
        raise UsageError(f"没有匹配的实例文件: {' '.join(args.instances)}")
    methods = [m.strip() for m in args.methods.split(',') if m.strip()]
    for method_id in methods:
        controller.get_method(method_id)

    jobs = [(path, method_id, args.config, controller.params, args.sigma, args.paths)
            for path in paths for method_id in methods]
    logger.info("bench: %d 个实例 × %d 个方法", len(paths), len(methods))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as executor:
            records = list(executor.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]

    annotate_gaps(records)
    aggregates = aggregate_records(records)
    Exporter.export_to_csv([r.to_row() for r in records] + aggregates, Path(args.out),
                           RunRecord.columns_order() + AGGREGATE_COLUMNS)
    if aggregates:
        table = pd.DataFrame(aggregates)[['method', 'runs', 'feasible_count', 'objective',
                                          'wall_time', 'gap_improvement', 'plp_gap_improvement']]
        print(table.to_string(index=False))
    return EXIT_OK
