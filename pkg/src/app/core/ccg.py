"""两阶段定制列生成。

第一阶段在受限主问题(模式列的线性松弛)与逐业务定价之间迭代，直到没有业务能给出
新模式；第二阶段把模式列改为 0/1 变量，在已生成的列池上求解受限的模式 MILP，
得到完整的切片方案。
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from .formulations import build_milp, extract_solution
from .formulations.slice_solution import SliceSolution, evaluate_objective
from .formulations.var_index import T_KC, Y, VarIndex
from .instance import NetworkInstance
from .patterns import Pattern, pattern_from_solution
from .pricing import DualPrices, PricingOutcome, PricingParams, find_pattern
from .solvers import LpModel, LpOutcome, LpParams, MilpParams, solve_lp, solve_milp
from .validation import ValidationParams, strip_cycles, validate_solution
from ..utils.constants import (CcgStatus, FormulationKind, LpStatus, MilpStatus,
                               PatternSource, Relation)
from ..utils.exceptions import InfeasibleService, NumericalFailure, Stage2Failure

logger = logging.getLogger(__name__)


@dataclass
class CcgParams:
    """列生成参数。

    Attributes:
        iter_max (int): 第一阶段最大迭代次数。
        lp_acceleration (bool): 定价时先解紧凑 LP；False 时每次都解定价 MILP。
        stage1_time_limit (float): 第一阶段总时限(秒)，超时按迭代上限处理。
        stage2_time_limit (float): 第二阶段 MILP 时限(秒)。
        ray_repeat_cap (int): 同一条 Farkas 射线连续出现多少次后判定不可行。
        pricing_workers (int): 并行定价的进程数，1 表示串行。
    """
    iter_max: int = 100
    lp_acceleration: bool = True
    stage1_time_limit: float = 1800.0
    stage2_time_limit: float = 60.0
    ray_repeat_cap: int = 3
    pricing_workers: int = 1
    pricing: PricingParams = field(default_factory=PricingParams)
    milp: MilpParams = field(default_factory=MilpParams)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]],
                  pricing: Optional[PricingParams] = None,
                  milp: Optional[MilpParams] = None) -> "CcgParams":
        known = {f.name for f in fields(cls)} - {'pricing', 'milp'}
        params = cls(**{k: v for k, v in (data or {}).items() if k in known})
        if pricing is not None:
            params.pricing = pricing
        if milp is not None:
            params.milp = milp
        return params

    @property
    def validation(self) -> ValidationParams:
        return self.pricing.validation


class ColumnPool:
    """按业务分组的模式列表，同一业务内按摘要去重。"""

    def __init__(self, num_services: int):
        self._patterns: Dict[int, List[Pattern]] = {k: [] for k in range(num_services)}
        self._keys: Dict[int, set] = {k: set() for k in range(num_services)}

    def add(self, pattern: Pattern) -> int:
        """加入模式，返回其在该业务列表中的位置；重复时返回 -1。"""
        k = pattern.service
        if pattern.key in self._keys[k]:
            return -1
        self._keys[k].add(pattern.key)
        self._patterns[k].append(pattern)
        return len(self._patterns[k]) - 1

    def patterns(self, k: int) -> List[Pattern]:
        return list(self._patterns[k])

    def keys(self, k: int) -> frozenset:
        return frozenset(self._keys[k])

    def counts(self) -> Dict[int, int]:
        return {k: len(items) for k, items in self._patterns.items()}

    @property
    def services(self) -> List[int]:
        return sorted(self._patterns)

    def __iter__(self) -> Iterator[Tuple[int, int, Pattern]]:
        for k in self.services:
            for c, pattern in enumerate(self._patterns[k]):
                yield k, c, pattern

    def __len__(self) -> int:
        return sum(len(items) for items in self._patterns.values())


def initialize_columns(inst: NetworkInstance, milp_params: Optional[MilpParams] = None,
                       validation: Optional[ValidationParams] = None) -> ColumnPool:
    """对每个业务单独求解满容量下的 MILP，得到初始列池。

    Raises:
        InfeasibleService: 第一个无法嵌入的业务。
    """
    milp_params = milp_params or MilpParams()
    pool = ColumnPool(len(inst.services))
    for k in range(len(inst.services)):
        model, vi = build_milp(inst, services=[k])
        result = solve_milp(model, milp_params)
        if not result.has_solution:
            proven = result.status is MilpStatus.INFEASIBLE
            logger.info("业务 %d 初始化失败 (%s)", k, result.status.value)
            raise InfeasibleService(k, proven=proven)
        sol = extract_solution(vi, result.x, model, milp_params.lp.tol_feas)
        block = strip_cycles(inst, sol.snapped(milp_params.int_tol).service_block(k), validation)
        pool.add(pattern_from_solution(inst, block, k, 0, PatternSource.INIT, validation))
        logger.debug("业务 %d 初始模式目标值 %.6g", k, result.objective)
    return pool


class MasterProblem:
    """受限主问题(模式列的线性松弛)。

    行: 每个业务选一个模式(=1)、节点使用 (v,k)、节点容量、链路容量、y_v ≤ 1。
    新列追加在末尾，已有的基下标保持有效，因此可以用上一轮的基热启动。
    """

    def __init__(self, inst: NetworkInstance, pool: ColumnPool):
        self.inst = inst
        self.model = LpModel(name=f"master:{inst.name}")
        self.vi = VarIndex(FormulationKind.MASTER, inst, tuple(pool.services))
        self.basis = None
        for v in inst.cloud_ids:
            self.vi.add(self.model, Y, (v,), 0.0, math.inf, cost=1.0)
        y = {v: self.vi.col(Y, (v,)) for v in inst.cloud_ids}

        self.one_pattern_rows: Dict[int, int] = {}
        self.node_use_rows: Dict[Tuple[str, int], int] = {}
        self.node_capacity_rows: Dict[str, int] = {}
        self.link_rows: Dict[Tuple[str, str], int] = {}
        self.y_bound_rows: Dict[str, int] = {}
        for k in pool.services:
            self.one_pattern_rows[k] = self.model.add_constraint(
                {}, Relation.EQ, 1.0, name=f"one_pattern[{k}]", family='one_pattern')
        for v in inst.cloud_ids:
            for k in pool.services:
                self.node_use_rows[(v, k)] = self.model.add_constraint(
                    {y[v]: -1.0}, Relation.LE, 0.0, name=f"node_use[{v},{k}]", family='node_use')
        for node in inst.cloud_nodes:
            self.node_capacity_rows[node.id] = self.model.add_constraint(
                {y[node.id]: -node.capacity}, Relation.LE, 0.0,
                name=f"node_capacity[{node.id}]", family='node_capacity')
        for link in inst.links:
            self.link_rows[link.key] = self.model.add_constraint(
                {}, Relation.LE, link.capacity, name=f"link_capacity[{link.tail},{link.head}]",
                family='link_capacity')
        for v in inst.cloud_ids:
            self.y_bound_rows[v] = self.model.add_constraint(
                {y[v]: 1.0}, Relation.LE, 1.0, name=f"y_bound[{v}]", family='y_bound')
        for k, c, pattern in pool:
            self.add_pattern(c, pattern)

    def add_pattern(self, c: int, pattern: Pattern) -> int:
        """为模式追加一列 t_kc，费用为 σ Σ R_ij。"""
        k = pattern.service
        col = self.vi.add(self.model, T_KC, (k, c), 0.0, math.inf,
                          cost=self.inst.sigma * pattern.routed_rate())
        entries = {self.one_pattern_rows[k]: 1.0}
        for v, chi in pattern.chi.items():
            entries[self.node_use_rows[(v, k)]] = chi
        for v, rate in pattern.rate_v.items():
            entries[self.node_capacity_rows[v]] = rate
        for key, rate in pattern.rate_ij.items():
            entries[self.link_rows[key]] = rate
        self.model.add_column_entries(col, entries)
        return col

    def solve(self, params: Optional[LpParams] = None) -> LpOutcome:
        outcome = solve_lp(self.model, params, warm_start=self.basis)
        if outcome.basis is not None:
            self.basis = outcome.basis
        return outcome

    def dual_prices(self, outcome: LpOutcome) -> DualPrices:
        """从最优对偶或 Farkas 射线读出定价所需的价格。"""
        is_ray = outcome.status is LpStatus.INFEASIBLE
        if is_ray and outcome.farkas is None:
            raise NumericalFailure("受限主问题不可行但没有 Farkas 射线")
        y = outcome.farkas if is_ray else outcome.duals
        return DualPrices(
            alpha={k: float(y[row]) for k, row in self.one_pattern_rows.items()},
            beta={key: float(y[row]) for key, row in self.link_rows.items()},
            pi={key: float(y[row]) for key, row in self.node_use_rows.items()},
            eta={v: float(y[row]) for v, row in self.node_capacity_rows.items()},
            zeta={v: float(y[row]) for v, row in self.y_bound_rows.items()},
            is_ray=is_ray)


def build_master_lp(pool: ColumnPool, inst: NetworkInstance) -> Tuple[LpModel, VarIndex]:
    """构造受限主问题的 LP 模型。"""
    master = MasterProblem(inst, pool)
    return master.model, master.vi


@dataclass
class CcgResult:
    """列生成的结果与统计。"""
    status: CcgStatus
    solution: Optional[SliceSolution] = None
    master_value: float = math.nan
    stage2_objective: float = math.nan
    iterations: int = 0
    columns: Dict[int, int] = field(default_factory=dict)
    milp_pricing_solves: int = 0
    lp_recovered: int = 0
    stage1_time: float = 0.0
    stage2_time: float = 0.0
    infeasible_service: Optional[int] = None
    iteration_trace: List[Dict[str, Any]] = field(default_factory=list)
    pricing_trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def total_columns(self) -> int:
        return sum(self.columns.values())

    @property
    def mean_columns(self) -> float:
        return self.total_columns / len(self.columns) if self.columns else 0.0

    def summary(self) -> Dict[str, Any]:
        return {
            'status': self.status.value,
            'master_value': self.master_value,
            'stage2_objective': self.stage2_objective,
            'iterations': self.iterations,
            'columns': self.total_columns,
            'mean_columns': self.mean_columns,
            'milp_pricing_solves': self.milp_pricing_solves,
            'lp_recovered': self.lp_recovered,
            'stage1_time': self.stage1_time,
            'stage2_time': self.stage2_time,
            'infeasible_service': self.infeasible_service,
        }


def _price_one(args) -> PricingOutcome:
    inst, k, duals, pricing, milp, known, deadline, iteration = args
    return find_pattern(inst, k, duals, pricing, milp, known, deadline, iteration)


def _price_all(inst: NetworkInstance, pool: ColumnPool, duals: DualPrices, params: CcgParams,
               deadline: float, iteration: int,
               executor: Optional[ProcessPoolExecutor]) -> List[PricingOutcome]:
    pricing = replace(params.pricing, lp_acceleration=params.lp_acceleration)
    jobs = [(inst, k, duals, pricing, params.milp, pool.keys(k), deadline, iteration)
            for k in pool.services]
    if executor is None:
        return [_price_one(job) for job in jobs]
    # map 保持业务顺序
    return list(executor.map(_price_one, jobs))


def solve_stage2(pool: ColumnPool, inst: NetworkInstance,
                 params: Optional[CcgParams] = None) -> SliceSolution:
    """在列池上求解受限的模式 MILP，并展开所选模式的嵌入。

    Raises:
        Stage2Failure: 受限 MILP 没有可行解(主问题 LP 可行时也可能发生)。
    """
    params = params or CcgParams()
    master = MasterProblem(inst, pool)
    model = master.model
    for _key, col in master.vi.columns(T_KC) + master.vi.columns(Y):
        model.integer[col] = True
        model.upper[col] = 1.0
    milp = MilpParams(time_limit=params.stage2_time_limit, gap_tol=params.milp.gap_tol,
                      int_tol=params.milp.int_tol, node_limit=params.milp.node_limit,
                      lp=params.milp.lp)
    result = solve_milp(model, milp)
    if not result.has_solution:
        raise Stage2Failure(f"受限模式 MILP 无可行解 ({result.status.value})")

    blocks = []
    for (k, c), col in master.vi.columns(T_KC):
        if result.x[col] > 0.5:
            blocks.append(pool.patterns(k)[c].embedding)
    y_v = {(v,): float(round(result.x[col])) for (v,), col in master.vi.columns(Y)}
    solution = SliceSolution.merge(blocks, y_v=y_v)
    logger.info("第二阶段: 目标值 %.6g (%s, %d 个节点)", result.objective,
                result.status.value, result.nodes)
    return solution


def run_ccg(inst: NetworkInstance, params: Optional[CcgParams] = None,
            stage2: bool = True) -> CcgResult:
    """执行两阶段列生成。

    Args:
        inst (NetworkInstance): 实例。
        params (Optional[CcgParams]): 参数。
        stage2 (bool): False 时只做第一阶段，用于求主问题 LP 的界。

    Returns:
        CcgResult: status 为 SOLVED / ITER_LIMIT 时带有通过校验的完整解。

    Raises:
        NumericalFailure: 求解器数值失败，信息中带迭代号。
    """
    params = params or CcgParams()
    started = time.monotonic()
    deadline = started + params.stage1_time_limit
    result = CcgResult(status=CcgStatus.SOLVED)

    try:
        pool = initialize_columns(inst, params.milp, params.validation)
    except InfeasibleService as e:
        logger.info("初始化: %s", e)
        result.status = CcgStatus.INFEASIBLE
        result.infeasible_service = e.service
        result.stage1_time = time.monotonic() - started
        return result
    master = MasterProblem(inst, pool)

    status = CcgStatus.ITER_LIMIT
    last_ray = None
    ray_repeats = 0
    executor = ProcessPoolExecutor(params.pricing_workers) if params.pricing_workers > 1 else None
    try:
        for it in range(1, params.iter_max + 1):
            result.iterations = it
            try:
                outcome = master.solve(params.milp.lp)
                if outcome.status is LpStatus.UNBOUNDED:
                    raise NumericalFailure("受限主问题无界")
                duals = master.dual_prices(outcome)
                if duals.is_ray:
                    ray = np.round(outcome.farkas, 9).tobytes()
                    ray_repeats = ray_repeats + 1 if ray == last_ray else 1
                    last_ray = ray
                    if ray_repeats >= params.ray_repeat_cap:
                        logger.info("第 %d 轮: 同一射线连续出现 %d 次", it, ray_repeats)
                        status = CcgStatus.INFEASIBLE
                        break
                else:
                    result.master_value = outcome.objective
                    last_ray, ray_repeats = None, 0
                outcomes = _price_all(inst, pool, duals, params, deadline, it, executor)
            except NumericalFailure as e:
                raise NumericalFailure(str(e), context=f"cCG iteration {it}") from e

            added = 0
            for out in outcomes:
                result.milp_pricing_solves += int(out.milp_used)
                result.pricing_trace.append(out.trace_row(it))
                if out.found:
                    c = pool.add(out.pattern)
                    if c >= 0:
                        master.add_pattern(c, out.pattern)
                        added += 1
                        if out.pattern.source is PatternSource.LP_RECOVERED:
                            result.lp_recovered += 1
            result.iteration_trace.append({
                'iteration': it,
                'master_value': math.nan if duals.is_ray else outcome.objective,
                'ray': duals.is_ray,
                'columns_added': added,
                'milp_pricing_solves': sum(int(o.milp_used) for o in outcomes),
                'wall_time': time.monotonic() - started,
            })
            logger.info("第 %d 轮: 主问题 %s, 新增 %d 列", it,
                        "不可行" if duals.is_ray else f"{outcome.objective:.6g}", added)
            if added == 0:
                status = CcgStatus.INFEASIBLE if duals.is_ray else CcgStatus.SOLVED
                break
            if time.monotonic() > deadline:
                logger.info("第一阶段超时，按迭代上限处理")
                break
    finally:
        if executor is not None:
            executor.shutdown()

    if status is CcgStatus.ITER_LIMIT:
        final = master.solve(params.milp.lp)
        if final.status is LpStatus.OPTIMAL:
            result.master_value = final.objective
    result.columns = pool.counts()
    result.stage1_time = time.monotonic() - started
    if status is CcgStatus.INFEASIBLE or not stage2:
        result.status = status
        return result

    stage2_start = time.monotonic()
    try:
        solution = solve_stage2(pool, inst, params)
    except Stage2Failure as e:
        logger.warning("%s", e)
        result.status = CcgStatus.STAGE2_FAILED
        result.stage2_time = time.monotonic() - stage2_start
        return result
    result.stage2_time = time.monotonic() - stage2_start
    report = validate_solution(inst, solution, params.validation)
    if not report.passed:
        raise NumericalFailure(f"第二阶段解未通过校验: {', '.join(report.failures())}",
                               context="cCG stage 2")
    result.status = status
    result.solution = solution
    result.stage2_objective = evaluate_objective(inst, solution)
    return result
