"""基于 LP 松弛的分支定界。

- 分支: 在分支优先级最高的分数整数变量中取最分数者(距 0.5 最近)，平局取下标最小者，
  通过收紧变量界实现。子节点用父节点的最优基热启动。
- 节点选择: 找到首个可行解之前深度优先"下潜"，之后按最优界优先。
- 接受可行解前，取整后的向量逐行对原模型复核。复核失败时在仍带微小分数的整数列上继续分支；
  没有可分支的列时该节点记为未解决，结果不再声称最优或不可行。
"""

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Any, List, Mapping, Optional, Tuple

import numpy as np

from .lp_model import BasisState, LpModel, LpParams
from .simplex import solve_lp
from ...utils.constants import LpStatus, MilpStatus, ObjectiveSense
from ...utils.exceptions import NumericalFailure

logger = logging.getLogger(__name__)


@dataclass
class MilpParams:
    """分支定界参数。"""
    time_limit: float = 1800.0
    gap_tol: float = 1e-6
    int_tol: float = 1e-6
    node_limit: Optional[int] = None
    lp: LpParams = field(default_factory=LpParams)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]],
                  lp: Optional[LpParams] = None) -> "MilpParams":
        known = {f.name for f in fields(cls)} - {'lp'}
        kwargs = {k: v for k, v in (data or {}).items() if k in known}
        return cls(lp=lp or LpParams(), **kwargs)


@dataclass
class MilpResult:
    """分支定界结果，objective 与 best_bound 均为原目标方向。"""
    status: MilpStatus
    x: Optional[np.ndarray]
    objective: float
    best_bound: float
    nodes: int
    wall_time: float

    @property
    def has_solution(self) -> bool:
        return self.x is not None


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    depth: int
    basis: Optional[BasisState] = None


def _most_fractional(x: np.ndarray, integer: np.ndarray, priority: np.ndarray,
                     int_tol: float) -> int:
    frac = np.abs(x - np.round(x))
    candidates = integer & (frac > int_tol)
    if not candidates.any():
        return -1
    candidates &= priority == priority[candidates].max()
    # 距 0.5 越近越优先; argmax 返回首个最大值即最小下标
    score = np.where(candidates, frac, -1.0)
    return int(np.argmax(score))


def _accept_incumbent(model: LpModel, x: np.ndarray, integer: np.ndarray,
                      params: MilpParams) -> Optional[np.ndarray]:
    snapped = x.copy()
    snapped[integer] = np.round(snapped[integer])
    lower = np.asarray(model.lower)
    upper = np.asarray(model.upper)
    snapped = np.clip(snapped, lower, upper)
    tol = max(params.lp.tol_feas, params.int_tol)
    scale = 1.0 + abs(model.matrix()).sum(axis=1).A1 + np.abs(model.rhs)
    viol = model.row_violations(snapped)
    if np.any(viol > tol * scale):
        worst = int(np.argmax(viol / scale))
        logger.warning("候选可行解复核失败: 约束 %s 违反 %.3e", model.row_names[worst], viol[worst])
        return None
    return snapped


def solve_milp(model: LpModel, params: Optional[MilpParams] = None) -> MilpResult:
    """求解带整数标记的模型。

    Args:
        model (LpModel): 模型，整数变量须有有限界。
        params (Optional[MilpParams]): 时间限制、间隙与整数容差。

    Returns:
        MilpResult: 求解结果。达到时间或节点上限时，有可行解则为 FEASIBLE，否则 UNKNOWN。

    Raises:
        NumericalFailure: 节点 LP 数值失败，异常信息带节点编号。
    """
    params = params or MilpParams()
    start = time.monotonic()
    integer = np.asarray(model.integer, dtype=bool)
    priority = np.asarray(model.priority, dtype=int)
    lower0 = np.asarray(model.lower, dtype=float)
    upper0 = np.asarray(model.upper, dtype=float)
    if np.any(integer & ~(np.isfinite(lower0) & np.isfinite(upper0))):
        raise ValueError("整数变量必须有有限界")
    minimize = model.sense is ObjectiveSense.MINIMIZE

    def key(obj: float) -> float:
        return obj if minimize else -obj

    def unkey(val: float) -> float:
        return val if minimize else -val

    incumbent: Optional[np.ndarray] = None
    inc_key = math.inf
    global_bound = -math.inf
    nodes_solved = 0
    counter = itertools.count()
    stack: List[_Node] = [_Node(lower0.copy(), upper0.copy(), -math.inf, 0)]
    heap: List[Tuple[float, int, _Node]] = []
    status = None
    gap_closed = False
    unresolved_bound = math.inf

    def prune_tol() -> float:
        return params.gap_tol * (1.0 + abs(inc_key)) if math.isfinite(inc_key) else 0.0

    while stack or heap:
        if time.monotonic() - start > params.time_limit:
            status = MilpStatus.FEASIBLE if incumbent is not None else MilpStatus.UNKNOWN
            break
        if params.node_limit is not None and nodes_solved >= params.node_limit:
            status = MilpStatus.FEASIBLE if incumbent is not None else MilpStatus.UNKNOWN
            break

        if stack:
            node = stack.pop()
        else:
            open_min = heap[0][0]
            global_bound = max(global_bound, min(open_min, inc_key, unresolved_bound))
            if inc_key - global_bound <= prune_tol():
                gap_closed = True
                break
            node = heapq.heappop(heap)[2]
        if node.bound >= inc_key - prune_tol():
            continue

        try:
            outcome = solve_lp(model, params.lp, warm_start=node.basis,
                               bounds=(node.lower, node.upper))
        except NumericalFailure as e:
            raise NumericalFailure(str(e), context=f"B&B node {nodes_solved}") from e
        nodes_solved += 1
        if outcome.status is LpStatus.INFEASIBLE:
            continue
        if outcome.status is LpStatus.UNBOUNDED:
            if nodes_solved == 1:
                return MilpResult(MilpStatus.UNBOUNDED, None, unkey(-math.inf),
                                  unkey(-math.inf), nodes_solved, time.monotonic() - start)
            raise NumericalFailure("子节点 LP 无界", context=f"B&B node {nodes_solved}")
        value = key(outcome.objective)
        if nodes_solved == 1:
            global_bound = value
        if value >= inc_key - prune_tol():
            continue

        j = _most_fractional(outcome.x, integer, priority, params.int_tol)
        if j < 0:
            accepted = _accept_incumbent(model, outcome.x, integer, params)
            if accepted is not None:
                acc_key = key(model.objective_value(accepted))
                if acc_key < inc_key:
                    incumbent, inc_key = accepted, acc_key
                    logger.debug("节点 %d: 新可行解 %.9g", nodes_solved, unkey(inc_key))
                    for pending in stack:
                        heapq.heappush(heap, (pending.bound, next(counter), pending))
                    stack.clear()
                continue
            j = _most_fractional(outcome.x, integer, priority, 0.0)
            if j < 0:
                logger.warning("节点 %d 无法取整也无法分支，搜索不再完整", nodes_solved)
                unresolved_bound = min(unresolved_bound, value)
                continue

        v = outcome.x[j]
        down = _Node(node.lower.copy(), node.upper.copy(), value, node.depth + 1, outcome.basis)
        down.upper[j] = math.floor(v)
        up = _Node(node.lower.copy(), node.upper.copy(), value, node.depth + 1, outcome.basis)
        up.lower[j] = math.ceil(v)
        if incumbent is None:
            # 下潜时先探索离当前值较近的一侧
            first, second = (up, down) if v - math.floor(v) >= 0.5 else (down, up)
            stack.append(second)
            stack.append(first)
        else:
            heapq.heappush(heap, (value, next(counter), down))
            heapq.heappush(heap, (value, next(counter), up))

    wall = time.monotonic() - start
    open_bounds = [n.bound for n in stack] + [entry[0] for entry in heap]
    if math.isfinite(unresolved_bound):
        open_bounds.append(unresolved_bound)
    if status is None and math.isfinite(unresolved_bound):
        status = MilpStatus.FEASIBLE if incumbent is not None else MilpStatus.UNKNOWN
    if status is None:
        status = MilpStatus.OPTIMAL if incumbent is not None else MilpStatus.INFEASIBLE
        if not gap_closed:
            global_bound = inc_key
    elif open_bounds:
        global_bound = max(global_bound, min(open_bounds))
    if incumbent is None:
        bound = math.inf if status is MilpStatus.INFEASIBLE else global_bound
        return MilpResult(status, None, math.nan, unkey(bound), nodes_solved, wall)
    global_bound = min(global_bound, inc_key)
    logger.debug("B&B 结束: %s, 目标 %.9g, 界 %.9g, %d 个节点", status.value,
                 unkey(inc_key), unkey(global_bound), nodes_solved)
    return MilpResult(status, incumbent, unkey(inc_key), unkey(global_bound),
                      nodes_solved, wall)
