"""切片解的独立校验与路径规范化。

校验不复用任何模型行: 放置、激活、容量、逐路径守恒、分流比例、双线性关系、
可靠性(对数空间)与端到端时延(各段取 P 条路径中的最大时延)全部从头计算。

规范化 (strip_cycles) 按流分解把每条路径上的流量还原为一条初等路径并删去环路，
目标值不增且可行性保持。
"""

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .formulations.slice_solution import SliceSolution, evaluate_objective
from .instance import NetworkInstance, flow_balance_rhs, flow_endpoints
from ..utils.constants import ConstraintFamily
from ..utils.exceptions import FlowDecompositionError

logger = logging.getLogger(__name__)

LinkRates = Mapping[Tuple[str, str], float]


@dataclass
class ValidationParams:
    tol_feas: float = 1e-6
    int_tol: float = 1e-6
    reliability_slack: float = 1e-9

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "ValidationParams":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in (data or {}).items() if k in known})


# ---------------------------------------------------------------------------
# 流分解
# ---------------------------------------------------------------------------

@dataclass
class FlowDecomposition:
    """流分解结果。paths 为 (源到汇的节点序列, 速率)，
    cycles 为 (首尾相同的闭合节点序列, 速率)。"""
    paths: List[Tuple[Tuple[str, ...], float]] = field(default_factory=list)
    cycles: List[Tuple[Tuple[str, ...], float]] = field(default_factory=list)

    def superpose(self) -> Dict[Tuple[str, str], float]:
        total: Dict[Tuple[str, str], float] = {}
        for seq, rate in self.paths + self.cycles:
            for a, b in zip(seq, seq[1:]):
                total[(a, b)] = total.get((a, b), 0.0) + rate
        return total


def _divergence(rates: LinkRates) -> Dict[str, float]:
    div: Dict[str, float] = {}
    for (a, b), val in rates.items():
        div[a] = div.get(a, 0.0) + val
        div[b] = div.get(b, 0.0) - val
    return div


def decompose_flow(link_rates: LinkRates, source: str, dest: str,
                   tol: float = 1e-9, tol_feas: float = 1e-7) -> FlowDecomposition:
    """把链路流分解为源-汇路径与环路。

    先沿深度优先找到的源→汇行走剥离路径(速率取行走上的最小值)，
    行走中重复访问节点时先剥离该环；源点流出为零后再剥离剩余环流。

    Args:
        link_rates (LinkRates): {(i,j): 非负速率}。
        source (str): 源节点。
        dest (str): 汇节点；与 source 相同时视为环流。
        tol (float): 小于此值的残余流量视为 0。
        tol_feas (float): 散度检查容差。

    Returns:
        FlowDecomposition: 分解结果。

    Raises:
        FlowDecompositionError: 速率为负或散度不满足前提。
    """
    residual: Dict[Tuple[str, str], float] = {}
    for key, val in link_rates.items():
        if val < -tol_feas:
            raise FlowDecompositionError(f"链路 {key} 速率为负: {val}")
        if val > tol:
            residual[key] = float(val)

    div = _divergence(residual)
    value = div.get(source, 0.0) if source != dest else 0.0
    for node, d in div.items():
        expected = 0.0
        if source != dest and node == source:
            expected = value
        elif source != dest and node == dest:
            expected = -value
        if abs(d - expected) > tol_feas * (1.0 + abs(value)):
            raise FlowDecompositionError(f"节点 {node} 的散度 {d:.3e} 不符合预期 {expected:.3e}")
    if value < -tol_feas:
        raise FlowDecompositionError(f"源点净流出为负: {value}")

    result = FlowDecomposition()

    def out_arc(node: str) -> Optional[Tuple[str, str]]:
        for key, val in residual.items():
            if key[0] == node and val > tol:
                return key
        return None

    def peel(seq: List[str], into: List) -> None:
        arcs = list(zip(seq, seq[1:]))
        rate = min(residual[a] for a in arcs)
        for a in arcs:
            residual[a] -= rate
            if residual[a] <= tol:
                del residual[a]
        into.append((tuple(seq), rate))

    def walk(start: str, stop: Optional[str]) -> bool:
        seq = [start]
        position = {start: 0}
        node = start
        while True:
            arc = out_arc(node)
            if arc is None:
                return False
            nxt = arc[1]
            if nxt == stop:
                peel(seq + [nxt], result.paths)
                return True
            if nxt in position:
                peel(seq[position[nxt]:] + [nxt], result.cycles)
                return True
            position[nxt] = len(seq)
            seq.append(nxt)
            node = nxt

    def net_out(node: str) -> float:
        return sum(v for (a, b), v in residual.items() if a == node) - \
            sum(v for (a, b), v in residual.items() if b == node)

    if source != dest:
        while net_out(source) > tol:
            if not walk(source, dest):
                break
    while residual:
        first = next(iter(residual))
        if not walk(first[0], None):
            break
    return result


def cancel_cycles(link_rates: LinkRates, tol: float = 1e-9) -> Dict[Tuple[str, str], float]:
    """从任意散度模式的流中反复减去正流量环，返回无环的流。"""
    rates = {key: float(val) for key, val in link_rates.items()}
    while True:
        graph = nx.DiGraph()
        graph.add_edges_from(key for key, val in rates.items() if val > tol)
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            return rates
        amount = min(rates[(a, b)] for a, b in cycle)
        for a, b in cycle:
            rates[(a, b)] = 0.0 if rates[(a, b)] - amount <= tol else rates[(a, b)] - amount


# ---------------------------------------------------------------------------
# 端到端指标
# ---------------------------------------------------------------------------

def _path_delay(inst: NetworkInstance, sol: SliceSolution, k: int, s: int, p: int) -> float:
    return sum(link.delay * sol.z_ijksp.get((link.tail, link.head, k, s, p), 0.0)
               for link in inst.links)


def e2e_metrics(inst: NetworkInstance, sol: SliceSolution, k: int) -> Tuple[float, float]:
    """计算业务 k 的端到端时延与可靠性。

    时延为已放置功能的处理时延之和加上各虚拟链路 P 条路径时延的最大值；
    可靠性为所用云节点与所用链路可靠性之积(按对数求和)。
    """
    svc = inst.services[k]
    delay = 0.0
    for v in inst.cloud_ids:
        for s in svc.functions:
            delay += svc.stage(s).delay_at(v) * sol.x_vks.get((v, k, s), 0.0)
    for s in svc.segments:
        delay += max((_path_delay(inst, sol, k, s, p) for p in inst.paths), default=0.0)
    log_rel = 0.0
    for v in inst.cloud_ids:
        if sol.x_vk.get((v, k), 0.0) >= 0.5:
            log_rel += math.log(inst.cloud_by_id[v].reliability)
    for link in inst.links:
        if sol.z_ijk.get((link.tail, link.head, k), 0.0) >= 0.5:
            log_rel += math.log(link.reliability)
    return delay, math.exp(log_rel)


def path_fraction(inst: NetworkInstance, sol: SliceSolution, k: int, s: int, p: int) -> float:
    """r^{k,s,p}: 有 r_ksp 时直接取值，否则取该路径上链路速率的最大值。"""
    if sol.r_ksp is not None and (k, s, p) in sol.r_ksp:
        return sol.r_ksp[(k, s, p)]
    return max((sol.r_ijksp.get((i, j, k, s, p), 0.0) for (i, j) in inst.link_keys), default=0.0)


# ---------------------------------------------------------------------------
# 规范化
# ---------------------------------------------------------------------------

def _services_in(sol: SliceSolution) -> List[int]:
    return sorted({key[1] for key in sol.x_vks} | {key[1] for key in sol.x_vk})


def _segment_paths(inst: NetworkInstance, sol: SliceSolution, k: int, s: int,
                   start: str, end: str, params: ValidationParams
                   ) -> Tuple[Dict[int, Tuple[Tuple[str, ...], float]], float]:
    """把 (k,s) 的流量分配到路径槽，返回 ({p: (节点序列, 速率)}, 删除的环流量)。

    优先逐槽分解；某槽不是单一路径时改为分解聚合流再依次放入各槽。
    """
    try:
        slots: Dict[int, Tuple[Tuple[str, ...], float]] = {}
        removed = 0.0
        for p in inst.paths:
            rates = {(i, j): sol.r_ijksp.get((i, j, k, s, p), 0.0) for (i, j) in inst.link_keys}
            dec = decompose_flow(rates, start, end, tol_feas=params.tol_feas)
            removed += sum(rate * (len(seq) - 1) for seq, rate in dec.cycles)
            if len(dec.paths) > 1:
                raise FlowDecompositionError(f"业务 {k} 段 {s} 路径 {p} 的流包含多条路径")
            if dec.paths:
                slots[p] = dec.paths[0]
        return slots, removed
    except FlowDecompositionError as exc:
        logger.debug("逐路径分解失败(%s)，改用聚合流", exc)

    total: Dict[Tuple[str, str], float] = {}
    for (i, j) in inst.link_keys:
        total[(i, j)] = sum(sol.r_ijksp.get((i, j, k, s, p), 0.0) for p in inst.paths)
    dec = decompose_flow(total, start, end, tol_feas=params.tol_feas)
    if len(dec.paths) > inst.path_budget:
        raise FlowDecompositionError(
            f"业务 {k} 段 {s} 需要 {len(dec.paths)} 条路径，超过 P={inst.path_budget}")
    removed = sum(rate * (len(seq) - 1) for seq, rate in dec.cycles)
    return {p: path for p, path in zip(inst.paths, dec.paths)}, removed


def strip_cycles(inst: NetworkInstance, sol: SliceSolution,
                 params: Optional[ValidationParams] = None) -> SliceSolution:
    """删除环流，使每个 (k,s,p) 的流为空或一条速率处处相等的初等路径。

    无速率的路径槽复制同一虚拟链路上第一条有流路径的指示变量；
    起止节点相同的虚拟链路清空，分流比例平均分配。z_ijk 与 theta_ks 随之重算。

    Args:
        inst (NetworkInstance): 实例。
        sol (SliceSolution): 整数可行解(可只含部分业务)。
        params (Optional[ValidationParams]): 容差。

    Returns:
        SliceSolution: 规范化后的新解。

    Raises:
        FlowDecompositionError: 流量无法放入 P 条路径(输入不可行)。
    """
    params = params or ValidationParams()
    out = sol.copy()
    out.r_ksp = {}
    removed = 0.0
    for k in _services_in(sol):
        svc = inst.services[k]
        for key in [key for key in out.z_ijk if key[2] == k]:
            out.z_ijk[key] = 0.0
        for s in svc.segments:
            start, end = flow_endpoints(inst, k, s, sol.x_vks)
            paths, cycle_flow = _segment_paths(inst, sol, k, s, start, end, params)
            removed += cycle_flow * svc.rates[s]
            template = next(iter(paths.values()))[0] if paths else ()
            for p in inst.paths:
                seq, rate = paths.get(p, (template if start != end else (), 0.0))
                arcs = set(zip(seq, seq[1:]))
                for (i, j) in inst.link_keys:
                    on = (i, j) in arcs
                    out.z_ijksp[(i, j, k, s, p)] = 1.0 if on else 0.0
                    out.r_ijksp[(i, j, k, s, p)] = rate if on and p in paths else 0.0
                    if on:
                        out.z_ijk[(i, j, k)] = 1.0
                if start == end:
                    out.r_ksp[(k, s, p)] = 1.0 / inst.path_budget
                else:
                    out.r_ksp[(k, s, p)] = rate if p in paths else 0.0
            out.theta_ks[(k, s)] = max(_path_delay(inst, out, k, s, p) for p in inst.paths)
    if removed > 0:
        logger.debug("删除环流，路由速率减少 %.6g", removed)
    return out


# ---------------------------------------------------------------------------
# 校验
# ---------------------------------------------------------------------------

@dataclass
class FamilyResult:
    passed: bool = True
    worst_residual: float = 0.0
    detail: str = ""

    def record(self, residual: float, tol: float, where: str) -> None:
        if residual > self.worst_residual:
            self.worst_residual = residual
            if residual > tol:
                self.detail = where
        if residual > tol:
            self.passed = False


@dataclass
class ServiceMetrics:
    service: int
    delay: float
    reliability: float


@dataclass
class ValidationReport:
    """按约束族汇总的校验结果。"""
    families: Dict[str, FamilyResult]
    services: List[ServiceMetrics]
    objective: float

    @property
    def passed(self) -> bool:
        return all(res.passed for res in self.families.values())

    def failures(self) -> List[str]:
        return [name for name, res in self.families.items() if not res.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'objective': self.objective,
            'families': {name: {'passed': r.passed, 'worst_residual': r.worst_residual,
                                'detail': r.detail}
                         for name, r in self.families.items()},
            'services': [{'service': m.service, 'delay': m.delay,
                          'reliability': m.reliability} for m in self.services],
        }


def validate_solution(inst: NetworkInstance, sol: SliceSolution,
                      params: Optional[ValidationParams] = None,
                      services: Optional[Sequence[int]] = None) -> ValidationReport:
    """独立校验一个整数解。

    不携带速率的路径槽不检查逐路径守恒(该槽未被使用)，但其指示变量仍计入时延。

    Args:
        inst (NetworkInstance): 实例。
        sol (SliceSolution): 整数解。
        params (Optional[ValidationParams]): 容差。
        services (Optional[Sequence[int]]): 只校验这些业务；容量类约束只计入这些业务。

    Returns:
        ValidationReport: 校验报告。
    """
    params = params or ValidationParams()
    tol = params.tol_feas
    ks = list(range(len(inst.services))) if services is None else list(services)
    fam = {f.value: FamilyResult() for f in ConstraintFamily}

    def check(family: ConstraintFamily, residual: float, where: str) -> None:
        fam[family.value].record(residual, tol, where)

    # 取值范围与整数性
    for name in ('y_v', 'x_vk', 'x_vks', 'z_ijk', 'z_ijksp'):
        for key, val in getattr(sol, name).items():
            if name != 'y_v' and key[1 if name.startswith('x') else 2] not in ks:
                continue
            fam[ConstraintFamily.BOUNDS.value].record(
                abs(val - round(val)) if -tol <= val <= 1 + tol else abs(val),
                params.int_tol, f"{name}{key}")
    for key, val in sol.r_ijksp.items():
        check(ConstraintFamily.BOUNDS, max(0.0, -val, val - 1.0), f"r_ijksp{key}")

    for k in ks:
        svc = inst.services[k]
        for s in svc.functions:
            total = sum(sol.x_vks.get((v, k, s), 0.0) for v in inst.cloud_ids)
            check(ConstraintFamily.PLACEMENT, abs(total - 1.0), f"placement[{k},{s}]")
            for v in inst.cloud_ids:
                if not svc.stage(s).allowed(v):
                    check(ConstraintFamily.PLACEMENT, sol.x_vks.get((v, k, s), 0.0),
                          f"disallowed[{v},{k},{s}]")
                check(ConstraintFamily.ACTIVATION,
                      sol.x_vks.get((v, k, s), 0.0) - sol.x_vk.get((v, k), 0.0),
                      f"node_use[{v},{k},{s}]")
        for v in inst.cloud_ids:
            check(ConstraintFamily.ACTIVATION, sol.x_vk.get((v, k), 0.0) - sol.y_v.get((v,), 0.0),
                  f"activation[{v},{k}]")

    for v in inst.cloud_ids:
        load = sum(inst.services[k].rates[s] * sol.x_vks.get((v, k, s), 0.0)
                   for k in ks for s in inst.services[k].functions)
        check(ConstraintFamily.NODE_CAPACITY,
              load - inst.cloud_by_id[v].capacity * sol.y_v.get((v,), 0.0),
              f"node_capacity[{v}]")

    for link in inst.links:
        load = sum(inst.services[k].rates[s] * sol.r_ijksp.get((link.tail, link.head, k, s, p), 0.0)
                   for k in ks for s in inst.services[k].segments for p in inst.paths)
        check(ConstraintFamily.LINK_CAPACITY, load - link.capacity,
              f"link_capacity[{link.tail},{link.head}]")

    for k in ks:
        svc = inst.services[k]
        for s in svc.segments:
            start, end = flow_endpoints(inst, k, s, sol.x_vks)
            split = 0.0
            for p in inst.paths:
                frac = path_fraction(inst, sol, k, s, p)
                split += frac
                carries = any(sol.r_ijksp.get((i, j, k, s, p), 0.0) > tol for (i, j) in inst.link_keys)
                if carries or (sol.r_ksp is not None and frac > tol):
                    for i in inst.nodes:
                        net = sum(sol.z_ijksp.get((a, b, k, s, p), 0.0) for (a, b) in inst.in_links[i])
                        net -= sum(sol.z_ijksp.get((a, b, k, s, p), 0.0) for (a, b) in inst.out_links[i])
                        rhs = flow_balance_rhs(inst, k, s, i, sol.x_vks)
                        check(ConstraintFamily.FLOW_CONSERVATION, abs(net - rhs),
                              f"flow[{i},{k},{s},{p}]")
                for (i, j) in inst.link_keys:
                    r = sol.r_ijksp.get((i, j, k, s, p), 0.0)
                    z = sol.z_ijksp.get((i, j, k, s, p), 0.0)
                    check(ConstraintFamily.BILINEAR, abs(r - frac * z), f"bilinear[{i},{j},{k},{s},{p}]")
                    z_k = sol.z_ijk.get((i, j, k), 0.0)
                    check(ConstraintFamily.LINK_USAGE, z - z_k, f"link_usage[{i},{j},{k},{s},{p}]")
                    if z_k < 0.5:
                        check(ConstraintFamily.LINK_USAGE, r, f"unmarked_link[{i},{j},{k},{s},{p}]")
            if start != end:
                check(ConstraintFamily.PATH_SPLIT, abs(split - 1.0), f"path_split[{k},{s}]")

    metrics = []
    for k in ks:
        svc = inst.services[k]
        delay, reliability = e2e_metrics(inst, sol, k)
        metrics.append(ServiceMetrics(k, delay, reliability))
        check(ConstraintFamily.DELAY, delay - svc.theta, f"delay[{k}]")
        log_gap = math.log(svc.gamma) - math.log(reliability)
        fam[ConstraintFamily.RELIABILITY.value].record(
            log_gap, params.reliability_slack, f"reliability[{k}]")

    return ValidationReport(families=fam, services=metrics,
                            objective=evaluate_objective(inst, sol))
