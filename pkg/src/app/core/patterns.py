"""业务模式: 单个业务的一种完整嵌入(放置 + 路由)及其聚合参数。"""

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

from .formulations.slice_solution import SliceSolution
from .instance import NetworkInstance
from .validation import ValidationParams, strip_cycles, validate_solution
from ..utils.constants import PatternSource
from ..utils.exceptions import InvalidPatternError, SlicingError

logger = logging.getLogger(__name__)

HASH_DIGITS = 9


@dataclass
class Pattern:
    """业务 k 的一个模式。

    Attributes:
        service (int): 业务下标。
        chi (Dict[str, float]): 云节点是否被使用(0/1)。
        rate_v (Dict[str, float]): 云节点上承载的处理速率 Σ_s λ_s x_vks。
        rate_ij (Dict[Tuple[str, str], float]): 链路上承载的速率 Σ_s λ_s Σ_p r_ijksp。
        embedding (SliceSolution): 该业务的完整嵌入，第二阶段据此还原路由。
        iteration (int): 产生该模式的迭代号(初始化为 0)。
        source (PatternSource): 产生方式。
    """
    service: int
    chi: Dict[str, float]
    rate_v: Dict[str, float]
    rate_ij: Dict[Tuple[str, str], float]
    embedding: SliceSolution = field(repr=False, default_factory=SliceSolution)
    iteration: int = 0
    source: PatternSource = PatternSource.INIT

    @property
    def key(self) -> str:
        return pattern_hash(self.service, self.chi, self.rate_v, self.rate_ij)

    def routed_rate(self) -> float:
        return sum(self.rate_ij.values())


def pattern_hash(service: int, chi, rate_v, rate_ij) -> str:
    """(χ, R_v, R_ij) 四舍五入到 1e-9 后的 SHA-1 摘要，忽略零项。"""
    def norm(table) -> List:
        return sorted((tuple(key) if isinstance(key, tuple) else (key,), round(val, HASH_DIGITS))
                      for key, val in table.items() if round(val, HASH_DIGITS) != 0.0)
    text = repr((service, norm(chi), norm(rate_v), norm(rate_ij)))
    return hashlib.sha1(text.encode('utf-8')).hexdigest()


def pattern_from_solution(inst: NetworkInstance, block: SliceSolution, k: int,
                          iteration: int = 0, source: PatternSource = PatternSource.INIT,
                          params: Optional[ValidationParams] = None) -> Pattern:
    """由单业务整数解计算模式参数。

    Args:
        inst (NetworkInstance): 实例。
        block (SliceSolution): 业务 k 的解(可为完整解，只取 k 的部分)。
        k (int): 业务下标。
        iteration (int): 迭代号。
        source (PatternSource): 来源。
        params (Optional[ValidationParams]): 校验容差。

    Returns:
        Pattern: 模式。

    Raises:
        InvalidPatternError: 该解不满足业务 k 的约束。
    """
    block = block.service_block(k)
    report = validate_solution(inst, block, params, services=[k])
    if not report.passed:
        raise InvalidPatternError(k, report.failures())

    svc = inst.services[k]
    chi = {v: float(round(block.x_vk.get((v, k), 0.0))) for v in inst.cloud_ids}
    rate_v = {v: sum(svc.rates[s] * block.x_vks.get((v, k, s), 0.0) for s in svc.functions)
              for v in inst.cloud_ids}
    rate_ij: Dict[Tuple[str, str], float] = {}
    for (i, j, kk, s, p), val in block.r_ijksp.items():
        if val:
            rate_ij[(i, j)] = rate_ij.get((i, j), 0.0) + svc.rates[s] * val
    return Pattern(service=k, chi=chi, rate_v=rate_v, rate_ij=rate_ij, embedding=block,
                   iteration=iteration, source=source)


def enumerate_patterns(inst: NetworkInstance, k: int, limit: int = 30,
                       params: Optional[ValidationParams] = None) -> List[Pattern]:
    """穷举业务 k 的单路径嵌入(每条虚拟链路一条初等路径)。

    只在链路容量宽松的小实例上作为定价的对照；多路径分流得到的模式不在其中。

    Raises:
        SlicingError: 候选嵌入数超过 limit。
    """
    svc = inst.services[k]
    graph = nx.DiGraph()
    graph.add_nodes_from(inst.nodes)
    graph.add_edges_from(inst.link_keys)
    hosts = [[v for v in inst.cloud_ids if svc.stage(s).allowed(v)] for s in svc.functions]

    found: Dict[str, Pattern] = {}
    candidates = 0
    for placement in itertools.product(*hosts):
        ends = [svc.source, *placement, svc.dest]
        routes = []
        for s in svc.segments:
            a, b = ends[s], ends[s + 1]
            routes.append([[a]] if a == b else list(nx.all_simple_paths(graph, a, b)))
        for choice in itertools.product(*routes):
            candidates += 1
            if candidates > limit:
                raise SlicingError(f"业务 {k} 的候选嵌入超过 {limit} 个")
            block = _single_path_block(inst, k, placement, choice)
            try:
                pattern = pattern_from_solution(inst, block, k, params=params)
            except InvalidPatternError:
                continue
            found.setdefault(pattern.key, pattern)
    logger.debug("业务 %d: %d 个候选嵌入, %d 个可行模式", k, candidates, len(found))
    return list(found.values())


def _single_path_block(inst: NetworkInstance, k: int, placement, routes) -> SliceSolution:
    block = SliceSolution()
    for v in placement:
        block.y_v[(v,)] = 1.0
        block.x_vk[(v, k)] = 1.0
    for s, v in enumerate(placement, start=1):
        block.x_vks[(v, k, s)] = 1.0
    for s, nodes in enumerate(routes):
        arcs = list(zip(nodes, nodes[1:]))
        for (i, j) in arcs:
            block.z_ijk[(i, j, k)] = 1.0
            for p in inst.paths:
                block.z_ijksp[(i, j, k, s, p)] = 1.0
            block.r_ijksp[(i, j, k, s, 1)] = 1.0
        block.theta_ks[(k, s)] = sum(inst.link_by_key[a].delay for a in arcs)
    return strip_cycles(inst, block)
