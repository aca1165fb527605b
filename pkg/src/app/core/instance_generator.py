"""随机实例生成器。

生成强连通的随机有向图(双向随机生成树 + 均匀补充弧)，并按实验设置
抽取容量、时延、可靠性和业务参数。相同 (配置, 种子) 总是得到相同实例。
"""

import logging
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from .instance import (CloudNode, FunctionStage, Link, NetworkInstance, ServiceRequest,
                       instance_to_digraph, shortest_path_metrics)
from ..utils.constants import DEFAULT_PATH_BUDGET, DEFAULT_SIGMA
from ..utils.exceptions import GeneratorConfigError

logger = logging.getLogger(__name__)


@dataclass
class GeneratorConfig:
    """生成器参数。区间均为闭区间 [low, high]。"""
    num_nodes: int = 20
    num_arcs: Optional[int] = None
    density: Optional[float] = None
    num_cloud: int = 4
    num_services: int = 5
    chain_length: int = 3
    num_function_types: int = 5
    cloud_capacity: Tuple[float, float] = (50.0, 100.0)
    link_capacity: Tuple[float, float] = (7.0, 77.0)
    nfv_delay_choices: Tuple[float, ...] = (3.0, 4.0, 5.0, 6.0)
    link_delay_choices: Tuple[float, ...] = (1.0, 2.0)
    cloud_reliability: Tuple[float, float] = (0.991, 0.995)
    link_reliability: Tuple[float, float] = (0.995, 0.999)
    rate: Tuple[int, int] = (1, 11)
    theta_base: float = 20.0
    theta_per_delay: float = 3.0
    theta_alpha: Tuple[float, float] = (0.0, 5.0)
    gamma_base: float = 0.99 ** 2
    gamma_power: float = 4.0
    path_budget: int = DEFAULT_PATH_BUDGET
    sigma: float = DEFAULT_SIGMA

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        """由配置字典构造，未知键报错。范围覆盖可以放在 "ranges" 子对象中。"""
        flat = dict(data)
        flat.update(flat.pop('ranges', {}) or {})
        known = {f.name for f in fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise GeneratorConfigError(f"未知的生成器参数: {sorted(unknown)}")
        kwargs = {}
        for key, value in flat.items():
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)

    def resolved_arcs(self) -> int:
        if self.num_arcs is not None:
            return int(self.num_arcs)
        if self.density is not None:
            return int(round(self.density * self.num_nodes * (self.num_nodes - 1)))
        return 4 * self.num_nodes

    def check(self) -> None:
        """检查参数组合的合法性。

        Raises:
            GeneratorConfigError: 参数不合法。
        """
        n = self.num_nodes
        if n < 3:
            raise GeneratorConfigError("至少需要 3 个节点")
        if self.num_cloud > n:
            raise GeneratorConfigError(f"云节点数 {self.num_cloud} 超过节点数 {n}")
        if self.num_cloud < 1:
            raise GeneratorConfigError("至少需要一个云节点")
        if n - self.num_cloud < 2:
            raise GeneratorConfigError("非云节点不足以放置源和公共目的节点")
        arcs = self.resolved_arcs()
        if arcs < 2 * (n - 1):
            raise GeneratorConfigError(f"弧数 {arcs} 低于强连通所需的 {2 * (n - 1)}")
        if arcs > n * (n - 1):
            raise GeneratorConfigError(f"弧数 {arcs} 超过完全有向图的 {n * (n - 1)}")
        if self.num_services < 1:
            raise GeneratorConfigError("至少需要一个业务")
        if self.chain_length < 1 or self.chain_length > self.num_function_types:
            raise GeneratorConfigError("功能链长度必须在 [1, 功能类型数] 内")
        if self.path_budget < 1:
            raise GeneratorConfigError("P 必须 ≥ 1")
        if not self.sigma > 0:
            raise GeneratorConfigError("σ 必须为正")


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _build_arcs(rng: np.random.Generator, n: int, arcs: int) -> List[Tuple[int, int]]:
    order = rng.permutation(n)
    chosen: List[Tuple[int, int]] = []
    present = set()
    for pos in range(1, n):
        child = int(order[pos])
        parent = int(order[rng.integers(0, pos)])
        for arc in ((parent, child), (child, parent)):
            chosen.append(arc)
            present.add(arc)
    candidates = [(i, j) for i in range(n) for j in range(n) if i != j and (i, j) not in present]
    extra = arcs - len(chosen)
    if extra > 0:
        picks = rng.choice(len(candidates), size=extra, replace=False)
        chosen.extend(candidates[int(p)] for p in sorted(picks))
    return chosen


def generate_instance(config: GeneratorConfig, seed: int) -> NetworkInstance:
    """生成随机实例。

    Args:
        config (GeneratorConfig): 生成参数。
        seed (int): 64 位随机种子。

    Returns:
        NetworkInstance: 校验后的实例，名称为 ``gen-<seed>``。

    Raises:
        GeneratorConfigError: 参数组合非法。
    """
    config.check()
    rng = np.random.default_rng(seed)
    n = config.num_nodes
    names = [f"n{i}" for i in range(n)]

    arcs = _build_arcs(rng, n, config.resolved_arcs())
    links = []
    for i, j in arcs:
        links.append(Link(
            tail=names[i], head=names[j],
            capacity=_uniform(rng, config.link_capacity),
            delay=float(rng.choice(config.link_delay_choices)),
            reliability=_uniform(rng, config.link_reliability)))

    cloud_idx = sorted(int(c) for c in rng.choice(n, size=config.num_cloud, replace=False))
    clouds = tuple(
        CloudNode(names[c], _uniform(rng, config.cloud_capacity),
                  _uniform(rng, config.cloud_reliability))
        for c in cloud_idx)
    plain = [names[i] for i in range(n) if i not in set(cloud_idx)]

    # 每个 (功能类型, 云节点) 抽一次时延
    function_types = [f"f{t + 1}" for t in range(config.num_function_types)]
    nfv_table: Dict[str, Dict[str, float]] = {
        f: {c.id: float(rng.choice(config.nfv_delay_choices)) for c in clouds}
        for f in function_types}

    dest = plain[int(rng.integers(0, len(plain)))]
    sources = [v for v in plain if v != dest]

    drafts = []
    for k in range(config.num_services):
        source = sources[int(rng.integers(0, len(sources)))]
        picked = rng.choice(config.num_function_types, size=config.chain_length, replace=False)
        chain = tuple(FunctionStage(nfv_delay=dict(nfv_table[function_types[int(t)]]),
                                    function=function_types[int(t)])
                      for t in picked)
        rate = float(rng.integers(config.rate[0], config.rate[1] + 1))
        alpha = _uniform(rng, config.theta_alpha)
        drafts.append((source, chain, rate, alpha))

    # 先用占位阈值构造实例以便计算最短路
    placeholder = tuple(
        ServiceRequest(source=src, dest=dest, chain=chain,
                       rates=tuple([rate] * (config.chain_length + 1)), theta=1.0, gamma=1.0,
                       name=f"s{k}")
        for k, (src, chain, rate, _alpha) in enumerate(drafts))
    base = NetworkInstance(nodes=tuple(names), links=tuple(links), cloud_nodes=clouds,
                           services=placeholder, path_budget=config.path_budget,
                           sigma=config.sigma, name=f"gen-{seed}")
    if not nx.is_strongly_connected(instance_to_digraph(base)):
        raise GeneratorConfigError("生成的有向图不是强连通的")

    services = []
    for k, (svc, (_src, _chain, _rate, alpha)) in enumerate(zip(placeholder, drafts)):
        dist, dist_rel = shortest_path_metrics(base, k)
        theta = config.theta_base + config.theta_per_delay * dist + alpha
        gamma = min(1.0, config.gamma_base * dist_rel ** config.gamma_power)
        services.append(ServiceRequest(source=svc.source, dest=svc.dest, chain=svc.chain,
                                       rates=svc.rates, theta=theta, gamma=gamma,
                                       name=svc.name))
    logger.debug("生成实例 seed=%s: %d 节点, %d 弧, %d 云节点, %d 业务",
                 seed, n, len(links), len(clouds), len(services))
    return NetworkInstance(nodes=base.nodes, links=base.links, cloud_nodes=base.cloud_nodes,
                           services=tuple(services), path_budget=base.path_budget,
                           sigma=base.sigma, name=base.name)
