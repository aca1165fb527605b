"""网络切片实例的领域模型。

该模块定义了底层网络(节点、有向链路、云节点)与业务请求(服务功能链)的
不可变数据类型，以及实例文档的读写、最短路指标和流守恒右端项 b_i^{k,s}(x)。
"""

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Tuple

import networkx as nx

from ..utils.constants import DEFAULT_PATH_BUDGET, DEFAULT_SIGMA
from ..utils.exceptions import InstanceParseError, InstanceValidationError, UnreachableError

NodeId = str
LinkKey = Tuple[NodeId, NodeId]


@dataclass(frozen=True)
class Link:
    """有向链路 (i, j)。"""
    tail: NodeId
    head: NodeId
    capacity: float
    delay: float
    reliability: float

    @property
    def key(self) -> LinkKey:
        return (self.tail, self.head)


@dataclass(frozen=True)
class CloudNode:
    """可承载虚拟网络功能的云节点。"""
    id: NodeId
    capacity: float
    reliability: float


@dataclass(frozen=True)
class FunctionStage:
    """服务功能链中的一个功能。

    Attributes:
        nfv_delay (Mapping[NodeId, Optional[float]]): 每个云节点上的处理时延，
            None 表示该节点不允许承载此功能。
        function (str): 功能类型名称，仅用于展示。
    """
    nfv_delay: Mapping[NodeId, Optional[float]]
    function: str = ""

    def allowed(self, v: NodeId) -> bool:
        return self.nfv_delay.get(v) is not None

    def delay_at(self, v: NodeId) -> float:
        value = self.nfv_delay.get(v)
        return 0.0 if value is None else float(value)


@dataclass(frozen=True)
class ServiceRequest:
    """一个业务请求 k。

    rates[s] 为经过第 s 个功能处理后的数据速率 λ_s^k，s = 0..ℓ_k。
    """
    source: NodeId
    dest: NodeId
    chain: Tuple[FunctionStage, ...]
    rates: Tuple[float, ...]
    theta: float
    gamma: float
    name: str = ""

    @property
    def length(self) -> int:
        """功能链长度 ℓ_k。"""
        return len(self.chain)

    @property
    def functions(self) -> range:
        """功能编号集合 F^k = 1..ℓ_k。"""
        return range(1, self.length + 1)

    @property
    def segments(self) -> range:
        """虚拟链路编号 s = 0..ℓ_k。"""
        return range(0, self.length + 1)

    def stage(self, s: int) -> FunctionStage:
        """返回第 s 个功能(s 从 1 开始)。"""
        return self.chain[s - 1]


@dataclass(frozen=True)
class NetworkInstance:
    """完整的网络切片问题实例。"""
    nodes: Tuple[NodeId, ...]
    links: Tuple[Link, ...]
    cloud_nodes: Tuple[CloudNode, ...]
    services: Tuple[ServiceRequest, ...]
    path_budget: int = DEFAULT_PATH_BUDGET
    sigma: float = DEFAULT_SIGMA
    name: str = ""

    def __post_init__(self):
        _validate_instance(self)

    @cached_property
    def cloud_ids(self) -> Tuple[NodeId, ...]:
        return tuple(c.id for c in self.cloud_nodes)

    @cached_property
    def cloud_by_id(self) -> Dict[NodeId, CloudNode]:
        return {c.id: c for c in self.cloud_nodes}

    @cached_property
    def link_keys(self) -> Tuple[LinkKey, ...]:
        return tuple(link.key for link in self.links)

    @cached_property
    def link_by_key(self) -> Dict[LinkKey, Link]:
        return {link.key: link for link in self.links}

    @cached_property
    def out_links(self) -> Dict[NodeId, List[LinkKey]]:
        table: Dict[NodeId, List[LinkKey]] = {i: [] for i in self.nodes}
        for link in self.links:
            table[link.tail].append(link.key)
        return table

    @cached_property
    def in_links(self) -> Dict[NodeId, List[LinkKey]]:
        table: Dict[NodeId, List[LinkKey]] = {i: [] for i in self.nodes}
        for link in self.links:
            table[link.head].append(link.key)
        return table

    @property
    def paths(self) -> range:
        """路径编号 p = 1..P。"""
        return range(1, self.path_budget + 1)

    def is_cloud(self, node: NodeId) -> bool:
        return node in self.cloud_by_id

    def with_overrides(self, sigma: Optional[float] = None,
                       path_budget: Optional[int] = None) -> "NetworkInstance":
        """返回替换了 σ 或 P 的新实例。"""
        changes: Dict[str, Any] = {}
        if sigma is not None:
            changes['sigma'] = float(sigma)
        if path_budget is not None:
            changes['path_budget'] = int(path_budget)
        return replace(self, **changes) if changes else self


def _validate_instance(inst: NetworkInstance) -> None:
    node_set = set(inst.nodes)
    if len(node_set) != len(inst.nodes):
        raise InstanceValidationError("nodes", "节点ID重复")
    if inst.path_budget < 1:
        raise InstanceValidationError("P", f"路径数必须 ≥ 1，实际为 {inst.path_budget}")
    if not inst.sigma > 0:
        raise InstanceValidationError("sigma", f"σ 必须为正，实际为 {inst.sigma}")

    cloud_seen = set()
    for idx, cloud in enumerate(inst.cloud_nodes):
        where = f"cloud_nodes[{idx}]"
        if cloud.id not in node_set:
            raise InstanceValidationError(f"{where}.id", f"未知节点 {cloud.id}")
        if cloud.id in cloud_seen:
            raise InstanceValidationError(f"{where}.id", f"云节点重复 {cloud.id}")
        cloud_seen.add(cloud.id)
        if not cloud.capacity >= 0:
            raise InstanceValidationError(f"{where}.capacity", "容量必须非负")
        if not 0 < cloud.reliability <= 1:
            raise InstanceValidationError(f"{where}.reliability", "可靠性必须在 (0,1] 内")

    link_seen = set()
    for idx, link in enumerate(inst.links):
        where = f"links[{idx}]"
        if link.tail not in node_set or link.head not in node_set:
            raise InstanceValidationError(where, f"端点不存在 {link.key}")
        if link.tail == link.head:
            raise InstanceValidationError(where, "链路两端必须是不同节点")
        if link.key in link_seen:
            raise InstanceValidationError(where, f"重复链路 {link.key}")
        link_seen.add(link.key)
        if not link.capacity >= 0:
            raise InstanceValidationError(f"{where}.capacity", "容量必须非负")
        if not link.delay >= 0:
            raise InstanceValidationError(f"{where}.delay", "时延必须非负")
        if not 0 < link.reliability <= 1:
            raise InstanceValidationError(f"{where}.reliability", "可靠性必须在 (0,1] 内")

    for k, svc in enumerate(inst.services):
        where = f"services[{k}]"
        for role in ("source", "dest"):
            node = getattr(svc, role)
            if node not in node_set:
                raise InstanceValidationError(f"{where}.{role}", f"未知节点 {node}")
            if node in cloud_seen:
                raise InstanceValidationError(f"{where}.{role}", "源/目的节点不能是云节点")
        if svc.length < 1:
            raise InstanceValidationError(f"{where}.chain", "功能链至少包含一个功能")
        if len(svc.rates) != svc.length + 1:
            raise InstanceValidationError(
                f"{where}.rates", f"需要 {svc.length + 1} 个速率，实际 {len(svc.rates)}")
        if any(not r >= 0 for r in svc.rates):
            raise InstanceValidationError(f"{where}.rates", "速率必须非负")
        if not svc.theta > 0:
            raise InstanceValidationError(f"{where}.theta", "时延阈值必须为正")
        if not 0 < svc.gamma <= 1:
            raise InstanceValidationError(f"{where}.gamma", "可靠性阈值必须在 (0,1] 内")
        for s, stage in enumerate(svc.chain, start=1):
            missing = cloud_seen.difference(stage.nfv_delay)
            if missing:
                raise InstanceValidationError(
                    f"{where}.chain[{s - 1}].nfv_delay", f"缺少云节点 {sorted(missing)}")
            for v, d in stage.nfv_delay.items():
                if v not in cloud_seen:
                    raise InstanceValidationError(
                        f"{where}.chain[{s - 1}].nfv_delay", f"{v} 不是云节点")
                if d is not None and not d >= 0:
                    raise InstanceValidationError(
                        f"{where}.chain[{s - 1}].nfv_delay", f"节点 {v} 的时延必须非负")


# ---------------------------------------------------------------------------
# 文档读写
# ---------------------------------------------------------------------------

def instance_from_dict(doc: Mapping[str, Any]) -> NetworkInstance:
    """由已解析的字典构造实例。

    Raises:
        InstanceParseError: 字段缺失或类型错误。
        InstanceValidationError: 不变量不满足。
    """
    try:
        nodes = tuple(str(n) for n in doc['nodes'])
        links = tuple(
            Link(str(item['tail']), str(item['head']), float(item['capacity']),
                 float(item['delay']), float(item['reliability']))
            for item in doc['links'])
        clouds = tuple(
            CloudNode(str(item['id']), float(item['capacity']), float(item['reliability']))
            for item in doc['cloud_nodes'])
        services = []
        for item in doc['services']:
            chain = tuple(
                FunctionStage(
                    nfv_delay={str(v): (None if d is None else float(d))
                               for v, d in stage['nfv_delay'].items()},
                    function=str(stage.get('function', '')))
                for stage in item['chain'])
            services.append(ServiceRequest(
                source=str(item['source']), dest=str(item['dest']), chain=chain,
                rates=tuple(float(r) for r in item['rates']),
                theta=float(item['theta']), gamma=float(item['gamma']),
                name=str(item.get('name', ''))))
        path_budget = int(doc.get('P', DEFAULT_PATH_BUDGET))
        sigma = float(doc.get('sigma', DEFAULT_SIGMA))
        name = str(doc.get('name', ''))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InstanceParseError(f"实例文档字段错误: {e!r}") from e
    return NetworkInstance(nodes=nodes, links=links, cloud_nodes=clouds,
                           services=tuple(services), path_budget=path_budget,
                           sigma=sigma, name=name)


def load_instance(data: bytes) -> NetworkInstance:
    """解析 JSON 实例文档。

    Args:
        data (bytes): 文档内容(也接受 str)。

    Returns:
        NetworkInstance: 校验后的实例。

    Raises:
        InstanceParseError: 文档不是合法 JSON 或结构错误。
        InstanceValidationError: 实例不变量不满足。
    """
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise InstanceParseError(f"无法解析实例文档: {e}") from e
    if not isinstance(doc, dict):
        raise InstanceParseError("实例文档顶层必须是对象")
    return instance_from_dict(doc)


def instance_to_dict(inst: NetworkInstance) -> Dict[str, Any]:
    doc: Dict[str, Any] = {}
    if inst.name:
        doc['name'] = inst.name
    doc['nodes'] = list(inst.nodes)
    doc['links'] = [
        {'tail': l.tail, 'head': l.head, 'capacity': l.capacity,
         'delay': l.delay, 'reliability': l.reliability}
        for l in inst.links]
    doc['cloud_nodes'] = [
        {'id': c.id, 'capacity': c.capacity, 'reliability': c.reliability}
        for c in inst.cloud_nodes]
    services = []
    for svc in inst.services:
        item: Dict[str, Any] = {}
        if svc.name:
            item['name'] = svc.name
        item.update({
            'source': svc.source, 'dest': svc.dest, 'rates': list(svc.rates),
            'chain': [
                {**({'function': st.function} if st.function else {}),
                 'nfv_delay': {v: st.nfv_delay[v] for v in inst.cloud_ids}}
                for st in svc.chain],
            'theta': svc.theta, 'gamma': svc.gamma})
        services.append(item)
    doc['services'] = services
    doc['P'] = inst.path_budget
    doc['sigma'] = inst.sigma
    return doc


def save_instance(inst: NetworkInstance) -> bytes:
    """把实例序列化为 JSON 文档，键顺序固定。"""
    return (json.dumps(instance_to_dict(inst), indent=2, ensure_ascii=False) + "\n").encode('utf-8')


# ---------------------------------------------------------------------------
# 图与指标
# ---------------------------------------------------------------------------

def instance_to_digraph(inst: NetworkInstance) -> nx.DiGraph:
    """构造带 capacity/delay/reliability/neg_log_reliability 属性的有向图。"""
    graph = nx.DiGraph()
    graph.add_nodes_from(inst.nodes)
    for link in inst.links:
        graph.add_edge(link.tail, link.head, capacity=link.capacity, delay=link.delay,
                       reliability=link.reliability,
                       neg_log_reliability=-math.log(link.reliability))
    return graph


def shortest_path_metrics(inst: NetworkInstance, k: int) -> Tuple[float, float]:
    """计算业务 k 的最小时延路径长度 dist_k 与最大可靠性路径值 dist'_k。

    可靠性路径在 −log γ 权重下求最短路以避免乘积下溢。

    Args:
        inst (NetworkInstance): 网络实例。
        k (int): 业务编号。

    Returns:
        Tuple[float, float]: (dist_k, dist'_k)。

    Raises:
        UnreachableError: 目的节点不可达。
    """
    svc = inst.services[k]
    graph = instance_to_digraph(inst)
    try:
        dist = nx.dijkstra_path_length(graph, svc.source, svc.dest, weight='delay')
        neg_log = nx.dijkstra_path_length(graph, svc.source, svc.dest,
                                          weight='neg_log_reliability')
    except nx.NetworkXNoPath as e:
        raise UnreachableError(f"业务 {k}: {svc.dest} 从 {svc.source} 不可达") from e
    return float(dist), math.exp(-neg_log)


# ---------------------------------------------------------------------------
# 流守恒右端项
# ---------------------------------------------------------------------------

PlacementKey = Tuple[NodeId, int, int]


@dataclass(frozen=True)
class FlowBalanceTerm:
    """b_i^{k,s}(x) 的仿射表示: constant + Σ coef · x_{v,k,s'}。"""
    constant: int = 0
    terms: Tuple[Tuple[PlacementKey, int], ...] = field(default_factory=tuple)

    def evaluate(self, x_vks: Mapping[PlacementKey, float]) -> float:
        return self.constant + sum(coef * x_vks.get(key, 0.0) for key, coef in self.terms)

    @property
    def is_zero(self) -> bool:
        return self.constant == 0 and not self.terms


def flow_balance_rhs(inst: NetworkInstance, k: int, s: int, i: NodeId,
                     x: Optional[Mapping[PlacementKey, float]] = None):
    """返回虚拟链路 (k,s) 在节点 i 处的净流入 b_i^{k,s}(x)。

    不给定 x 时返回仿射表示 :class:`FlowBalanceTerm`，供建模使用；
    给定 x 时返回数值。
    """
    svc = inst.services[k]
    ell = svc.length
    constant = 0
    terms: List[Tuple[PlacementKey, int]] = []
    if inst.is_cloud(i):
        if s < ell:
            terms.append(((i, k, s + 1), 1))
        if s > 0:
            terms.append(((i, k, s), -1))
    elif s == 0 and i == svc.source:
        constant = -1
    elif s == ell and i == svc.dest:
        constant = 1
    term = FlowBalanceTerm(constant, tuple(terms))
    if x is None:
        return term
    return term.evaluate(x)


def flow_endpoints(inst: NetworkInstance, k: int, s: int,
                   x_vks: Mapping[PlacementKey, float]) -> Tuple[NodeId, NodeId]:
    """整数放置下虚拟链路 (k,s) 的起点和终点。"""
    svc = inst.services[k]

    def host(stage: int) -> NodeId:
        return max(inst.cloud_ids, key=lambda v: x_vks.get((v, k, stage), 0.0))

    start = svc.source if s == 0 else host(s)
    end = svc.dest if s == svc.length else host(s + 1)
    return start, end
