"""建模策略的抽象基类。

所有模型(MILP、线性化 MINLP、LP-II)共享放置变量、激活/容量约束、
可靠性约束与时延预算约束，这些公共部分在本基类中实现；
路由部分由子类各自定义。
"""

import math
from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Tuple

from .var_index import THETA, X_VK, X_VKS, Y, Z_IJK, VarIndex
from ..instance import NetworkInstance, flow_balance_rhs
from ..solvers.lp_model import LpModel
from ...utils.constants import FormulationKind, ObjectiveSense, Relation


class BaseFormulation(ABC):
    """抽象基类，定义所有模型构造器的标准接口。"""

    kind: FormulationKind
    integral: bool = True

    @abstractmethod
    def get_name(self) -> str:
        """返回人类可读的模型名称。

        Returns:
            str: 模型名称，如 "MILP"。
        """

    @abstractmethod
    def get_id(self) -> str:
        """返回程序内部使用的唯一ID。

        Returns:
            str: 模型ID，如 "milp"。
        """

    @abstractmethod
    def _add_routing_variables(self, model: LpModel, vi: VarIndex) -> None:
        """在 z_ijk 之后、theta_ks 之前登记路由变量。"""

    @abstractmethod
    def _add_trailing_variables(self, model: LpModel, vi: VarIndex) -> None:
        """在 theta_ks 之后登记其余变量。"""

    @abstractmethod
    def _add_routing_constraints(self, model: LpModel, vi: VarIndex) -> None:
        """添加路由、链路容量与路径时延约束。"""

    def build(self, instance: NetworkInstance,
              services: Optional[Sequence[int]] = None) -> Tuple[LpModel, VarIndex]:
        """构造模型。

        Args:
            instance (NetworkInstance): 网络实例。
            services (Optional[Sequence[int]]): 只包含这些业务；缺省为全部业务。

        Returns:
            Tuple[LpModel, VarIndex]: 模型与变量索引。
        """
        ks = tuple(range(len(instance.services))) if services is None else tuple(services)
        model = LpModel(ObjectiveSense.MINIMIZE, name=f"{self.get_id()}:{instance.name}")
        vi = VarIndex(self.kind, instance, ks)
        self.instance = instance
        self._add_placement_variables(model, vi)
        self._add_routing_variables(model, vi)
        self._add_theta_variables(model, vi)
        self._add_trailing_variables(model, vi)
        self._add_placement_constraints(model, vi)
        self._add_routing_constraints(model, vi)
        self._add_reliability_constraints(model, vi)
        self._add_delay_budget_constraints(model, vi)
        return model, vi

    # ------------------------------------------------------------------
    # 变量
    # ------------------------------------------------------------------
    def _add_placement_variables(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for v in inst.cloud_ids:
            vi.add(model, Y, (v,), 0.0, 1.0, cost=1.0, integer=self.integral)
        for v in inst.cloud_ids:
            for k in vi.services:
                vi.add(model, X_VK, (v, k), 0.0, 1.0, integer=self.integral)
        for v in inst.cloud_ids:
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.functions:
                    upper = 1.0 if svc.stage(s).allowed(v) else 0.0
                    vi.add(model, X_VKS, (v, k, s), 0.0, upper, integer=self.integral)
        for (i, j) in inst.link_keys:
            for k in vi.services:
                vi.add(model, Z_IJK, (i, j, k), 0.0, 1.0, integer=self.integral)

    def _add_theta_variables(self, model: LpModel, vi: VarIndex) -> None:
        for k in vi.services:
            svc = self.instance.services[k]
            for s in svc.segments:
                vi.add(model, THETA, (k, s), 0.0, svc.theta)

    # ------------------------------------------------------------------
    # 公共约束
    # ------------------------------------------------------------------
    def _add_placement_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for k in vi.services:
            for s in inst.services[k].functions:
                model.add_constraint({vi.col(X_VKS, (v, k, s)): 1.0 for v in inst.cloud_ids},
                                     Relation.EQ, 1.0, name=f"placement[{k},{s}]",
                                     family='placement')
        for k in vi.services:
            for s in inst.services[k].functions:
                for v in inst.cloud_ids:
                    model.add_constraint({vi.col(X_VKS, (v, k, s)): 1.0, vi.col(X_VK, (v, k)): -1.0},
                                         Relation.LE, 0.0, name=f"node_use[{v},{k},{s}]",
                                         family='node_use')
        for k in vi.services:
            for v in inst.cloud_ids:
                model.add_constraint({vi.col(X_VK, (v, k)): 1.0, vi.col(Y, (v,)): -1.0},
                                     Relation.LE, 0.0, name=f"activation[{v},{k}]",
                                     family='activation')
        for v in inst.cloud_ids:
            coefs: Dict[int, float] = {}
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.functions:
                    coefs[vi.col(X_VKS, (v, k, s))] = svc.rates[s]
            coefs[vi.col(Y, (v,))] = -inst.cloud_by_id[v].capacity
            model.add_constraint(coefs, Relation.LE, 0.0, name=f"node_capacity[{v}]",
                                 family='node_capacity')

    def _add_reliability_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for k in vi.services:
            coefs: Dict[int, float] = {}
            for v in inst.cloud_ids:
                coefs[vi.col(X_VK, (v, k))] = math.log(inst.cloud_by_id[v].reliability)
            for link in inst.links:
                coefs[vi.col(Z_IJK, (link.tail, link.head, k))] = math.log(link.reliability)
            model.add_constraint(coefs, Relation.GE, math.log(inst.services[k].gamma),
                                 name=f"reliability[{k}]", family='reliability')

    def _add_delay_budget_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for k in vi.services:
            svc = inst.services[k]
            coefs: Dict[int, float] = {}
            for v in inst.cloud_ids:
                for s in svc.functions:
                    coefs[vi.col(X_VKS, (v, k, s))] = svc.stage(s).delay_at(v)
            for s in svc.segments:
                coefs[vi.col(THETA, (k, s))] = 1.0
            model.add_constraint(coefs, Relation.LE, svc.theta, name=f"delay_budget[{k}]",
                                 family='delay_budget')

    def _balance_terms(self, vi: VarIndex, k: int, s: int, i: str) -> Tuple[Dict[int, float], float]:
        """把 b_i^{k,s}(x) 移到左端: 返回 (−x 项系数, 常数右端项)。"""
        term = flow_balance_rhs(self.instance, k, s, i)
        coefs = {vi.col(X_VKS, key): -float(coef) for key, coef in term.terms}
        return coefs, float(term.constant)


def add_to(coefs: Dict[int, float], col: int, value: float) -> None:
    coefs[col] = coefs.get(col, 0.0) + value
