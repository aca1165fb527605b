"""多路径网络切片的 MILP 模型。

路由部分使用每条路径的指示变量 z_ijksp 与速率 r_ijksp，并附加两族有效不等式
(聚合链路使用与聚合路径时延)。

规模(记 nv=|V|, nl=|L|, ni=|I|, K 个业务, L1=Σℓ_k, L2=Σ(ℓ_k+1)):

    变量   y_v: nv          x_vk: nv·K         x_vks: nv·L1        z_ijk: nl·K
           z_ijksp: nl·P·L2  r_ijksp: nl·P·L2   theta_ks: L2
    约束   placement: L1     node_use: nv·L1    activation: nv·K    node_capacity: nv
           link_capacity: nl  path_link_usage: nl·P·L2               reliability: K
           delay_budget: K    path_delay: P·L2   out_degree: ni·P·L2
           rate_indicator: nl·P·L2               sfc_conservation: Σ_k((ℓ_k+1)·nv + 2)
           path_conservation: P·Σ_k((ni−nv)(ℓ_k+1) − 2)
           path_inflow: P·nv·L1                  path_outflow: P·nv·L1
           aggregate_link_usage: nl·L2           aggregate_delay: L2
"""

from typing import Dict, Optional, Sequence, Tuple

from .base_formulation import BaseFormulation, add_to
from .var_index import R_IJKSP, THETA, X_VKS, Z_IJK, Z_IJKSP, VarIndex
from ..instance import NetworkInstance
from ..solvers.lp_model import LpModel
from ...utils.constants import FormulationKind, Relation


class MilpFormulation(BaseFormulation):
    """MILP 模型构造器。"""

    kind = FormulationKind.MILP

    def get_name(self) -> str:
        return "MILP"

    def get_id(self) -> str:
        return "milp"

    def _add_routing_variables(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for family, integer in ((Z_IJKSP, self.integral), (R_IJKSP, False)):
            for (i, j) in inst.link_keys:
                for k in vi.services:
                    svc = inst.services[k]
                    for s in svc.segments:
                        for p in inst.paths:
                            cost = inst.sigma * svc.rates[s] if family == R_IJKSP else 0.0
                            vi.add(model, family, (i, j, k, s, p), 0.0, 1.0, cost=cost,
                                   integer=integer)

    def _add_trailing_variables(self, model: LpModel, vi: VarIndex) -> None:
        pass

    def _add_routing_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        # 链路容量
        for link in inst.links:
            coefs: Dict[int, float] = {}
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.segments:
                    for p in inst.paths:
                        coefs[vi.col(R_IJKSP, (link.tail, link.head, k, s, p))] = svc.rates[s]
            model.add_constraint(coefs, Relation.LE, link.capacity,
                                 name=f"link_capacity[{link.tail},{link.head}]",
                                 family='link_capacity')

        for k in vi.services:
            svc = inst.services[k]
            ell = svc.length
            for s in svc.segments:
                for p in inst.paths:
                    for (i, j) in inst.link_keys:
                        model.add_constraint(
                            {vi.col(Z_IJKSP, (i, j, k, s, p)): 1.0, vi.col(Z_IJK, (i, j, k)): -1.0},
                            Relation.LE, 0.0, name=f"path_link_usage[{i},{j},{k},{s},{p}]",
                            family='path_link_usage')
                    coefs = {vi.col(THETA, (k, s)): 1.0}
                    for link in inst.links:
                        add_to(coefs, vi.col(Z_IJKSP, (link.tail, link.head, k, s, p)), -link.delay)
                    model.add_constraint(coefs, Relation.GE, 0.0, name=f"path_delay[{k},{s},{p}]",
                                         family='path_delay')
                    for i in inst.nodes:
                        out = {vi.col(Z_IJKSP, (a, b, k, s, p)): 1.0 for (a, b) in inst.out_links[i]}
                        model.add_constraint(out, Relation.LE, 1.0,
                                             name=f"out_degree[{i},{k},{s},{p}]",
                                             family='out_degree')
                    for (i, j) in inst.link_keys:
                        model.add_constraint(
                            {vi.col(R_IJKSP, (i, j, k, s, p)): 1.0,
                             vi.col(Z_IJKSP, (i, j, k, s, p)): -1.0},
                            Relation.LE, 0.0, name=f"rate_indicator[{i},{j},{k},{s},{p}]",
                            family='rate_indicator')

            # 源/目的节点与云节点上的汇总守恒
            for s in svc.segments:
                nodes = list(inst.cloud_ids)
                if s == 0:
                    nodes.append(svc.source)
                if s == ell:
                    nodes.append(svc.dest)
                for i in nodes:
                    coefs, const = self._balance_terms(vi, k, s, i)
                    for p in inst.paths:
                        self._add_net_inflow(coefs, vi, i, k, s, p)
                    model.add_constraint(coefs, Relation.EQ, const,
                                         name=f"sfc_conservation[{i},{k},{s}]",
                                         family='sfc_conservation')

            # 每条路径的中间节点守恒
            for s in svc.segments:
                for p in inst.paths:
                    for i in inst.nodes:
                        if inst.is_cloud(i):
                            continue
                        if (s == 0 and i == svc.source) or (s == ell and i == svc.dest):
                            continue
                        coefs = {}
                        self._add_net_inflow(coefs, vi, i, k, s, p)
                        model.add_constraint(coefs, Relation.EQ, 0.0,
                                             name=f"path_conservation[{i},{k},{s},{p}]",
                                             family='path_conservation')
            for s in svc.segments:
                for p in inst.paths:
                    for v in inst.cloud_ids:
                        if s < ell:
                            coefs = {vi.col(X_VKS, (v, k, s + 1)): -1.0}
                            self._add_net_inflow(coefs, vi, v, k, s, p)
                            model.add_constraint(coefs, Relation.LE, 0.0,
                                                 name=f"path_inflow[{v},{k},{s},{p}]",
                                                 family='path_inflow')
                        if s > 0:
                            coefs = {vi.col(X_VKS, (v, k, s)): 1.0}
                            self._add_net_inflow(coefs, vi, v, k, s, p)
                            model.add_constraint(coefs, Relation.GE, 0.0,
                                                 name=f"path_outflow[{v},{k},{s},{p}]",
                                                 family='path_outflow')

            # 有效不等式
            for s in svc.segments:
                for (i, j) in inst.link_keys:
                    coefs = {vi.col(R_IJKSP, (i, j, k, s, p)): 1.0 for p in inst.paths}
                    coefs[vi.col(Z_IJK, (i, j, k))] = -1.0
                    model.add_constraint(coefs, Relation.LE, 0.0,
                                         name=f"aggregate_link_usage[{i},{j},{k},{s}]",
                                         family='aggregate_link_usage')
            for s in svc.segments:
                coefs = {vi.col(THETA, (k, s)): 1.0}
                for link in inst.links:
                    for p in inst.paths:
                        add_to(coefs, vi.col(R_IJKSP, (link.tail, link.head, k, s, p)), -link.delay)
                model.add_constraint(coefs, Relation.GE, 0.0, name=f"aggregate_delay[{k},{s}]",
                                     family='aggregate_delay')

    def _add_net_inflow(self, coefs: Dict[int, float], vi: VarIndex, i: str, k: int,
                        s: int, p: int) -> None:
        inst = self.instance
        for (a, b) in inst.in_links[i]:
            add_to(coefs, vi.col(R_IJKSP, (a, b, k, s, p)), 1.0)
        for (a, b) in inst.out_links[i]:
            add_to(coefs, vi.col(R_IJKSP, (a, b, k, s, p)), -1.0)


def build_milp(instance: NetworkInstance,
               services: Optional[Sequence[int]] = None) -> Tuple[LpModel, VarIndex]:
    """构造 MILP 模型(可限定业务子集)。"""
    return MilpFormulation().build(instance, services)
