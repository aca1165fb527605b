"""线性化的多路径 MINLP 模型。

每条路径 p 的指示变量 z_ijksp 构成一条从虚拟链路起点到终点的路径(逐节点守恒，
右端为 b_i^{k,s}(x))，路径分流比例 r_ksp 之和为 1，
双线性关系 r_ijksp = r_ksp · z_ijksp 用 McCormick 三元组线性化。
"""

from typing import Dict, Optional, Sequence, Tuple

from .base_formulation import BaseFormulation, add_to
from .var_index import R_IJKSP, R_KSP, THETA, Z_IJK, Z_IJKSP, VarIndex
from ..instance import NetworkInstance
from ..solvers.lp_model import LpModel
from ...utils.constants import FormulationKind, Relation


class MinlpFormulation(BaseFormulation):
    """线性化 MINLP 模型构造器。"""

    kind = FormulationKind.MINLP

    def get_name(self) -> str:
        return "MINLP (linearized)"

    def get_id(self) -> str:
        return "minlp-lin"

    def _add_routing_variables(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for (i, j) in inst.link_keys:
            for k in vi.services:
                for s in inst.services[k].segments:
                    for p in inst.paths:
                        vi.add(model, Z_IJKSP, (i, j, k, s, p), 0.0, 1.0, integer=self.integral)
        for (i, j) in inst.link_keys:
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.segments:
                    for p in inst.paths:
                        vi.add(model, R_IJKSP, (i, j, k, s, p), 0.0, 1.0,
                               cost=inst.sigma * svc.rates[s])

    def _add_trailing_variables(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for k in vi.services:
            for s in inst.services[k].segments:
                for p in inst.paths:
                    vi.add(model, R_KSP, (k, s, p), 0.0, 1.0)

    def _add_routing_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
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
            for s in svc.segments:
                for p in inst.paths:
                    # 每条路径的 z 守恒
                    for i in inst.nodes:
                        coefs, const = self._balance_terms(vi, k, s, i)
                        for (a, b) in inst.in_links[i]:
                            add_to(coefs, vi.col(Z_IJKSP, (a, b, k, s, p)), 1.0)
                        for (a, b) in inst.out_links[i]:
                            add_to(coefs, vi.col(Z_IJKSP, (a, b, k, s, p)), -1.0)
                        model.add_constraint(coefs, Relation.EQ, const,
                                             name=f"flow_conservation[{i},{k},{s},{p}]",
                                             family='flow_conservation')
                model.add_constraint({vi.col(R_KSP, (k, s, p)): 1.0 for p in inst.paths},
                                     Relation.EQ, 1.0, name=f"path_split[{k},{s}]",
                                     family='path_split')
                for p in inst.paths:
                    r_path = vi.col(R_KSP, (k, s, p))
                    for (i, j) in inst.link_keys:
                        r = vi.col(R_IJKSP, (i, j, k, s, p))
                        z = vi.col(Z_IJKSP, (i, j, k, s, p))
                        tag = f"[{i},{j},{k},{s},{p}]"
                        model.add_constraint({r: 1.0, z: -1.0, r_path: -1.0}, Relation.GE, -1.0,
                                             name=f"mccormick_lower{tag}",
                                             family='mccormick_lower')
                        model.add_constraint({r: 1.0, z: -1.0}, Relation.LE, 0.0,
                                             name=f"mccormick_upper_z{tag}",
                                             family='mccormick_upper_z')
                        model.add_constraint({r: 1.0, r_path: -1.0}, Relation.LE, 0.0,
                                             name=f"mccormick_upper_r{tag}",
                                             family='mccormick_upper_r')
                        model.add_constraint({z: 1.0, vi.col(Z_IJK, (i, j, k)): -1.0},
                                             Relation.LE, 0.0,
                                             name=f"path_link_usage{tag}",
                                             family='path_link_usage')
                    coefs = {vi.col(THETA, (k, s)): 1.0}
                    for link in inst.links:
                        add_to(coefs, vi.col(Z_IJKSP, (link.tail, link.head, k, s, p)), -link.delay)
                    model.add_constraint(coefs, Relation.GE, 0.0, name=f"path_delay[{k},{s},{p}]",
                                         family='path_delay')


def build_minlp_linearized(instance: NetworkInstance,
                           services: Optional[Sequence[int]] = None) -> Tuple[LpModel, VarIndex]:
    """构造线性化 MINLP 模型。"""
    return MinlpFormulation().build(instance, services)
