"""按路径聚合的紧凑线性模型 LP-II。

路由变量为聚合速率 r_ijks ∈ [0,1]，不含路径下标，因此变量和约束数量
都明显少于 MILP 的线性松弛，而两者最优值相同。
"""

from typing import Dict, Mapping, Optional, Sequence, Tuple

from .base_formulation import BaseFormulation, add_to
from .var_index import R_IJKS, THETA, Z_IJK, VarIndex
from ..instance import NetworkInstance
from ..solvers.lp_model import LpModel
from ...utils.constants import FormulationKind, Relation


class Lp2Formulation(BaseFormulation):
    """LP-II 模型构造器(纯 LP，无整数标记)。"""

    kind = FormulationKind.LP2
    integral = False

    def get_name(self) -> str:
        return "LP-II"

    def get_id(self) -> str:
        return "lp-ii"

    def _add_routing_variables(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for (i, j) in inst.link_keys:
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.segments:
                    vi.add(model, R_IJKS, (i, j, k, s), 0.0, 1.0,
                           cost=inst.sigma * svc.rates[s])

    def _add_trailing_variables(self, model: LpModel, vi: VarIndex) -> None:
        pass

    def _add_routing_constraints(self, model: LpModel, vi: VarIndex) -> None:
        inst = self.instance
        for link in inst.links:
            coefs: Dict[int, float] = {}
            for k in vi.services:
                svc = inst.services[k]
                for s in svc.segments:
                    coefs[vi.col(R_IJKS, (link.tail, link.head, k, s))] = svc.rates[s]
            model.add_constraint(coefs, Relation.LE, link.capacity,
                                 name=f"link_capacity[{link.tail},{link.head}]",
                                 family='link_capacity')
        for k in vi.services:
            svc = inst.services[k]
            for s in svc.segments:
                for i in inst.nodes:
                    coefs, const = self._balance_terms(vi, k, s, i)
                    for (a, b) in inst.in_links[i]:
                        add_to(coefs, vi.col(R_IJKS, (a, b, k, s)), 1.0)
                    for (a, b) in inst.out_links[i]:
                        add_to(coefs, vi.col(R_IJKS, (a, b, k, s)), -1.0)
                    model.add_constraint(coefs, Relation.EQ, const,
                                         name=f"flow_conservation[{i},{k},{s}]",
                                         family='flow_conservation')
                for (i, j) in inst.link_keys:
                    model.add_constraint(
                        {vi.col(R_IJKS, (i, j, k, s)): 1.0, vi.col(Z_IJK, (i, j, k)): -1.0},
                        Relation.LE, 0.0, name=f"link_usage[{i},{j},{k},{s}]",
                        family='link_usage')
                coefs = {vi.col(THETA, (k, s)): 1.0}
                for link in inst.links:
                    add_to(coefs, vi.col(R_IJKS, (link.tail, link.head, k, s)), -link.delay)
                model.add_constraint(coefs, Relation.GE, 0.0, name=f"path_delay[{k},{s}]",
                                     family='path_delay')


def build_lp2(instance: NetworkInstance,
              services: Optional[Sequence[int]] = None) -> Tuple[LpModel, VarIndex]:
    """构造 LP-II 模型。"""
    return Lp2Formulation().build(instance, services)


def expand_aggregated(aggregated: Mapping[Tuple, float], path_budget: int
                      ) -> Tuple[Dict[Tuple, float], Dict[Tuple, float]]:
    """把聚合速率展开为逐路径变量。

    全部速率放在 p=1 上，每条路径的指示变量都取聚合速率 r̄。

    Args:
        aggregated (Mapping[Tuple, float]): {(i,j,k,s): r̄}。
        path_budget (int): P。

    Returns:
        Tuple[Dict, Dict]: (r_ijksp, z_ijksp)。
    """
    r_ijksp: Dict[Tuple, float] = {}
    z_ijksp: Dict[Tuple, float] = {}
    for (i, j, k, s), val in aggregated.items():
        for p in range(1, path_budget + 1):
            r_ijksp[(i, j, k, s, p)] = val if p == 1 else 0.0
            z_ijksp[(i, j, k, s, p)] = val
    return r_ijksp, z_ijksp


def aggregate_rates(r_ijksp: Mapping[Tuple, float]) -> Dict[Tuple, float]:
    """Σ_p r_ijksp。"""
    out: Dict[Tuple, float] = {}
    for (i, j, k, s, p), val in r_ijksp.items():
        out[(i, j, k, s)] = out.get((i, j, k, s), 0.0) + val
    return out
