"""精确方法: 用分支定界求解 MILP 或线性化 MINLP 模型。"""

import logging
from typing import Any, Mapping

from .base_method import BaseMethod, MethodResult, solver_params
from ..formulations import build_milp, build_minlp_linearized, evaluate_objective, extract_solution
from ..instance import NetworkInstance
from ..solvers import solve_milp
from ..validation import strip_cycles
from ...utils.constants import MethodIds

logger = logging.getLogger(__name__)


class ExactMethod(BaseMethod):
    """基于某个整数模型的精确求解。子类只需指定模型构造函数。"""

    builder = staticmethod(build_milp)

    def build_model(self, instance: NetworkInstance):
        return self.builder(instance)

    def run(self, instance: NetworkInstance, params: Mapping[str, Any]) -> MethodResult:
        _lp, milp, validation = solver_params(params)
        model, vi = self.build_model(instance)
        result = solve_milp(model, milp)
        out = MethodResult(status=result.status.value, bound=result.best_bound,
                           nodes=result.nodes)
        if result.has_solution:
            sol = extract_solution(vi, result.x, model, milp.lp.tol_feas)
            out.solution = strip_cycles(instance, sol.snapped(milp.int_tol), validation)
            out.objective = evaluate_objective(instance, out.solution)
        logger.info("%s: %s, 目标 %.6g, 界 %.6g", self.get_id(), out.status, out.objective,
                    out.bound)
        return out


class MilpMethod(ExactMethod):
    builder = staticmethod(build_milp)

    def get_name(self) -> str:
        return "MILP (exact)"

    def get_id(self) -> str:
        return MethodIds.MILP.value


class MinlpLinearizedMethod(ExactMethod):
    builder = staticmethod(build_minlp_linearized)

    def get_name(self) -> str:
        return "MINLP (linearized, exact)"

    def get_id(self) -> str:
        return MethodIds.MINLP_LIN.value
