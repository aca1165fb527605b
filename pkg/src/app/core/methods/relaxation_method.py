"""线性松弛方法: LP-I、LP-II 与 NLP-L 只给出下界，不产出整数解。"""

import logging
import math
from typing import Any, Mapping

from .base_method import BaseMethod, MethodResult, solver_params
from ..formulations import build_lp2, build_milp, build_minlp_linearized, relax
from ..instance import NetworkInstance
from ..solvers import solve_lp
from ...utils.constants import LpStatus, MethodIds

logger = logging.getLogger(__name__)


class RelaxationMethod(BaseMethod):
    """求解某个模型的线性松弛。"""

    produces_solution = False
    builder = staticmethod(build_milp)

    def build_model(self, instance: NetworkInstance):
        model, vi = self.builder(instance)
        return relax(model), vi

    def run(self, instance: NetworkInstance, params: Mapping[str, Any]) -> MethodResult:
        lp, _milp, _validation = solver_params(params)
        model, _vi = self.build_model(instance)
        outcome = solve_lp(model, lp)
        out = MethodResult(status=outcome.status.value, iterations=0)
        if outcome.status is LpStatus.OPTIMAL:
            out.objective = out.bound = outcome.objective
        elif outcome.status is LpStatus.INFEASIBLE:
            out.bound = math.inf
        logger.info("%s: %s, 值 %.6g (%d 次单纯形迭代)", self.get_id(), out.status,
                    out.objective, outcome.iterations)
        return out


class LpOneMethod(RelaxationMethod):
    builder = staticmethod(build_milp)

    def get_name(self) -> str:
        return "LP-I (MILP relaxation)"

    def get_id(self) -> str:
        return MethodIds.LP_I.value


class LpTwoMethod(RelaxationMethod):
    builder = staticmethod(build_lp2)

    def build_model(self, instance: NetworkInstance):
        return self.builder(instance)

    def get_name(self) -> str:
        return "LP-II (compact LP)"

    def get_id(self) -> str:
        return MethodIds.LP_II.value


class NlpLinearizedMethod(RelaxationMethod):
    builder = staticmethod(build_minlp_linearized)

    def get_name(self) -> str:
        return "NLP-L (linearized MINLP relaxation)"

    def get_id(self) -> str:
        return MethodIds.NLP_L.value
