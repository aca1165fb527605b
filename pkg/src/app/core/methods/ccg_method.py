"""列生成方法: cCG、不加速的 cCG' 以及只求主问题 LP 界的 P-LP。"""

import logging
import math
from typing import Any, Mapping

from .base_method import BaseMethod, MethodResult, solver_params
from ..ccg import CcgParams, CcgResult, run_ccg
from ..instance import NetworkInstance
from ..pricing import PricingParams
from ...utils.constants import CcgStatus, MethodIds, ParameterKeys

logger = logging.getLogger(__name__)


def ccg_params(params: Mapping[str, Any]) -> CcgParams:
    """从完整参数字典构造列生成参数。"""
    _lp, milp, validation = solver_params(params)
    pricing = PricingParams.from_dict(params.get(ParameterKeys.PRICING.value), validation)
    return CcgParams.from_dict(params.get(ParameterKeys.CCG.value), pricing, milp)


class CcgMethod(BaseMethod):
    """两阶段列生成。"""

    lp_acceleration = True
    stage2 = True

    def get_name(self) -> str:
        return "cCG (two-stage column generation)"

    def get_id(self) -> str:
        return MethodIds.CCG.value

    def run(self, instance: NetworkInstance, params: Mapping[str, Any]) -> MethodResult:
        cfg = ccg_params(params)
        cfg.lp_acceleration = self.lp_acceleration
        result = run_ccg(instance, cfg, stage2=self.stage2)
        out = self._to_result(result)
        logger.info("%s: %s, 主问题 %.6g, 第二阶段 %.6g, %d 轮, %d 列", self.get_id(),
                    out.status, result.master_value, result.stage2_objective,
                    result.iterations, result.total_columns)
        return out

    def _to_result(self, result: CcgResult) -> MethodResult:
        converged = result.status in (CcgStatus.SOLVED, CcgStatus.STAGE2_FAILED)
        return MethodResult(
            status=result.status.value,
            objective=result.stage2_objective,
            bound=result.master_value if converged else math.nan,
            solution=result.solution,
            iterations=result.iterations,
            columns=result.total_columns,
            milp_pricing_solves=result.milp_pricing_solves,
            traces={'iterations': result.iteration_trace, 'pricing': result.pricing_trace})


class CcgNoAccelerationMethod(CcgMethod):
    """每次定价都直接求解 MILP 的 cCG'。"""

    lp_acceleration = False

    def get_name(self) -> str:
        return "cCG' (no LP acceleration)"

    def get_id(self) -> str:
        return MethodIds.CCG_NOACC.value


class PatternLpMethod(CcgMethod):
    """只运行第一阶段，报告收敛时的主问题 LP 值。"""

    stage2 = False
    produces_solution = False

    def get_name(self) -> str:
        return "P-LP (pattern LP bound)"

    def get_id(self) -> str:
        return MethodIds.P_LP.value

    def _to_result(self, result: CcgResult) -> MethodResult:
        out = super()._to_result(result)
        out.objective = result.master_value
        out.solution = None
        return out
