"""定价子问题: 为单个业务寻找约化费用为正的新模式。

定价目标(取极大)为

    α_k + Σ_v (π_vk χ_v + η_v R_v) + Σ_ij (β_ij − w) R_ij

其中 w 在最优对偶下取 σ，在 Farkas 射线下取 0。约束集就是只含业务 k 的 MILP 模型
(容量取满)；加速时先解紧凑的 LP-II 版本，其最优解整数时直接恢复为模式，
否则回退到 MILP。
"""

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Any, Collection, Dict, Mapping, Optional, Tuple

import numpy as np

from .formulations import build_lp2, build_milp, extract_solution, pack_solution, relax
from .formulations.lp2_formulation import aggregate_rates, expand_aggregated
from .formulations.slice_solution import SliceSolution
from .formulations.var_index import R_IJKS, R_IJKSP, X_VK, X_VKS
from .instance import NetworkInstance
from .patterns import Pattern, pattern_from_solution
from .solvers import LpModel, LpParams, MilpParams, solve_lp, solve_milp
from .validation import ValidationParams, cancel_cycles, strip_cycles
from ..utils.constants import LpStatus, ObjectiveSense, PatternSource
from ..utils.exceptions import InvalidPatternError, NumericalFailure, RecoveryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualPrices:
    """受限主问题的对偶价格(或 Farkas 射线)。

    Attributes:
        alpha (Dict[int, float]): 每个业务的"选且只选一个模式"行，符号自由。
        beta (Dict[Tuple[str, str], float]): 链路容量行，≤ 0。
        pi (Dict[Tuple[str, int], float]): 节点使用行 (v,k)，≤ 0。
        eta (Dict[str, float]): 节点容量行，≤ 0。
        zeta (Dict[str, float]): y_v ≤ 1 行，≤ 0。
        is_ray (bool): True 表示这是主问题不可行时的射线。
    """
    alpha: Dict[int, float] = field(default_factory=dict)
    beta: Dict[Tuple[str, str], float] = field(default_factory=dict)
    pi: Dict[Tuple[str, int], float] = field(default_factory=dict)
    eta: Dict[str, float] = field(default_factory=dict)
    zeta: Dict[str, float] = field(default_factory=dict)
    is_ray: bool = False

    def sign_violation(self) -> float:
        """非正分量中最大的正值，用于检查符号条件。"""
        worst = 0.0
        for table in (self.beta, self.pi, self.eta, self.zeta):
            for val in table.values():
                worst = max(worst, val)
        return worst

    def routing_weight(self, sigma: float) -> float:
        return 0.0 if self.is_ray else sigma

    def price(self, pattern: Pattern, sigma: float) -> float:
        """模式在当前价格下的定价目标值(主问题列的约化费用取负)。"""
        k = pattern.service
        w = self.routing_weight(sigma)
        value = self.alpha.get(k, 0.0)
        value += sum(self.pi.get((v, k), 0.0) * chi for v, chi in pattern.chi.items())
        value += sum(self.eta.get(v, 0.0) * rate for v, rate in pattern.rate_v.items())
        value += sum((self.beta.get(key, 0.0) - w) * rate for key, rate in pattern.rate_ij.items())
        return value


@dataclass
class PricingParams:
    price_tol: float = 1e-6
    lp_acceleration: bool = True
    milp_time_floor: float = 5.0
    check_dominance: bool = False
    validation: ValidationParams = field(default_factory=ValidationParams)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]],
                  validation: Optional[ValidationParams] = None) -> "PricingParams":
        known = {f.name for f in fields(cls)} - {'validation'}
        params = cls(**{k: v for k, v in (data or {}).items() if k in known})
        if validation is not None:
            params.validation = validation
        return params


@dataclass
class PricingOutcome:
    """一次定价的结果；pattern 为 None 表示没有新模式。"""
    service: int
    pattern: Optional[Pattern] = None
    nu_lp: Optional[float] = None
    nu: Optional[float] = None
    milp_used: bool = False
    duplicate: bool = False
    wall_time: float = 0.0

    @property
    def found(self) -> bool:
        return self.pattern is not None

    def trace_row(self, iteration: int) -> Dict[str, Any]:
        return {
            'iteration': iteration,
            'service': self.service,
            'nu_lp': math.nan if self.nu_lp is None else self.nu_lp,
            'milp_used': self.milp_used,
            'nu': math.nan if self.nu is None else self.nu,
            'pattern_hash': self.pattern.key if self.pattern is not None else '',
            'duplicate': self.duplicate,
        }


def _set_pricing_objective(model: LpModel, vi, inst: NetworkInstance, k: int,
                           duals: DualPrices, rate_family: str) -> None:
    svc = inst.services[k]
    w = duals.routing_weight(inst.sigma)
    model.sense = ObjectiveSense.MAXIMIZE
    model.objective_offset = duals.alpha.get(k, 0.0)
    model.cost = [0.0] * model.num_variables
    for (v, kk), col in vi.columns(X_VK):
        model.cost[col] = duals.pi.get((v, kk), 0.0)
    for (v, kk, s), col in vi.columns(X_VKS):
        model.cost[col] = duals.eta.get(v, 0.0) * svc.rates[s]
    for key, col in vi.columns(rate_family):
        i, j, s = key[0], key[1], key[3]
        model.cost[col] = (duals.beta.get((i, j), 0.0) - w) * svc.rates[s]
    model.name = f"pricing[{k}]:{model.name}"


def build_pricing_milp(inst: NetworkInstance, k: int, duals: DualPrices):
    """构造业务 k 的定价 MILP(取极大)。

    Returns:
        Tuple[LpModel, VarIndex]: 模型与变量索引。
    """
    model, vi = build_milp(inst, services=[k])
    _set_pricing_objective(model, vi, inst, k, duals, R_IJKSP)
    return model, vi


def build_pricing_lp(inst: NetworkInstance, k: int, duals: DualPrices):
    """构造业务 k 的紧凑定价 LP(基于 LP-II 约束集)。"""
    model, vi = build_lp2(inst, services=[k])
    _set_pricing_objective(model, vi, inst, k, duals, R_IJKS)
    return model, vi


def recover_full_solution(inst: NetworkInstance, k: int, aggregated: SliceSolution,
                          tol_feas: float = 1e-6) -> SliceSolution:
    """把 LP-II 形式的解映射为 LP-I(MILP 松弛)中业务 k 的解。

    全部速率放在 p=1，所有路径的指示变量取聚合速率；x、y、θ、z_ijk 原样保留。
    结果按 MILP 松弛的行逐一复核。

    Raises:
        RecoveryError: 映射后的点违反某行超过 tol_feas，报告最大残差所在的行。
    """
    block = aggregated.service_block(k)
    block.r_ksp = None
    block.r_ijksp, block.z_ijksp = expand_aggregated(aggregate_rates(block.r_ijksp),
                                                     inst.path_budget)
    model, vi = build_milp(inst, services=[k])
    lp = relax(model)
    values = pack_solution(vi, block)
    violations = lp.row_violations(values)
    bound_gap = lp.bound_violations(values)
    worst_row = int(np.argmax(violations)) if violations.size else -1
    worst = float(violations[worst_row]) if worst_row >= 0 else 0.0
    if worst > tol_feas:
        raise RecoveryError(worst, lp.row_names[worst_row])
    if bound_gap.size and float(bound_gap.max()) > tol_feas:
        j = int(np.argmax(bound_gap))
        raise RecoveryError(float(bound_gap[j]), lp.var_names[j])
    return block


def tighten_indicators(inst: NetworkInstance, block: SliceSolution, k: int) -> SliceSolution:
    """把 z_ijk、x_vk、y_v 降到下层变量的最大值；不降低定价目标且保持可行。"""
    out = block.copy()
    for (i, j) in inst.link_keys:
        out.z_ijk[(i, j, k)] = max((val for (a, b, kk, s, p), val in out.z_ijksp.items()
                                    if (a, b) == (i, j) and kk == k), default=0.0)
    for v in inst.cloud_ids:
        out.x_vk[(v, k)] = max((val for (w, kk, s), val in out.x_vks.items()
                                if w == v and kk == k), default=0.0)
        out.y_v[(v,)] = out.x_vk[(v, k)]
    return out


def _cancel_aggregated_cycles(inst: NetworkInstance, sol: SliceSolution, k: int) -> SliceSolution:
    out = sol.copy()
    aggregated = aggregate_rates(out.r_ijksp)
    for s in inst.services[k].segments:
        rates = {(i, j): aggregated.get((i, j, k, s), 0.0) for (i, j) in inst.link_keys}
        for (i, j), val in cancel_cycles(rates).items():
            aggregated[(i, j, k, s)] = val
    out.r_ijksp, out.z_ijksp = expand_aggregated(aggregated, inst.path_budget)
    return out


def _price_lp(inst: NetworkInstance, k: int, duals: DualPrices,
              lp_params: LpParams) -> Tuple[Optional[float], Optional[SliceSolution]]:
    model, vi = build_pricing_lp(inst, k, duals)
    outcome = solve_lp(model, lp_params)
    if outcome.status is LpStatus.INFEASIBLE:
        return -math.inf, None
    if outcome.status is LpStatus.UNBOUNDED:
        raise NumericalFailure("定价 LP 无界", context=f"service {k}")
    return outcome.objective, extract_solution(vi, outcome.x, model, lp_params.tol_feas)


def find_pattern(inst: NetworkInstance, k: int, duals: DualPrices,
                 params: Optional[PricingParams] = None,
                 milp_params: Optional[MilpParams] = None,
                 known: Collection[str] = (),
                 deadline: Optional[float] = None,
                 iteration: int = 0) -> PricingOutcome:
    """为业务 k 求解定价问题。

    Args:
        inst (NetworkInstance): 实例。
        k (int): 业务下标。
        duals (DualPrices): 最近一次主问题的对偶价格或射线。
        params (Optional[PricingParams]): 定价参数。
        milp_params (Optional[MilpParams]): 定价 MILP 的求解参数。
        known (Collection[str]): 列池中已有模式的摘要，重复发现视为无新模式。
        deadline (Optional[float]): time.monotonic() 截止时刻；MILP 至少保留 milp_time_floor 秒。
        iteration (int): 当前迭代号，写入模式来源。

    Returns:
        PricingOutcome: 定价结果。
    """
    params = params or PricingParams()
    milp_params = milp_params or MilpParams()
    started = time.monotonic()
    outcome = PricingOutcome(service=k)

    if params.lp_acceleration:
        nu_lp, relaxed = _price_lp(inst, k, duals, milp_params.lp)
        outcome.nu_lp = nu_lp
        if nu_lp <= params.price_tol:
            outcome.wall_time = time.monotonic() - started
            logger.debug("业务 %d: ν_LP=%.6g，无新模式", k, nu_lp)
            return outcome
        try:
            acyclic = _cancel_aggregated_cycles(inst, relaxed, k)
            block = recover_full_solution(inst, k, acyclic, params.validation.tol_feas)
            block = tighten_indicators(inst, block, k)
            if block.is_integral(params.validation.int_tol):
                pattern = pattern_from_solution(inst, strip_cycles(inst, block.snapped(), params.validation),
                                                k, iteration, PatternSource.LP_RECOVERED,
                                                params.validation)
                outcome.nu = duals.price(pattern, inst.sigma)
                return _finish(outcome, pattern, params, known, started)
        except (RecoveryError, InvalidPatternError) as e:
            logger.warning("业务 %d: LP 解恢复失败，改解 MILP: %s", k, e)

    model, vi = build_pricing_milp(inst, k, duals)
    budget = milp_params.time_limit
    if deadline is not None:
        budget = max(params.milp_time_floor, deadline - time.monotonic())
    result = solve_milp(model, MilpParams(time_limit=budget, gap_tol=milp_params.gap_tol,
                                          int_tol=milp_params.int_tol,
                                          node_limit=milp_params.node_limit,
                                          lp=milp_params.lp))
    outcome.milp_used = True
    if not result.has_solution:
        logger.info("业务 %d: 定价 MILP 无可行解 (%s)", k, result.status.value)
        outcome.nu = -math.inf
        outcome.wall_time = time.monotonic() - started
        return outcome

    sol = extract_solution(vi, result.x, model, milp_params.lp.tol_feas)
    block = strip_cycles(inst, sol.snapped(milp_params.int_tol).service_block(k), params.validation)
    pattern = pattern_from_solution(inst, block, k, iteration, PatternSource.MILP,
                                    params.validation)
    outcome.nu = max(result.objective, duals.price(pattern, inst.sigma))
    if params.check_dominance and outcome.nu_lp is not None \
            and outcome.nu_lp < result.objective - 1e-6 * (1.0 + abs(result.objective)):
        raise NumericalFailure(f"ν_LP={outcome.nu_lp:.9g} < ν={result.objective:.9g}",
                               context=f"pricing service {k}")
    return _finish(outcome, pattern, params, known, started)


def _finish(outcome: PricingOutcome, pattern: Pattern, params: PricingParams,
            known: Collection[str], started: float) -> PricingOutcome:
    outcome.wall_time = time.monotonic() - started
    if outcome.nu is None or outcome.nu <= params.price_tol:
        logger.debug("业务 %d: ν=%.6g，无新模式", outcome.service, outcome.nu)
        return outcome
    if pattern.key in known:
        outcome.duplicate = True
        logger.debug("业务 %d: 模式 %s 已在列池中", outcome.service, pattern.key[:10])
        return outcome
    outcome.pattern = pattern
    logger.info("业务 %d: 新模式 %s (ν_LP=%s, ν=%.6g, MILP=%s)", outcome.service,
                pattern.key[:10], outcome.nu_lp, outcome.nu, outcome.milp_used)
    return outcome
