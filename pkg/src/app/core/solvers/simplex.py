"""有界变量修正单纯形法。

两阶段法: 第一阶段用人工变量最小化不可行度，若最优值为正，则第一阶段的
对偶价格即为 Farkas 不可行证明；第二阶段固定人工变量为 0 后优化原目标。

- 定价: Dantzig 规则，连续退化步数超过阈值后切换为 Bland 规则，直到出现非退化步。
- 热启动: 基仍原始可行时直接进入第二阶段，只对偶可行时(分支定界收紧变量界之后)
  先运行对偶单纯形，不可行时以出基行给出射线。
- 基矩阵: scipy 稠密 LU 分解，两次重分解之间用乘积形式(eta)更新。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from .lp_model import BasisState, LpModel, LpOutcome, LpParams
from ...utils.constants import LpStatus, ObjectiveSense, Relation
from ...utils.exceptions import NumericalFailure

logger = logging.getLogger(__name__)

_OPTIMAL = 'optimal'
_UNBOUNDED = 'unbounded'
_INFEASIBLE = 'infeasible'


class _Engine:
    """在标准形 A x = b, l ≤ x ≤ u 上运行的单纯形核心。"""

    def __init__(self, A: sp.csc_matrix, b: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray, params: LpParams):
        self.A = A.tocsc()
        self.A.sum_duplicates()
        self.m, self.N = self.A.shape
        self.b = b
        self.lower = lower
        self.upper = upper
        self.params = params
        self.x = np.zeros(self.N)
        self.basis = np.zeros(self.m, dtype=int)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.iterations = 0
        self._lu = None
        self._etas: List[Tuple[int, np.ndarray]] = []

    def column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[start:end]] = self.A.data[start:end]
        return col

    def place_nonbasic(self, j: int, prefer_upper: bool = False) -> None:
        lo, up = self.lower[j], self.upper[j]
        if (prefer_upper and math.isfinite(up)) or not math.isfinite(lo):
            self.x[j] = up
            self.at_upper[j] = True
        else:
            self.x[j] = lo
            self.at_upper[j] = False

    def refactor(self) -> None:
        """重新分解基矩阵，并由非基变量重算基变量取值。"""
        B = np.zeros((self.m, self.m))
        for r, j in enumerate(self.basis):
            B[:, r] = self.column(int(j))
        lu, piv = lu_factor(B, check_finite=False)
        diag = np.abs(np.diag(lu))
        if diag.size and diag.min() <= self.params.tol_pivot * max(1.0, diag.max()):
            raise NumericalFailure("基矩阵奇异", context=f"iteration {self.iterations}")
        self._lu = (lu, piv)
        self._etas = []
        x_nb = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = lu_solve(self._lu, self.b - self.A @ x_nb, check_finite=False)

    def ftran(self, a: np.ndarray) -> np.ndarray:
        z = lu_solve(self._lu, a, check_finite=False)
        for r, w in self._etas:
            zr = z[r] / w[r]
            z -= zr * w
            z[r] = zr
        return z

    def btran(self, c: np.ndarray) -> np.ndarray:
        v = np.array(c, dtype=float)
        for r, w in reversed(self._etas):
            v[r] = (v[r] - (np.dot(w, v) - w[r] * v[r])) / w[r]
        return lu_solve(self._lu, v, trans=1, check_finite=False)

    def duals(self, cost: np.ndarray) -> np.ndarray:
        return self.btran(cost[self.basis])

    def run(self, cost: np.ndarray) -> str:
        """从当前(原始可行)基出发迭代到最优或无界。"""
        p = self.params
        streak = 0
        movable = self.upper > self.lower
        self.refactor()
        while True:
            if self.iterations >= p.max_iterations:
                raise NumericalFailure("超过单纯形迭代上限", context=f"iteration {self.iterations}")
            y = self.duals(cost)
            d = cost - self.A.T @ y
            nonbasic = ~self.is_basic & movable
            can_inc = nonbasic & ~self.at_upper & (d < -p.tol_opt)
            can_dec = nonbasic & self.at_upper & (d > p.tol_opt)
            eligible = can_inc | can_dec
            if not eligible.any():
                return _OPTIMAL
            bland = streak >= p.degenerate_streak
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if can_inc[q] else -1.0
            w = self.ftran(self.column(q))

            delta = -direction * w
            xb = self.x[self.basis]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            ratios = np.full(self.m, math.inf)
            down = (delta < -p.tol_pivot) & np.isfinite(lb)
            up = (delta > p.tol_pivot) & np.isfinite(ub)
            ratios[down] = (xb[down] - lb[down]) / (-delta[down])
            ratios[up] = (ub[up] - xb[up]) / delta[up]
            ratios = np.maximum(ratios, 0.0)
            t_flip = self.upper[q] - self.lower[q]
            t_min = ratios.min() if self.m else math.inf

            if not math.isfinite(t_min) and not math.isfinite(t_flip):
                return _UNBOUNDED
            self.iterations += 1

            if t_flip <= t_min:
                self.x[self.basis] = xb - direction * t_flip * w
                self.place_nonbasic(q, prefer_upper=not self.at_upper[q])
                streak = 0
                continue

            ties = np.flatnonzero(ratios <= t_min + 1e-12 * (1.0 + t_min))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(w[ties]))])
            t = ratios[r]
            leaving = int(self.basis[r])
            self.x[self.basis] = xb - direction * t * w
            self.x[q] += direction * t
            to_upper = delta[r] > 0
            self.x[leaving] = self.upper[leaving] if to_upper else self.lower[leaving]
            self.at_upper[leaving] = to_upper
            self.is_basic[leaving] = False
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self._etas.append((r, w))
            if len(self._etas) >= p.refactor_every:
                self.refactor()
            streak = streak + 1 if t <= p.tol_feas else 0

    def primal_feasible(self) -> bool:
        xb = self.x[self.basis]
        tol = self.params.tol_feas
        return not (np.any(xb < self.lower[self.basis] - tol)
                    or np.any(xb > self.upper[self.basis] + tol))

    def dual_feasible(self, cost: np.ndarray) -> bool:
        d = cost - self.A.T @ self.duals(cost)
        nonbasic = ~self.is_basic & (self.upper > self.lower)
        tol = self.params.tol_dual
        wrong = nonbasic & ((~self.at_upper & (d < -tol)) | (self.at_upper & (d > tol)))
        return not wrong.any()

    def run_dual(self, cost: np.ndarray, max_steps: int) -> Tuple[str, Optional[np.ndarray]]:
        """对偶单纯形: 从对偶可行基出发消除基变量的越界。

        Returns:
            Tuple[str, Optional[np.ndarray]]: (_OPTIMAL, None) 或 (_INFEASIBLE, 射线)。
            射线取自出基行 ρ = B⁻ᵀe_r，满足 yᵀb > max yᵀAx。

        Raises:
            NumericalFailure: 基矩阵奇异或超过 max_steps 次换基。
        """
        p = self.params
        movable = self.upper > self.lower
        self.refactor()
        for _ in range(max_steps):
            xb = self.x[self.basis]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            below = lb - xb
            above = xb - ub
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= p.tol_feas:
                return _OPTIMAL, None
            to_lower = below[r] > above[r]
            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self.btran(e)
            alpha = self.A.T @ rho
            d = cost - self.A.T @ self.duals(cost)
            nonbasic = ~self.is_basic & movable
            at_up = self.at_upper
            if to_lower:
                cand = (~at_up & (alpha < -p.tol_pivot)) | (at_up & (alpha > p.tol_pivot))
            else:
                cand = (~at_up & (alpha > p.tol_pivot)) | (at_up & (alpha < -p.tol_pivot))
            cand &= nonbasic
            if not cand.any():
                return _INFEASIBLE, (-rho if to_lower else rho)
            slack_d = np.where(at_up, np.maximum(-d, 0.0), np.maximum(d, 0.0))
            ratios = np.full(self.N, math.inf)
            ratios[cand] = slack_d[cand] / np.abs(alpha[cand])
            t_min = ratios.min()
            ties = np.flatnonzero(ratios <= t_min + 1e-12 * (1.0 + t_min))
            q = int(ties[np.argmax(np.abs(alpha[ties]))])
            w = self.ftran(self.column(q))
            target = lb[r] if to_lower else ub[r]
            t = (xb[r] - target) / w[r]
            leaving = int(self.basis[r])
            self.x[self.basis] = xb - t * w
            self.x[q] += t
            self.x[leaving] = target
            self.at_upper[leaving] = not to_lower
            self.is_basic[leaving] = False
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.iterations += 1
            self._etas.append((r, w))
            if len(self._etas) >= p.refactor_every:
                self.refactor()
        raise NumericalFailure("对偶单纯形换基次数超限", context=f"iteration {self.iterations}")


def _slack_bounds(relation: Relation) -> Tuple[float, float]:
    if relation is Relation.LE:
        return 0.0, math.inf
    if relation is Relation.GE:
        return -math.inf, 0.0
    return 0.0, 0.0


def _solve_without_rows(model: LpModel, lower: np.ndarray, upper: np.ndarray,
                        sign: float) -> LpOutcome:
    cost = sign * np.asarray(model.cost, dtype=float)
    x = np.where(cost >= 0, lower, upper)
    if not np.all(np.isfinite(x)):
        status = LpStatus.UNBOUNDED
        x = np.where(np.isfinite(x), x, 0.0)
    else:
        status = LpStatus.OPTIMAL
    return LpOutcome(status=status, x=x, objective=model.objective_value(x),
                     duals=np.zeros(0), reduced_costs=np.asarray(model.cost, dtype=float))


def solve_lp(model: LpModel, params: Optional[LpParams] = None,
             warm_start: Optional[BasisState] = None,
             bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> LpOutcome:
    """求解线性规划(忽略整数标记)。

    Args:
        model (LpModel): 待求解模型。
        params (Optional[LpParams]): 容差与迭代参数。
        warm_start (Optional[BasisState]): 上一次求解的基。仍原始可行时直接进入第二阶段；
            变量界改变后若只是对偶可行，先用对偶单纯形恢复原始可行。
        bounds (Optional[Tuple]): 覆盖变量界 (lower, upper)，分支定界使用。

    Returns:
        LpOutcome: 结果。不可行时 farkas 为满足 yᵀb > max{yᵀAx} 的射线，
            其符号与极小化问题的对偶一致(≤ 行非正，≥ 行非负)。
            变量界自相矛盾(某个下界大于上界)时没有行射线: farkas 为 None，
            冲突的列记录在 bound_conflict 中。

    Raises:
        NumericalFailure: 基矩阵奇异或超过迭代上限。
        ValueError: 模型非法或含有自由变量。
    """
    params = params or LpParams()
    model.validate()
    n, m = model.num_variables, model.num_constraints
    lower = np.asarray(bounds[0] if bounds else model.lower, dtype=float)
    upper = np.asarray(bounds[1] if bounds else model.upper, dtype=float)
    if np.any(~np.isfinite(lower) & ~np.isfinite(upper)):
        raise ValueError("不支持上下界均无穷的自由变量")
    sign = 1.0 if model.sense is ObjectiveSense.MINIMIZE else -1.0
    if np.any(lower > upper):
        return _infeasible_by_bounds(model, lower, upper)
    if m == 0:
        return _solve_without_rows(model, lower, upper, sign)

    A = model.matrix()
    b = np.asarray(model.rhs, dtype=float)
    slack_lo, slack_up = zip(*(_slack_bounds(rel) for rel in model.relations))
    full = sp.hstack([A, sp.identity(m, format='csr')], format='csc')
    lo_all = np.concatenate([lower, slack_lo])
    up_all = np.concatenate([upper, slack_up])
    phase2_cost = np.zeros(n + m)
    phase2_cost[:n] = sign * np.asarray(model.cost, dtype=float)

    engine = None
    if warm_start is not None:
        engine = _try_warm_start(full, b, lo_all, up_all, params, warm_start, n, m)
    if engine is not None and not engine.primal_feasible():
        if not engine.dual_feasible(phase2_cost):
            engine = None
        else:
            try:
                verdict, ray = engine.run_dual(phase2_cost, max_steps=10 * (n + m))
            except NumericalFailure as e:
                logger.debug("LP %s 对偶单纯形放弃 (%s)，改为冷启动", model.name, e)
                engine, verdict = None, None
            if verdict == _INFEASIBLE:
                logger.debug("LP %s 不可行 (对偶单纯形 %d 次迭代)", model.name, engine.iterations)
                return LpOutcome(status=LpStatus.INFEASIBLE, x=engine.x[:n].copy(),
                                 objective=math.nan, duals=np.zeros(m),
                                 reduced_costs=np.zeros(n), farkas=ray,
                                 iterations=engine.iterations)
    if engine is None:
        engine, farkas = _phase_one(full, b, lo_all, up_all, params, n, m)
        if farkas is not None:
            logger.debug("LP %s 不可行 (第一阶段 %d 次迭代)", model.name, engine.iterations)
            return LpOutcome(status=LpStatus.INFEASIBLE, x=engine.x[:n].copy(),
                             objective=math.nan, duals=np.zeros(m),
                             reduced_costs=np.zeros(n), farkas=farkas,
                             iterations=engine.iterations)
        phase2_cost = np.concatenate([phase2_cost, np.zeros(engine.N - n - m)])

    verdict = engine.run(phase2_cost)
    x = engine.x[:n].copy()
    if verdict == _UNBOUNDED:
        logger.debug("LP %s 无界", model.name)
        return LpOutcome(status=LpStatus.UNBOUNDED, x=x, objective=-sign * math.inf,
                         duals=np.zeros(m), reduced_costs=np.zeros(n),
                         iterations=engine.iterations)
    y = engine.duals(phase2_cost)
    d = phase2_cost - engine.A.T @ y
    basis_state = None
    if np.all(engine.basis < n + m):
        basic = tuple(int(j) if j < n else -(int(j) - n + 1) for j in engine.basis)
        at_up = tuple(int(j) for j in np.flatnonzero(engine.at_upper[:n] & ~engine.is_basic[:n]))
        basis_state = BasisState(basic=basic, at_upper=at_up)
    logger.debug("LP %s 最优, %d 次迭代", model.name, engine.iterations)
    return LpOutcome(status=LpStatus.OPTIMAL, x=x, objective=model.objective_value(x),
                     duals=sign * y, reduced_costs=sign * d[:n], iterations=engine.iterations,
                     basis=basis_state)


def _infeasible_by_bounds(model: LpModel, lower, upper) -> LpOutcome:
    n, m = model.num_variables, model.num_constraints
    conflict = tuple(int(j) for j in np.flatnonzero(lower > upper))
    logger.debug("LP %s 的变量界冲突: %s", model.name,
                 ', '.join(model.var_names[j] for j in conflict))
    return LpOutcome(status=LpStatus.INFEASIBLE, x=np.zeros(n), objective=math.nan,
                     duals=np.zeros(m), reduced_costs=np.zeros(n), farkas=None,
                     bound_conflict=conflict)


def _try_warm_start(full, b, lo_all, up_all, params, warm: BasisState,
                    n: int, m: int) -> Optional[_Engine]:
    cols = [j if j >= 0 else n + (-j - 1) for j in warm.basic]
    if len(cols) != m or len(set(cols)) != m or any(c < 0 or c >= n + m for c in cols):
        return None
    engine = _Engine(full, b, lo_all, up_all, params)
    engine.basis[:] = cols
    engine.is_basic[cols] = True
    upper_set = set(warm.at_upper)
    for j in range(n + m):
        if not engine.is_basic[j]:
            engine.place_nonbasic(j, prefer_upper=j in upper_set)
    try:
        engine.refactor()
    except NumericalFailure:
        return None
    return engine


def _phase_one(full, b, lo_all, up_all, params, n: int, m: int):
    x0 = np.zeros(n + m)
    at_up = np.zeros(n + m, dtype=bool)
    for j in range(n):
        if math.isfinite(lo_all[j]):
            x0[j] = lo_all[j]
        else:
            x0[j] = up_all[j]
            at_up[j] = True
    residual = b - full[:, :n] @ x0[:n]
    tol = params.tol_feas
    basis = np.zeros(m, dtype=int)
    art_rows, art_signs = [], []
    for i in range(m):
        j = n + i
        lo, up = lo_all[j], up_all[j]
        if lo - tol <= residual[i] <= up + tol:
            basis[i] = j
            x0[j] = residual[i]
        else:
            bound = up if residual[i] > up else lo
            x0[j] = bound
            at_up[j] = bound == up and math.isfinite(up) and bound != lo
            art_rows.append(i)
            art_signs.append(1.0 if residual[i] - bound >= 0 else -1.0)

    n_art = len(art_rows)
    if n_art:
        art = sp.csc_matrix((art_signs, (art_rows, list(range(n_art)))), shape=(m, n_art))
        full = sp.hstack([full, art], format='csc')
    lo_ext = np.concatenate([lo_all, np.zeros(n_art)])
    up_ext = np.concatenate([up_all, np.full(n_art, math.inf)])
    engine = _Engine(full, b, lo_ext, up_ext, params)
    engine.x[:n + m] = x0
    engine.at_upper[:n + m] = at_up
    for pos, i in enumerate(art_rows):
        basis[i] = n + m + pos
        engine.x[n + m + pos] = abs(residual[i] - x0[n + i])
    engine.basis[:] = basis
    engine.is_basic[basis] = True
    if not n_art:
        return engine, None

    cost1 = np.zeros(n + m + n_art)
    cost1[n + m:] = 1.0
    engine.run(cost1)
    infeasibility = float(engine.x[n + m:].sum())
    if infeasibility > params.tol_feas:
        return engine, engine.duals(cost1)
    engine.lower[n + m:] = 0.0
    engine.upper[n + m:] = 0.0
    return engine, None


# ---------------------------------------------------------------------------
# 证明校验
# ---------------------------------------------------------------------------

@dataclass
class DualityReport:
    """强对偶与互补松弛的校验报告。"""
    primal_objective: float
    dual_objective: float
    gap: float
    ok: bool
    violations: List[str] = field(default_factory=list)


def verify_duality(model: LpModel, outcome: LpOutcome,
                   params: Optional[LpParams] = None) -> DualityReport:
    """校验最优解的对偶间隙、对偶符号与互补松弛。

    Args:
        model (LpModel): 原模型。
        outcome (LpOutcome): 状态为 OPTIMAL 的结果。
        params (Optional[LpParams]): 容差。

    Returns:
        DualityReport: 校验报告，违例逐条列出。
    """
    params = params or LpParams()
    if outcome.status is not LpStatus.OPTIMAL:
        raise ValueError("只能校验最优结果")
    minimize = model.sense is ObjectiveSense.MINIMIZE
    x, y = outcome.x, outcome.duals
    b = np.asarray(model.rhs, dtype=float)
    c = np.asarray(model.cost, dtype=float)
    d = c - model.matrix().T @ y if model.num_constraints else c.copy()
    violations: List[str] = []
    tol_d, tol_p = params.tol_dual, params.tol_feas

    dual_obj = float(np.dot(b, y)) + model.objective_offset
    for j in range(model.num_variables):
        lo, up = model.lower[j], model.upper[j]
        toward_lower = d[j] > 0 if minimize else d[j] < 0
        if abs(d[j]) <= tol_d:
            continue
        bound = lo if toward_lower else up
        if not math.isfinite(bound):
            violations.append(f"变量 {model.var_names[j]}: 约化成本 {d[j]:.3e} 指向无穷界")
            continue
        dual_obj += d[j] * bound
        if abs(x[j] - bound) > tol_p * (1.0 + abs(bound)):
            violations.append(f"变量 {model.var_names[j]}: 约化成本 {d[j]:.3e} 但取值 {x[j]:.6g} 不在界上")

    slack = b - model.row_activity(x) if model.num_constraints else np.zeros(0)
    for i, rel in enumerate(model.relations):
        sign_ok = True
        if rel is Relation.LE:
            sign_ok = y[i] <= tol_d if minimize else y[i] >= -tol_d
        elif rel is Relation.GE:
            sign_ok = y[i] >= -tol_d if minimize else y[i] <= tol_d
        if not sign_ok:
            violations.append(f"约束 {model.row_names[i]}: 对偶 {y[i]:.3e} 符号错误")
        if abs(y[i]) > tol_d and abs(slack[i]) > tol_p * (1.0 + abs(b[i])):
            violations.append(f"约束 {model.row_names[i]}: 对偶 {y[i]:.3e} 与松弛 {slack[i]:.3e} 不互补")

    for i in np.flatnonzero(model.row_violations(x) > tol_p * (1.0 + np.abs(b))):
        violations.append(f"约束 {model.row_names[i]} 原始不可行")

    primal_obj = model.objective_value(x)
    gap = abs(primal_obj - dual_obj)
    if gap > tol_d * (1.0 + abs(primal_obj)):
        violations.append(f"对偶间隙 {gap:.3e}")
    return DualityReport(primal_objective=primal_obj, dual_objective=dual_obj, gap=gap,
                         ok=not violations, violations=violations)


def farkas_margin(model: LpModel, ray: np.ndarray,
                  bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> float:
    """返回 yᵀb − max_{l≤x≤u, 松弛合法} yᵀAx，正值表示 Farkas 证明成立。

    ray 的符号约定: ≤ 行取非正、≥ 行取非负，否则返回 -inf。
    """
    lower = np.asarray(bounds[0] if bounds else model.lower, dtype=float)
    upper = np.asarray(bounds[1] if bounds else model.upper, dtype=float)
    tol = 1e-9
    for i, rel in enumerate(model.relations):
        if rel is Relation.LE and ray[i] > tol:
            return -math.inf
        if rel is Relation.GE and ray[i] < -tol:
            return -math.inf
    g = model.matrix().T @ ray
    best = 0.0
    for j, gj in enumerate(g):
        if abs(gj) <= tol:
            continue
        bound = upper[j] if gj > 0 else lower[j]
        if not math.isfinite(bound):
            return -math.inf
        best += gj * bound
    return float(np.dot(ray, model.rhs)) - best
