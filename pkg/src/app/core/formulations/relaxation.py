"""线性松弛、解向量与语义解之间的转换。"""

from typing import Dict, Sequence

import numpy as np

from .lp2_formulation import aggregate_rates, expand_aggregated
from .slice_solution import SliceSolution
from .var_index import R_IJKS, VarIndex
from ..solvers.lp_model import CensusEntry, LpModel, census
from ...utils.constants import FormulationKind
from ...utils.exceptions import SolutionShapeError


def relax(model: LpModel) -> LpModel:
    """清除整数标记；二元变量的界本来就是 [0,1]，保持不变。

    对纯 LP 调用返回内容相同的副本，因此 relax(relax(m)) 与 relax(m) 相同。
    """
    relaxed = model.copy()
    relaxed.integer = [False] * relaxed.num_variables
    if relaxed.name and not relaxed.name.startswith('relaxed:'):
        relaxed.name = f"relaxed:{relaxed.name}"
    return relaxed


def extract_solution(vi: VarIndex, values: Sequence[float], model: LpModel = None,
                     tol_feas: float = 1e-7) -> SliceSolution:
    """把原始解向量映射为语义解。

    Args:
        vi (VarIndex): 变量索引。
        values (Sequence[float]): 解向量。
        model (LpModel): 可选，提供时在 tol_feas 内把取值夹到变量界上。
        tol_feas (float): 夹取容差。

    Returns:
        SliceSolution: 语义解。LP-II 的聚合速率按恢复约定展开到 p=1。

    Raises:
        SolutionShapeError: 向量长度与索引不一致。
    """
    arr = np.asarray(values, dtype=float)
    if arr.shape != (len(vi),):
        raise SolutionShapeError(f"解向量长度 {arr.shape} 与变量数 {len(vi)} 不一致")
    if model is not None:
        lo = np.asarray(model.lower)
        up = np.asarray(model.upper)
        near = (arr >= lo - tol_feas) & (arr <= up + tol_feas)
        arr = np.where(near, np.clip(arr, lo, up), arr)

    sol = SliceSolution(r_ksp={} if vi.kind is FormulationKind.MINLP else None)
    aggregated: Dict = {}
    for col, family, key in vi.items():
        if family == R_IJKS:
            aggregated[key] = float(arr[col])
        else:
            getattr(sol, family)[key] = float(arr[col])
    if aggregated:
        sol.r_ijksp, sol.z_ijksp = expand_aggregated(aggregated, vi.instance.path_budget)
    return sol


def pack_solution(vi: VarIndex, solution: SliceSolution) -> np.ndarray:
    """extract_solution 的逆映射，缺省键取 0。"""
    values = np.zeros(len(vi))
    aggregated = aggregate_rates(solution.r_ijksp) if vi.has_family(R_IJKS) else {}
    for col, family, key in vi.items():
        if family == R_IJKS:
            values[col] = aggregated.get(key, 0.0)
            continue
        table = getattr(solution, family, None)
        if table:
            values[col] = table.get(key, 0.0)
    return values


def model_census(model: LpModel, vi: VarIndex) -> Dict[str, CensusEntry]:
    """按变量族与约束族统计模型规模。"""
    return census(model, vi.families)


