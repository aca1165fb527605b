"""求解方法抽象基类定义。

所有求解方法(精确模型、线性松弛、列生成)都实现这里的统一接口，
Controller 据此注册方法并按 ID 调度，不需要了解具体模型。
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..formulations.slice_solution import SliceSolution
from ..instance import NetworkInstance
from ..solvers import LpParams, MilpParams
from ..validation import ValidationParams
from ...utils.constants import ParameterKeys


@dataclass
class MethodResult:
    """一次求解的原始结果。

    Attributes:
        status (str): 状态字符串(optimal / feasible / infeasible / solved ...)。
        objective (float): 目标值；松弛方法为松弛最优值。
        bound (float): 已证明的下界；没有时为 NaN。
        solution (Optional[SliceSolution]): 整数方法的完整解。
        iterations (int): 列生成迭代次数，其他方法为 0。
        columns (int): 列池中的列数。
        milp_pricing_solves (int): 定价 MILP 的求解次数。
        nodes (int): 分支定界节点数。
        traces (Dict[str, List[Dict]]): 迭代日志等附加表格。
    """
    status: str
    objective: float = math.nan
    bound: float = math.nan
    solution: Optional[SliceSolution] = None
    iterations: int = 0
    columns: int = 0
    milp_pricing_solves: int = 0
    nodes: int = 0
    traces: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)


class BaseMethod(ABC):
    """抽象基类，定义了所有求解方法的标准接口。"""

    # 是否产出整数可行解(需要写解文件并通过校验)
    produces_solution: bool = True

    @abstractmethod
    def get_name(self) -> str:
        """返回人类可读的方法名称，例如 "MILP (exact)"。"""
        pass

    @abstractmethod
    def get_id(self) -> str:
        """返回方法的唯一ID，例如 "milp"。"""
        pass

    @abstractmethod
    def run(self, instance: NetworkInstance, params: Mapping[str, Any]) -> MethodResult:
        """在实例上执行该方法。

        Args:
            instance (NetworkInstance): 网络实例。
            params (Mapping[str, Any]): 完整参数字典(按 ParameterKeys 分节)。

        Returns:
            MethodResult: 求解结果。
        """
        raise NotImplementedError("子类必须实现 'run' 方法。")


def solver_params(params: Mapping[str, Any]) -> Tuple[LpParams, MilpParams, ValidationParams]:
    """从参数字典构造 LP、MILP 与校验参数。"""
    lp = LpParams.from_dict(params.get(ParameterKeys.LP.value))
    milp = MilpParams.from_dict(params.get(ParameterKeys.MILP.value), lp)
    validation = ValidationParams.from_dict(params.get(ParameterKeys.VALIDATION.value))
    return lp, milp, validation
