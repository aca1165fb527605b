"""控制器模块，连接命令行与求解逻辑。

负责加载默认参数、注册求解方法、按 ID 调度一次求解，
并把结果整理成统一的 RunRecord。
"""

import copy
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .formulations.slice_solution import SliceSolution
from .instance import NetworkInstance
from .methods import (BaseMethod, CcgMethod, CcgNoAccelerationMethod, LpOneMethod, LpTwoMethod,
                      MethodResult, MilpMethod, MinlpLinearizedMethod, NlpLinearizedMethod,
                      PatternLpMethod)
from .validation import ValidationParams, ValidationReport, validate_solution
from ..utils.constants import ParameterKeys
from ..utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[3] / 'config' / 'default_params.json'


@dataclass
class RunRecord:
    """一次 (实例, 方法) 求解的记录，CSV 的一行。"""
    instance: str
    method: str
    status: str
    objective: float = math.nan
    bound: float = math.nan
    iterations: int = 0
    columns: int = 0
    milp_pricing_solves: int = 0
    nodes: int = 0
    wall_time: float = 0.0
    seed: Optional[int] = None
    validated: str = ''
    error: str = ''
    gap_improvement: float = math.nan
    plp_gap_improvement: float = math.nan

    @classmethod
    def columns_order(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_row(cls, row: Mapping[str, Any]) -> "RunRecord":
        """由 CSV 行还原记录；空值按字段默认值处理。"""
        kwargs: Dict[str, Any] = {}
        for f in fields(cls):
            if f.name not in row:
                continue
            value = row[f.name]
            if value is None or (isinstance(value, float) and math.isnan(value)) or value == '':
                if f.name == 'seed':
                    kwargs[f.name] = None
                continue
            if f.name in ('iterations', 'columns', 'milp_pricing_solves', 'nodes', 'seed'):
                kwargs[f.name] = int(value)
            elif f.name in ('objective', 'bound', 'wall_time', 'gap_improvement',
                            'plp_gap_improvement'):
                kwargs[f.name] = float(value)
            else:
                kwargs[f.name] = str(value)
        return cls(**kwargs)


class Controller:
    """应用程序控制器类，协调命令行与求解方法。"""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        self.default_params: Dict[str, Any] = {}
        self.params: Dict[str, Any] = {}
        self.methods: Dict[str, BaseMethod] = {}
        self.last_result: Optional[MethodResult] = None
        self.last_report: Optional[ValidationReport] = None

        self._load_all_default_params()
        self._register_methods()

    def _load_all_default_params(self) -> None:
        """从配置文件加载默认参数。

        Raises:
            ConfigError: 文件不存在、不是合法 JSON 或缺少必需分节。
        """
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                self.default_params = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"加载默认参数文件失败: {e}") from e
        if not isinstance(self.default_params, dict):
            raise ConfigError("默认参数文件的顶层必须是对象")
        missing = [key.value for key in ParameterKeys if key.value not in self.default_params]
        if missing:
            raise ConfigError(f"默认参数缺少分节: {', '.join(missing)}")
        self.params = copy.deepcopy(self.default_params)
        logger.debug("已加载默认参数 %s", self.config_path)

    def _register_methods(self) -> None:
        """注册所有可用的求解方法。"""
        for method in (MilpMethod(), MinlpLinearizedMethod(), LpOneMethod(), LpTwoMethod(),
                       NlpLinearizedMethod(), PatternLpMethod(), CcgMethod(),
                       CcgNoAccelerationMethod()):
            self.methods[method.get_id()] = method

    def get_registered_methods(self) -> List[Tuple[str, str]]:
        """获取所有已注册方法的ID和名称。"""
        return [(method.get_id(), method.get_name()) for method in self.methods.values()]

    def get_method(self, method_id: str) -> BaseMethod:
        if method_id not in self.methods:
            raise ConfigError(f"未找到ID为 '{method_id}' 的方法")
        return self.methods[method_id]

    def reset_parameters(self) -> None:
        self.params = copy.deepcopy(self.default_params)

    def update_parameter(self, param_path: str, value: Any) -> None:
        """按点分路径更新参数，例如 "milp.time_limit"。

        Raises:
            ConfigError: 顶层分节不存在。
        """
        keys = param_path.split('.')
        if keys[0] not in self.params:
            raise ConfigError(f"未知参数分节: {keys[0]}")
        d = self.params
        for key in keys[:-1]:
            d = d.setdefault(key, {})
        d[keys[-1]] = value

    def get_parameter(self, param_path: str, default: Any = None) -> Any:
        d: Any = self.params
        for key in param_path.split('.'):
            if not isinstance(d, dict) or key not in d:
                return default
            d = d[key]
        return d

    def run_method(self, instance: NetworkInstance, method_id: str,
                   params: Optional[Mapping[str, Any]] = None,
                   seed: Optional[int] = None) -> Tuple[RunRecord, Optional[SliceSolution]]:
        """在实例上运行一个方法并校验其整数解。

        Args:
            instance (NetworkInstance): 实例。
            method_id (str): 方法ID。
            params (Optional[Mapping[str, Any]]): 参数字典；缺省使用当前参数。
            seed (Optional[int]): 生成实例所用的种子，只写入记录。

        Returns:
            Tuple[RunRecord, Optional[SliceSolution]]: 记录与整数解(没有时为 None)。
        """
        method = self.get_method(method_id)
        run_params = copy.deepcopy(dict(params) if params is not None else self.params)
        started = time.monotonic()
        result = method.run(instance, run_params)
        wall = time.monotonic() - started

        record = RunRecord(instance=instance.name, method=method_id, status=result.status,
                           objective=result.objective, bound=result.bound,
                           iterations=result.iterations, columns=result.columns,
                           milp_pricing_solves=result.milp_pricing_solves, nodes=result.nodes,
                           wall_time=wall, seed=seed)
        self.last_result = result
        self.last_report = None
        if result.solution is not None:
            validation = ValidationParams.from_dict(run_params.get(ParameterKeys.VALIDATION.value))
            report = validate_solution(instance, result.solution, validation)
            self.last_report = report
            record.validated = 'passed' if report.passed else 'failed'
            if not report.passed:
                logger.error("%s 的解未通过校验: %s", method_id, ', '.join(report.failures()))
        return record, result.solution
