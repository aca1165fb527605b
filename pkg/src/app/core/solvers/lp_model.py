"""线性/混合整数规划模型容器。

LpModel 以三元组形式累积系数，既支持追加约束行，也支持给已有行追加新列
(主问题在列生成中逐步加列)。求解期间模型不可修改。
"""

import copy
import math
from dataclasses import dataclass, fields
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ...utils.constants import LpStatus, ObjectiveSense, Relation

INF = math.inf

Coefficients = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


@dataclass
class LpParams:
    """单纯形参数。"""
    tol_feas: float = 1e-7
    tol_pivot: float = 1e-9
    tol_dual: float = 1e-6
    tol_opt: float = 1e-9
    refactor_every: int = 50
    degenerate_streak: int = 30
    max_iterations: int = 200000

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "LpParams":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in (data or {}).items() if k in known})


@dataclass
class BasisState:
    """可复用的基。

    basic 中非负整数 j 表示结构变量 j，负数 -(i+1) 表示第 i 行的松弛变量；
    at_upper 为处于上界的非基结构变量。
    """
    basic: Tuple[int, ...]
    at_upper: Tuple[int, ...] = ()


@dataclass
class LpOutcome:
    """LP 求解结果。对偶值采用原目标方向下的符号约定。"""
    status: LpStatus
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    farkas: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[BasisState] = None
    bound_conflict: Tuple[int, ...] = ()


class LpModel:
    """带变量界和整数标记的线性模型。"""

    def __init__(self, sense: ObjectiveSense = ObjectiveSense.MINIMIZE, name: str = ""):
        self.sense = sense
        self.name = name
        self.objective_offset = 0.0
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.cost: List[float] = []
        self.integer: List[bool] = []
        self.priority: List[int] = []
        self.var_names: List[str] = []
        self.relations: List[Relation] = []
        self.rhs: List[float] = []
        self.row_names: List[str] = []
        self.row_families: List[str] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []
        self._csr: Optional[sp.csr_matrix] = None

    @property
    def num_variables(self) -> int:
        return len(self.cost)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)

    @property
    def has_integers(self) -> bool:
        return any(self.integer)

    def add_variable(self, lower: float = 0.0, upper: float = INF, cost: float = 0.0,
                     integer: bool = False, name: str = "", priority: int = 0) -> int:
        """追加一个变量并返回列下标。priority 越大，分支定界越先在该列上分支。"""
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.cost.append(float(cost))
        self.integer.append(bool(integer))
        self.priority.append(int(priority))
        self.var_names.append(name or f"v{len(self.cost) - 1}")
        self._csr = None
        return len(self.cost) - 1

    def add_constraint(self, coefs: Coefficients, relation: Relation, rhs: float,
                       name: str = "", family: str = "") -> int:
        row = len(self.rhs)
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        for col, val in items:
            if val != 0.0:
                self._rows.append(row)
                self._cols.append(int(col))
                self._vals.append(float(val))
        self.relations.append(relation)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"c{row}")
        self.row_families.append(family)
        self._csr = None
        return row

    def add_column_entries(self, col: int, entries: Mapping[int, float]) -> None:
        """给已有约束行追加第 col 列的系数。"""
        for row, val in entries.items():
            if val != 0.0:
                self._rows.append(int(row))
                self._cols.append(int(col))
                self._vals.append(float(val))
        self._csr = None

    def matrix(self) -> sp.csr_matrix:
        """返回 m×n 约束矩阵(重复元素求和)。"""
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (np.asarray(self._vals, dtype=float),
                 (np.asarray(self._rows, dtype=int), np.asarray(self._cols, dtype=int))),
                shape=(self.num_constraints, self.num_variables))
        return self._csr

    def copy(self) -> "LpModel":
        clone = copy.copy(self)
        for attr in ('lower', 'upper', 'cost', 'integer', 'priority', 'var_names', 'relations',
                     'rhs', 'row_names', 'row_families', '_rows', '_cols', '_vals'):
            setattr(clone, attr, list(getattr(self, attr)))
        clone._csr = None
        return clone

    def validate(self) -> None:
        """检查模型不变量。

        Raises:
            ValueError: 下界大于上界、系数为 NaN 或下标越界。
        """
        for j, (lo, up) in enumerate(zip(self.lower, self.upper)):
            if math.isnan(lo) or math.isnan(up) or lo > up:
                raise ValueError(f"变量 {self.var_names[j]} 的界非法: [{lo}, {up}]")
        if any(math.isnan(v) for v in self._vals) or any(math.isnan(c) for c in self.cost):
            raise ValueError("模型含有 NaN 系数")
        if any(math.isnan(b) for b in self.rhs):
            raise ValueError("模型含有 NaN 右端项")
        n, m = self.num_variables, self.num_constraints
        if any(c < 0 or c >= n for c in self._cols) or any(r < 0 or r >= m for r in self._rows):
            raise ValueError("系数下标越界")

    def objective_value(self, x: Sequence[float]) -> float:
        return float(np.dot(self.cost, x)) + self.objective_offset

    def row_activity(self, x: Sequence[float]) -> np.ndarray:
        return self.matrix() @ np.asarray(x, dtype=float)

    def row_violations(self, x: Sequence[float]) -> np.ndarray:
        """每行的违反量(非负，0 表示满足)。"""
        act = self.row_activity(x)
        rhs = np.asarray(self.rhs, dtype=float)
        viol = np.zeros(len(rhs))
        for i, rel in enumerate(self.relations):
            if rel is Relation.LE:
                viol[i] = max(0.0, act[i] - rhs[i])
            elif rel is Relation.GE:
                viol[i] = max(0.0, rhs[i] - act[i])
            else:
                viol[i] = abs(act[i] - rhs[i])
        return viol

    def bound_violations(self, x: Sequence[float]) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        return np.maximum(0.0, np.maximum(lo - arr, arr - up))


def _format_term(coef: float, name: str, first: bool) -> str:
    sign = '-' if coef < 0 else ('' if first else '+')
    mag = abs(coef)
    body = name if mag == 1.0 else f"{mag:.12g} {name}"
    return f"{sign} {body}".strip() if not first else f"{sign}{body}"


def dump_model(model: LpModel) -> str:
    """把模型导出为代数文本，一行一个约束，便于与手写模型对比。"""
    lines = [f"\\ model {model.name}".rstrip()]
    head = 'minimize' if model.sense is ObjectiveSense.MINIMIZE else 'maximize'
    obj_terms = [(j, c) for j, c in enumerate(model.cost) if c != 0.0]
    obj = ' '.join(_format_term(c, model.var_names[j], idx == 0)
                   for idx, (j, c) in enumerate(obj_terms)) or '0'
    if model.objective_offset:
        obj += f" + {model.objective_offset:.12g}"
    lines.append(f"{head}: {obj}")
    lines.append("subject to")
    csr = model.matrix()
    for i in range(model.num_constraints):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        cols = csr.indices[start:end]
        vals = csr.data[start:end]
        order = np.argsort(cols, kind='stable')
        terms = ' '.join(_format_term(float(vals[t]), model.var_names[int(cols[t])], pos == 0)
                         for pos, t in enumerate(order)) or '0'
        lines.append(f"  {model.row_names[i]}: {terms} {model.relations[i].value} "
                     f"{model.rhs[i]:.12g}")
    lines.append("bounds")
    for j in range(model.num_variables):
        tag = ' integer' if model.integer[j] else ''
        lines.append(f"  {model.lower[j]:.12g} <= {model.var_names[j]} <= "
                     f"{model.upper[j]:.12g}{tag}")
    lines.append("end")
    return "\n".join(lines) + "\n"


@dataclass
class CensusEntry:
    variables: int = 0
    constraints: int = 0


def census(model: LpModel, var_families: Optional[Sequence[str]] = None) -> Dict[str, CensusEntry]:
    """按族统计变量与约束数量。

    Args:
        model (LpModel): 模型。
        var_families (Optional[Sequence[str]]): 每列所属的变量族，缺省时按变量名前缀。

    Returns:
        Dict[str, CensusEntry]: 族名到计数的映射。
    """
    table: Dict[str, CensusEntry] = {}
    families = var_families or [name.split('[')[0] for name in model.var_names]
    for fam in families:
        table.setdefault(fam, CensusEntry()).variables += 1
    for fam in model.row_families:
        table.setdefault(fam or 'other', CensusEntry()).constraints += 1
    return table
