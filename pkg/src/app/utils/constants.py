"""应用程序范围内的常量定义。

该模块定义了所有跨模块通信时使用的枚举和常量，
以避免使用"魔术字符串"，增强代码的可读性和可维护性。
"""

from enum import Enum


class ObjectiveSense(Enum):
    """目标函数方向。"""
    MINIMIZE = 'min'
    MAXIMIZE = 'max'


class Relation(Enum):
    """约束关系类型。"""
    LE = '<='
    EQ = '='
    GE = '>='


class LpStatus(Enum):
    """线性规划求解状态。"""
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


class MilpStatus(Enum):
    """分支定界求解状态。

    中文翻译:
    - OPTIMAL: 证明最优
    - FEASIBLE: 达到时间/节点上限，仅有可行解
    - INFEASIBLE: 不可行
    - UNBOUNDED: 无界
    - UNKNOWN: 达到上限且没有任何可行解
    """
    OPTIMAL = 'optimal'
    FEASIBLE = 'feasible'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    UNKNOWN = 'unknown'


class CcgStatus(Enum):
    """列生成算法的最终状态。"""
    SOLVED = 'solved'
    INFEASIBLE = 'infeasible'
    ITER_LIMIT = 'iter_limit'
    STAGE2_FAILED = 'stage2_failed'


class PatternSource(Enum):
    """模式(列)的来源。"""
    INIT = 'init'
    LP_RECOVERED = 'lp-recovered'
    MILP = 'milp'


class FormulationKind(Enum):
    """变量索引所属的模型族。"""
    MILP = 'milp'
    MINLP = 'minlp'
    LP2 = 'lp2'
    MASTER = 'master'


class MethodIds(Enum):
    """已注册求解方法的ID。"""
    MILP = 'milp'
    MINLP_LIN = 'minlp-lin'
    LP_I = 'lp-i'
    LP_II = 'lp-ii'
    NLP_L = 'nlp-l'
    P_LP = 'p-lp'
    CCG = 'ccg'
    CCG_NOACC = 'ccg-noacc'


class ConstraintFamily(Enum):
    """校验报告中的约束族名称。"""
    BOUNDS = 'bounds'
    PLACEMENT = 'placement'
    ACTIVATION = 'activation'
    NODE_CAPACITY = 'node_capacity'
    FLOW_CONSERVATION = 'flow_conservation'
    PATH_SPLIT = 'path_split'
    BILINEAR = 'bilinear'
    LINK_CAPACITY = 'link_capacity'
    LINK_USAGE = 'link_usage'
    RELIABILITY = 'reliability'
    DELAY = 'delay'


class ParameterKeys(Enum):
    """默认参数文件中的顶层段名。"""
    LP = 'lp'
    MILP = 'milp'
    CCG = 'ccg'
    PRICING = 'pricing'
    GENERATOR = 'generator'
    MODEL = 'model'
    VALIDATION = 'validation'


# 命令行退出码
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2
EXIT_INVALID_SOLUTION = 3

# 这些状态表示方法给出了一个可用的整数解
SOLUTION_STATUSES = frozenset({
    MilpStatus.OPTIMAL.value,
    MilpStatus.FEASIBLE.value,
    CcgStatus.SOLVED.value,
    CcgStatus.ITER_LIMIT.value,
})

DEFAULT_SIGMA = 0.0005
DEFAULT_PATH_BUDGET = 2
