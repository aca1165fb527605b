"""自定义异常类。

所有应用级错误都继承自 SlicingError，命令行层据此统一映射退出码。
"""

from typing import Optional


class SlicingError(Exception):
    """网络切片优化器的异常基类。"""


class InstanceParseError(SlicingError):
    """实例文档无法解析(非法JSON或字段缺失)。"""


class InstanceValidationError(SlicingError):
    """实例违反了不变量。

    Attributes:
        field (str): 出错字段的路径，例如 "links[3].reliability"。
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class GeneratorConfigError(SlicingError):
    """随机实例生成器的配置不合法。"""


class UnreachableError(SlicingError):
    """业务目的节点从源节点不可达。"""


class ConfigError(SlicingError):
    """默认参数文件缺失、格式错误或参数路径非法。"""


class NumericalFailure(SlicingError):
    """单纯形或分支定界过程中的数值失败。

    Attributes:
        context (str): 失败发生的位置(如节点编号、迭代号)。
    """

    def __init__(self, message: str, context: str = ""):
        text = f"[{context}] {message}" if context else message
        super().__init__(text)
        self.context = context


class SolutionShapeError(SlicingError):
    """原始解向量与变量索引的维度不一致。"""


class RecoveryError(SlicingError):
    """聚合解不满足 LP-II 约束，无法恢复为完整解。

    Attributes:
        worst_residual (float): 最大约束违反量。
        row_name (str): 违反最严重的约束名称。
    """

    def __init__(self, worst_residual: float, row_name: Optional[str] = None):
        super().__init__(f"恢复前提不满足，最大残差 {worst_residual:.3e} 出现在 {row_name}")
        self.worst_residual = worst_residual
        self.row_name = row_name


class Stage2Failure(SlicingError):
    """第二阶段受限主问题 MILP 不可行(与实例本身不可行不同)。"""


class FlowDecompositionError(SlicingError):
    """链路流量的散度模式不满足分解前提。"""


class InvalidPatternError(SlicingError):
    """单业务嵌入违反约束，不能作为模式加入列池。

    Attributes:
        failures (list): 未通过校验的约束族名称。
    """

    def __init__(self, service: int, failures):
        super().__init__(f"业务 {service} 的嵌入未通过校验: {', '.join(failures)}")
        self.service = service
        self.failures = list(failures)


class InfeasibleService(SlicingError):
    """某个业务在满容量下也无法嵌入，整个问题不可行。

    Attributes:
        service (int): 第一个无法嵌入的业务下标。
        proven (bool): False 表示只是在时限内没有找到可行嵌入。
    """

    def __init__(self, service: int, proven: bool = True):
        reason = "不可行" if proven else "在时限内未找到可行嵌入"
        super().__init__(f"业务 {service} {reason}")
        self.service = service
        self.proven = proven


class UsageError(SlicingError):
    """命令行参数或输入文件集合不合法。"""
