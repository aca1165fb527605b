"""求解方法层: 每个方法实现 BaseMethod 接口，由 Controller 按 ID 注册。"""

from .base_method import BaseMethod, MethodResult
from .ccg_method import CcgMethod, CcgNoAccelerationMethod, PatternLpMethod
from .exact_method import MilpMethod, MinlpLinearizedMethod
from .relaxation_method import LpOneMethod, LpTwoMethod, NlpLinearizedMethod
