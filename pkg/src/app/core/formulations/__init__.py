"""模型构造层: 各模型共享放置与约束骨架，路由部分按策略子类区分。"""

from .lp2_formulation import Lp2Formulation, build_lp2
from .milp_formulation import MilpFormulation, build_milp
from .minlp_formulation import MinlpFormulation, build_minlp_linearized
from .relaxation import extract_solution, model_census, pack_solution, relax
from .slice_solution import SliceSolution, evaluate_objective
from .var_index import VarIndex
