"""求解器层: 有界变量修正单纯形法与分支定界。"""

from .branch_and_bound import MilpParams, MilpResult, solve_milp
from .lp_model import BasisState, LpModel, LpOutcome, LpParams, dump_model
from .simplex import DualityReport, farkas_margin, solve_lp, verify_duality
