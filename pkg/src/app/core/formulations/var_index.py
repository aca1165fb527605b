"""语义键与模型列下标之间的双向映射。

变量族按固定顺序登记:
y_v, x_vk, x_vks, z_ijk, z_ijksp (或 LP-II 的 r_ijks), r_ijksp, theta_ks, r_ksp；
主问题只有 y_v 与模式列 t_kc。
"""

from typing import Dict, Iterator, List, Optional, Tuple

from ..instance import NetworkInstance
from ..solvers.lp_model import LpModel
from ...utils.constants import FormulationKind

VarKey = Tuple
Y = 'y_v'
X_VK = 'x_vk'
X_VKS = 'x_vks'
Z_IJK = 'z_ijk'
Z_IJKSP = 'z_ijksp'
R_IJKSP = 'r_ijksp'
R_IJKS = 'r_ijks'
THETA = 'theta_ks'
R_KSP = 'r_ksp'
T_KC = 't_kc'

FAMILY_ORDER = (Y, X_VK, X_VKS, Z_IJK, Z_IJKSP, R_IJKS, R_IJKSP, THETA, R_KSP, T_KC)

# 分支优先级，未列出的族为 0
BRANCH_PRIORITY = {Y: 3, X_VK: 2, X_VKS: 2, Z_IJK: 1}


class VarIndex:
    """某个模型的变量索引。

    Attributes:
        kind (FormulationKind): 模型族。
        instance (NetworkInstance): 建模所用实例。
        services (Tuple[int, ...]): 模型包含的业务编号。
    """

    def __init__(self, kind: FormulationKind, instance: NetworkInstance,
                 services: Tuple[int, ...]):
        self.kind = kind
        self.instance = instance
        self.services = tuple(services)
        self._keys: List[Tuple[str, VarKey]] = []
        self._cols: Dict[Tuple[str, VarKey], int] = {}

    def __len__(self) -> int:
        return len(self._keys)

    def add(self, model: LpModel, family: str, key: VarKey, lower: float, upper: float,
            cost: float = 0.0, integer: bool = False) -> int:
        if (family, key) in self._cols:
            raise KeyError(f"变量重复登记: {family}{key}")
        if self._keys and FAMILY_ORDER.index(family) < FAMILY_ORDER.index(self._keys[-1][0]):
            raise ValueError(f"变量族 {family} 违反规范顺序")
        name = f"{family}[{','.join(str(part) for part in key)}]"
        col = model.add_variable(lower, upper, cost, integer, name,
                                 priority=BRANCH_PRIORITY.get(family, 0))
        if col != len(self._keys):
            raise ValueError("变量索引与模型列不同步")
        self._keys.append((family, key))
        self._cols[(family, key)] = col
        return col

    def col(self, family: str, key: VarKey) -> int:
        return self._cols[(family, key)]

    def get(self, family: str, key: VarKey) -> Optional[int]:
        return self._cols.get((family, key))

    def key_of(self, col: int) -> Tuple[str, VarKey]:
        return self._keys[col]

    def items(self) -> Iterator[Tuple[int, str, VarKey]]:
        for col, (family, key) in enumerate(self._keys):
            yield col, family, key

    def columns(self, family: str) -> List[Tuple[VarKey, int]]:
        return [(key, col) for col, (fam, key) in enumerate(self._keys) if fam == family]

    @property
    def families(self) -> List[str]:
        return [fam for fam, _key in self._keys]

    def has_family(self, family: str) -> bool:
        return any(fam == family for fam, _key in self._keys)
