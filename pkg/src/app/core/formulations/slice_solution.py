"""以语义键表示的切片解。"""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from ..instance import NetworkInstance

INDICATOR_FIELDS = ('y_v', 'x_vk', 'x_vks', 'z_ijk', 'z_ijksp')
SERVICE_POSITION = {'x_vk': 1, 'x_vks': 1, 'z_ijk': 2, 'z_ijksp': 2, 'r_ijksp': 2,
                    'theta_ks': 0, 'r_ksp': 0}


@dataclass
class SliceSolution:
    """切片解。各字段均为 {键元组: 取值}，缺省键视为 0。

    键的形式: y_v (v,), x_vk (v,k), x_vks (v,k,s), z_ijk (i,j,k),
    z_ijksp / r_ijksp (i,j,k,s,p), theta_ks (k,s), r_ksp (k,s,p)。
    """
    y_v: Dict[Tuple, float] = field(default_factory=dict)
    x_vk: Dict[Tuple, float] = field(default_factory=dict)
    x_vks: Dict[Tuple, float] = field(default_factory=dict)
    z_ijk: Dict[Tuple, float] = field(default_factory=dict)
    z_ijksp: Dict[Tuple, float] = field(default_factory=dict)
    r_ijksp: Dict[Tuple, float] = field(default_factory=dict)
    theta_ks: Dict[Tuple, float] = field(default_factory=dict)
    r_ksp: Optional[Dict[Tuple, float]] = None

    def families(self) -> List[str]:
        names = [f.name for f in fields(self)]
        return [n for n in names if getattr(self, n) is not None]

    def copy(self) -> "SliceSolution":
        return SliceSolution(**{name: (None if getattr(self, name) is None
                                       else dict(getattr(self, name)))
                                for name in (f.name for f in fields(self))})

    def snapped(self, int_tol: float = 1e-6) -> "SliceSolution":
        """把距离整数不超过 int_tol 的指示变量取整。"""
        out = self.copy()
        for name in INDICATOR_FIELDS:
            table = getattr(out, name)
            for key, val in table.items():
                nearest = round(val)
                if abs(val - nearest) <= int_tol:
                    table[key] = float(nearest)
        return out

    def is_integral(self, int_tol: float = 1e-6) -> bool:
        return all(abs(val - round(val)) <= int_tol
                   for name in INDICATOR_FIELDS for val in getattr(self, name).values())

    def service_block(self, k: int) -> "SliceSolution":
        """取出业务 k 的部分；y_v 由该业务自身的 x_vk 决定。"""
        block = SliceSolution(r_ksp=None if self.r_ksp is None else {})
        for name, pos in SERVICE_POSITION.items():
            src = getattr(self, name)
            if src is None:
                continue
            getattr(block, name).update({key: val for key, val in src.items() if key[pos] == k})
        for (v, kk), val in block.x_vk.items():
            block.y_v[(v,)] = max(block.y_v.get((v,), 0.0), val)
        return block

    @classmethod
    def merge(cls, blocks: Iterable["SliceSolution"],
              y_v: Optional[Mapping[Tuple, float]] = None) -> "SliceSolution":
        """合并若干业务块；未给定 y_v 时取各块 y_v 的最大值。"""
        merged = cls()
        any_rksp = False
        for block in blocks:
            for name in SERVICE_POSITION:
                src = getattr(block, name)
                if src is None:
                    continue
                if name == 'r_ksp':
                    any_rksp = True
                    if merged.r_ksp is None:
                        merged.r_ksp = {}
                getattr(merged, name).update(src)
            for key, val in block.y_v.items():
                merged.y_v[key] = max(merged.y_v.get(key, 0.0), val)
        if y_v is not None:
            merged.y_v = dict(y_v)
        if not any_rksp:
            merged.r_ksp = None
        return merged

    def to_dict(self) -> Dict[str, Any]:
        """序列化为 JSON 友好的结构: 每个族是 [键..., 值] 的列表，省略 0 值。"""
        doc: Dict[str, Any] = {}
        for name in self.families():
            table = getattr(self, name)
            doc[name] = [list(key) + [val] for key, val in table.items() if val != 0.0]
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SliceSolution":
        sol = cls(r_ksp={} if 'r_ksp' in doc else None)
        int_positions = {'x_vk': (1,), 'x_vks': (1, 2), 'z_ijk': (2,), 'z_ijksp': (2, 3, 4),
                         'r_ijksp': (2, 3, 4), 'theta_ks': (0, 1), 'r_ksp': (0, 1, 2)}
        for name in (f.name for f in fields(cls)):
            for row in doc.get(name, []):
                key = list(row[:-1])
                for pos in int_positions.get(name, ()):
                    key[pos] = int(key[pos])
                for pos in range(len(key)):
                    if pos not in int_positions.get(name, ()):
                        key[pos] = str(key[pos])
                getattr(sol, name)[tuple(key)] = float(row[-1])
        return sol


def evaluate_objective(instance: NetworkInstance, solution: SliceSolution) -> float:
    """从头计算目标值 Σ y_v + σ Σ λ_s r_ijksp。"""
    total = sum(solution.y_v.get((v,), 0.0) for v in instance.cloud_ids)
    routed = 0.0
    for (i, j, k, s, p), val in solution.r_ijksp.items():
        routed += instance.services[k].rates[s] * val
    return total + instance.sigma * routed


def routed_rate(instance: NetworkInstance, solution: SliceSolution) -> float:
    """σ 项中的总路由速率 Σ λ_s r_ijksp。"""
    return sum(instance.services[k].rates[s] * val
               for (i, j, k, s, p), val in solution.r_ijksp.items())
