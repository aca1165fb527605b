"""导出工具模块。

提供把求解记录、迭代日志导出为 CSV，以及读写 JSON 文档(实例、解)的静态方法，
使文件格式与命令行逻辑分离。
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd


class Exporter:
    """
    一个包含各种导出功能的静态工具类。
    """

    @staticmethod
    def export_to_csv(rows: List[Dict[str, Any]], filepath: Path,
                      columns: Optional[Sequence[str]] = None) -> None:
        """将字典列表导出为CSV文件。

        Args:
            rows (List[Dict[str, Any]]): 每个字典一行。
            filepath (Path): 保存CSV文件的路径。
            columns (Optional[Sequence[str]]): 列顺序；缺省按首次出现的顺序。

        Raises:
            ValueError: 没有行也没有给定列时无法确定表头。
        """
        if not rows and not columns:
            raise ValueError("无法导出空的数据。")
        df = pd.DataFrame(rows, columns=list(columns) if columns else None)
        df.to_csv(filepath, index=False, encoding='utf-8')

    @staticmethod
    def read_csv_rows(filepath: Path) -> List[Dict[str, Any]]:
        """读取CSV文件，缺失值转为 None。"""
        df = pd.read_csv(filepath, encoding='utf-8', keep_default_na=True)
        df = df.astype(object).where(pd.notna(df), None)
        return df.to_dict(orient='records')

    @staticmethod
    def export_json(document: Dict[str, Any], filepath: Path) -> None:
        """以 UTF-8、两格缩进写出 JSON 文档；NaN/inf 写为 null。"""
        Path(filepath).write_text(json.dumps(_finite(document), ensure_ascii=False, indent=2) + "\n",
                                  encoding='utf-8')

    @staticmethod
    def read_json(filepath: Path) -> Dict[str, Any]:
        return json.loads(Path(filepath).read_text(encoding='utf-8'))


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value
