"""日志配置。

库代码只通过 ``logging.getLogger(__name__)`` 取得记录器，
由命令行入口调用 :func:`setup_logging` 统一配置一次。
"""

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: str = "WARNING") -> None:
    """配置根记录器。

    Args:
        level (str): 日志级别名称，如 "DEBUG"、"INFO"。

    Raises:
        ValueError: 级别名称无法识别。
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"未知的日志级别: {level}")
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)
