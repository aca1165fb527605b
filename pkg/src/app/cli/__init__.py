"""命令行界面: 子命令解析与批量对比。"""

from .main import build_parser, main

__all__ = ['build_parser', 'main']
