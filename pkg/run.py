#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
网络切片优化器的主入口点。

用法示例:
    python run.py generate --nodes 8 --services 2 --out data/gen-0.json
    python run.py solve data/gen-0.json --method ccg
"""

import sys

from src.app.cli.main import main


if __name__ == "__main__":
    sys.exit(main())
