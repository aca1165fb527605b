"""命令行入口。

子命令: generate, solve, validate, bench, dump-model。
退出码: 0 正常(含不可行结论), 1 用法错误, 2 求解或内部错误, 3 解未通过校验。
"""

import argparse
import logging
import sys
from typing import List, Optional

from . import bench, commands
from ..core.controller import Controller
from ..utils.constants import EXIT_FAILURE, EXIT_USAGE, MethodIds
from ..utils.exceptions import SlicingError, UsageError
from ..utils.log import setup_logging

logger = logging.getLogger(__name__)

METHOD_CHOICES = [m.value for m in MethodIds]
FORMULATION_CHOICES = [MethodIds.MILP.value, MethodIds.MINLP_LIN.value, MethodIds.LP_I.value,
                       MethodIds.LP_II.value, MethodIds.NLP_L.value]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    group = common.add_argument_group("全局参数")
    group.add_argument('--config', help="默认参数文件 (JSON)")
    group.add_argument('--log-level', default='WARNING', help="日志级别 (默认 WARNING)")
    group.add_argument('--seed', type=int, help="随机种子")
    group.add_argument('--time-limit', type=float, help="MILP 与第一阶段时限(秒)")
    group.add_argument('--stage2-time-limit', type=float, help="cCG 第二阶段时限(秒)")
    group.add_argument('--gap-tol', type=float, help="分支定界相对间隙")
    group.add_argument('--sigma', type=float, help="覆盖实例中的 σ")
    group.add_argument('--paths', type=int, help="覆盖实例中的路径数 P")
    group.add_argument('--iter-max', type=int, help="cCG 最大迭代次数")
    group.add_argument('--pricing-workers', type=int, help="并行定价进程数")
    group.add_argument('--trace', help="把迭代与定价日志 CSV 写入该目录")
    group.add_argument('--census', action='store_true', help="输出模型规模统计")
    group.add_argument('--jobs', type=int, default=1, help="bench 并行进程数")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog='slicing', description="多路径网络切片优化器")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', parents=[common], help="生成随机实例")
    gen.add_argument('--generator-config', help="生成器参数文件 (JSON)，覆盖默认值")
    gen.add_argument('--nodes', type=int)
    gen.add_argument('--arcs', type=int)
    gen.add_argument('--density', type=float)
    gen.add_argument('--clouds', type=int)
    gen.add_argument('--services', type=int)
    gen.add_argument('--chain-length', type=int)
    gen.add_argument('--count', type=int, default=1, help="批量生成，种子依次递增")
    gen.add_argument('--out', required=True, help="输出文件；批量时为目录")

    solve = sub.add_parser('solve', parents=[common], help="求解实例")
    solve.add_argument('instance')
    solve.add_argument('--method', choices=METHOD_CHOICES, default=MethodIds.CCG.value)
    solve.add_argument('--out', help="解文件 (JSON)")
    solve.add_argument('--records', help="追加写出 RunRecord 的 CSV 文件")

    val = sub.add_parser('validate', parents=[common], help="校验解文件")
    val.add_argument('instance')
    val.add_argument('solution')

    ben = sub.add_parser('bench', parents=[common], help="批量对比各方法")
    ben.add_argument('instances', nargs='+', help="实例文件或通配符")
    ben.add_argument('--methods', default='lp-i,nlp-l,milp,p-lp,ccg',
                     help="逗号分隔的方法ID")
    ben.add_argument('--out', required=True, help="结果 CSV")

    dump = sub.add_parser('dump-model', parents=[common], help="输出模型的代数形式")
    dump.add_argument('instance')
    dump.add_argument('--formulation', choices=FORMULATION_CHOICES, default=MethodIds.MILP.value)
    dump.add_argument('--out', help="输出文件；缺省写到标准输出")
    return parser


def apply_overrides(controller: Controller, args: argparse.Namespace) -> None:
    """把命令行的全局参数写入控制器参数。"""
    if args.time_limit is not None:
        controller.update_parameter('milp.time_limit', args.time_limit)
        controller.update_parameter('ccg.stage1_time_limit', args.time_limit)
    if args.stage2_time_limit is not None:
        controller.update_parameter('ccg.stage2_time_limit', args.stage2_time_limit)
    if args.gap_tol is not None:
        controller.update_parameter('milp.gap_tol', args.gap_tol)
    if args.iter_max is not None:
        controller.update_parameter('ccg.iter_max', args.iter_max)
    if args.pricing_workers is not None:
        controller.update_parameter('ccg.pricing_workers', args.pricing_workers)
    if args.sigma is not None:
        controller.update_parameter('model.sigma', args.sigma)
    if args.paths is not None:
        controller.update_parameter('model.paths', args.paths)


HANDLERS = {
    'generate': commands.cmd_generate,
    'solve': commands.cmd_solve,
    'validate': commands.cmd_validate,
    'bench': bench.cmd_bench,
    'dump-model': commands.cmd_dump_model,
}


def main(argv: Optional[List[str]] = None) -> int:
    """命令行主函数，返回退出码。"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        setup_logging(args.log_level)
    except (UsageError, ValueError) as e:
        print(f"用法错误: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        controller = Controller(args.config)
        apply_overrides(controller, args)
        return HANDLERS[args.command](controller, args)
    except UsageError as e:
        print(f"用法错误: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SlicingError as e:
        logger.error("%s", e)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("未预期的错误")
        print(f"内部错误: {e}", file=sys.stderr)
        return EXIT_FAILURE
