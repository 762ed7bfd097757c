"""phdae 命令行入口"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from phdae import __version__
from phdae.config import reload_settings
from phdae.errors import (
    DescriptionError,
    DimensionMismatch,
    ExprSyntaxError,
    PhdaeError,
    UnknownFixture,
    UnknownVariable,
)

from .commands import (
    EXIT_MATH,
    EXIT_USAGE,
    cmd_classify,
    cmd_convert,
    cmd_fixtures,
    cmd_legendre,
    cmd_simulate,
    cmd_validate,
)

logger = logging.getLogger("phdae")

# 这些异常属于输入问题（退出码 1），其余 PhdaeError 属于数学上的失败（退出码 2）
USAGE_ERRORS = (DescriptionError, DimensionMismatch, ExprSyntaxError, UnknownVariable, UnknownFixture)


class ArgumentParser(argparse.ArgumentParser):
    """用法错误统一以退出码 1 结束"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


def float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"应为逗号分隔的数字列表，得到 '{text}'")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="phdae", description="端口哈密顿 DAE 工具箱")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="验证 Dirac 结构与储能关系")
    p.add_argument("system", help="系统描述文件或内置算例名")
    p.add_argument("--all", action="store_true", help="列出每个采样点")

    p = sub.add_parser("classify", help="提取并分类代数约束")
    p.add_argument("system")
    p.add_argument("--json", action="store_true", help="输出 JSON")

    p = sub.add_parser("convert", help="Dirac ↔ Lagrange 约束转换")
    p.add_argument("system")
    p.add_argument("--to", required=True, choices=["dirac", "lagrange"])
    p.add_argument("--out", help="输出文件（缺省写到标准输出）")

    p = sub.add_parser("simulate", help="隐式中点法仿真，输出 CSV")
    p.add_argument("system")
    p.add_argument("--x0", required=True, type=float_list, help="初值猜测，如 1,0")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--u", action="append", default=[], help="关于 t 的输入表达式（每个端口一次）")
    p.add_argument("--every", type=int, default=1, help="每隔多少步输出一行")
    p.add_argument("--out", help="CSV 输出文件（缺省写到标准输出）")

    p = sub.add_parser("legendre", help="数值 Legendre 变换")
    p.add_argument("--P", dest="P", required=True, help="表达式 P")
    p.add_argument("--vars", required=True, help="逗号分隔的变量名")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--at", type=float_list, help="对偶空间中的点")
    where.add_argument("--grid", help="a:b:N，每个变量取同一网格")
    p.add_argument("--partial", help="部分变换 I/J（1 起下标），如 1/2")
    p.add_argument("--check", action="store_true", help="输出恒等式残差")

    p = sub.add_parser("fixtures", help="列出或导出内置算例")
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        return cmd_validate(args.system, verbose=args.all)
    if args.command == "classify":
        return cmd_classify(args.system, as_json=args.json)
    if args.command == "convert":
        return cmd_convert(args.system, args.to, args.out)
    if args.command == "simulate":
        return cmd_simulate(
            args.system, args.x0, t0=args.t0, t1=args.t1, dt=args.dt,
            inputs=args.u, out=args.out, every=args.every,
        )
    if args.command == "legendre":
        variables = [s.strip() for s in args.vars.split(",") if s.strip()]
        return cmd_legendre(args.P, variables, at=args.at, grid=args.grid, partial=args.partial, check=args.check)
    return cmd_fixtures(args.name, args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """运行一条命令，返回退出码"""
    args = build_parser().parse_args(argv)
    current = reload_settings()
    logging.basicConfig(
        level=logging.DEBUG if (args.verbose or current.debug) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return dispatch(args)
    except USAGE_ERRORS as exc:
        print(f"错误: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # 配置 / 参数取值不合法（包括 pydantic 的校验错误）
        print(f"参数错误: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhdaeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH
