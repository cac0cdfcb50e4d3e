import argparse
from typing import List, Optional

from cli.green_commands import GreenEvalCommand, RobinMapCommand
from cli.pohozaev_command import PohozaevVerifyCommand
from cli.predict_command import PredictCommand
from cli.psi_commands import CountCommand, FindCriticalCommand, PsiEvalCommand
from reduction import __version__

COMMANDS = (
    GreenEvalCommand,
    RobinMapCommand,
    PsiEvalCommand,
    FindCriticalCommand,
    CountCommand,
    PohozaevVerifyCommand,
    PredictCommand,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bn-reduction",
        description="Finite-dimensional reduction for blow-up solutions of Brezis-Nirenberg problems",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for command_cls in COMMANDS:
        command_cls().register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and run one command; returns the exit status"""
    args = build_parser().parse_args(argv)
    return args.command.run(args)
