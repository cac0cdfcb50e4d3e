import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from config.config import Config, config
from reduction import __version__
from reduction.bubble import UniversalConstants
from reduction.critical import SearchConfig
from reduction.errors import NumericalFailure, SearchExpectationError
from reduction.green import GreenProvider, make_provider
from schemas.domain_schema import DomainSpec
from utils.domain_loader import DomainLoader
from utils.logger import logger, set_level
from utils.report_writer import ReportWriter

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def parse_vector(text: str) -> List[float]:
    """'0.3,0,0' -> [0.3, 0.0, 0.0]"""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got '{text}'")


def parse_points(values: Optional[List[List[float]]], n: int, name: str) -> Optional[np.ndarray]:
    """Stack repeated point flags into a (k, n) array"""
    if not values:
        return None
    bad = [len(v) for v in values if len(v) != n]
    if bad:
        raise ValueError(f"--{name} needs {n} coordinates per point, got {bad}")
    return np.array(values, dtype=float)


class BaseCommand:
    """Base class for CLI commands: shared flags, provider set-up, reporting and exit codes"""

    name = ""
    help = ""
    uses_search = False

    def __init__(self):
        self.logger = logger
        self.config = config

    def register(self, subparsers) -> argparse.ArgumentParser:
        parser = subparsers.add_parser(self.name, help=self.help, description=self.help)
        parser.add_argument("--domain", required=True, help="DomainSpec JSON file")
        parser.add_argument("--seed", type=int, default=None, help="Master seed for all randomness")
        parser.add_argument("--output", default=None, help="JSON report path (stdout when omitted)")
        parser.add_argument("--config", default=None, help="YAML file overriding the shipped defaults")
        parser.add_argument("--expect", action="store_true",
                            help="Fail with exit status 3 when the command finds nothing")
        parser.add_argument("--n-jobs", type=int, default=None, help="Parallel workers (default from BN_REDUCTION_THREADS)")
        parser.add_argument("--log-level", default=None, help="Logging level")
        parser.add_argument("--fit-tolerance", type=float, default=None,
                            help="Relative boundary residual allowed for fitted providers")
        if self.uses_search:
            group = parser.add_argument_group("search")
            group.add_argument("--starts", type=int, default=None)
            group.add_argument("--max-newton-iters", type=int, default=None)
            group.add_argument("--grad-tol", type=float, default=None)
            group.add_argument("--dedup-radius", type=float, default=None)
            group.add_argument("--nondegeneracy-tol", type=float, default=None)
            group.add_argument("--scale-bounds", type=parse_vector, default=None,
                               help="min,max of the normalized scales")
        self.add_arguments(parser)
        parser.set_defaults(command=self)
        return parser

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Add command-specific flags. Override in child classes."""
        pass

    def execute(self, args: argparse.Namespace, g: GreenProvider, consts: UniversalConstants) -> Dict[str, Any]:
        """Run the command and return the report result. Override in child classes."""
        raise NotImplementedError

    # Helpers ------------------------------------------------------------

    def seed(self, args) -> int:
        return self.config.search.seed if args.seed is None else args.seed

    def search_config(self, args) -> SearchConfig:
        bounds = None
        if args.scale_bounds is not None:
            if len(args.scale_bounds) != 2:
                raise ValueError(f"--scale-bounds needs two values, got {args.scale_bounds}")
            bounds = tuple(args.scale_bounds)
        return SearchConfig.from_config(
            starts=args.starts,
            max_newton_iters=args.max_newton_iters,
            grad_tol=args.grad_tol,
            dedup_radius=args.dedup_radius,
            nondegeneracy_tol=args.nondegeneracy_tol,
            scale_bounds=bounds,
            seed=self.seed(args),
            n_jobs=args.n_jobs,
        )

    def expect(self, args, found: int, what: str):
        if args.expect and found == 0:
            raise SearchExpectationError(f"Expected at least one {what}, found none")

    def side_path(self, args, suffix: str, explicit: Optional[str] = None) -> str:
        """Path for CSV or plot output next to the report, or in the results directory"""
        if explicit:
            return explicit
        if args.output:
            return str(Path(args.output).with_suffix(suffix))
        return str(Path(self.config.paths.results_dir) / f"{self.name}{suffix}")

    @staticmethod
    def inputs(args, spec: DomainSpec) -> Dict[str, Any]:
        echo = {key: value for key, value in vars(args).items() if key not in ("command", "func")}
        echo["domain_spec"] = spec.model_dump()
        return echo

    # Run ----------------------------------------------------------------

    def run(self, args: argparse.Namespace) -> int:
        """
        Execute the command end to end.

        Returns:
            int: 0 on success, 2 on validation errors, 3 on numerical failures
        """
        try:
            if args.config:
                self.config.update(self.config.merged_with(args.config))
            if args.log_level:
                set_level(args.log_level)

            spec = DomainLoader().load_domain(args.domain)
            overrides = {}
            if args.fit_tolerance is not None:
                overrides["fit_tolerance"] = args.fit_tolerance
            g = make_provider(spec, **overrides)
            consts = UniversalConstants.for_dimension(spec.dimension)

            result = self.execute(args, g, consts)
            writer = ReportWriter(__version__)
            report = writer.build(self.name, self.seed(args), self.inputs(args, spec), result)
            text = writer.write(report, args.output)
            if not args.output:
                sys.stdout.write(text)
            return EXIT_OK
        except Exception as e:
            return self.handle_error(e)

    def handle_error(self, error: Exception) -> int:
        """
        Map an error to an exit status.

        Args:
            error (Exception): Error to handle

        Returns:
            int: exit status
        """
        if isinstance(error, NumericalFailure):
            self.logger.error(f"Numerical failure in {self.name}: {str(error)}")
            return EXIT_NUMERICAL
        if isinstance(error, (ValueError, KeyError, FileNotFoundError)):
            self.logger.error(f"Invalid input for {self.name}: {str(error)}")
            return EXIT_VALIDATION
        self.logger.error(f"Unexpected error in {self.name}: {str(error)}", exc_info=True)
        return EXIT_NUMERICAL
