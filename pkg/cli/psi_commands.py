import numpy as np

from cli.base_command import BaseCommand, parse_points, parse_vector
from reduction.critical import count_solutions, find_critical
from reduction.errors import SearchExpectationError
from reduction.psi import PeakConfig, balance_lhs, is_positive, m_matrix, psi_derivatives


class PsiEvalCommand(BaseCommand):
    """Reduced energy, its derivatives and M_k at one configuration"""

    name = "psi-eval"
    help = "Evaluate Psi_k with its gradient and Hessian, and the interaction matrix"

    def add_arguments(self, parser):
        parser.add_argument("--point", type=parse_vector, action="append", required=True,
                            help="Peak location, comma-separated; repeat for each peak")
        parser.add_argument("--scales", type=parse_vector, required=True, help="Peak scales, comma-separated")

    def execute(self, args, g, consts):
        points = parse_points(args.point, g.dimension, "point")
        c = PeakConfig(points, args.scales)
        value, grad, hess = psi_derivatives(g, c, consts, order=2)
        matrix = m_matrix(g, c.points)
        return {
            "points": c.points,
            "scales": c.scales,
            "psi": value,
            "gradient": grad,
            "hessian": hess,
            "m_matrix": matrix.entries,
            "m_eigenvalues": np.linalg.eigvalsh(matrix.entries),
            "m_positive": is_positive(matrix),
            "balance_lhs": balance_lhs(g, c, consts),
        }


class FindCriticalCommand(BaseCommand):
    """Critical points of Psi_k from a seeded multistart search"""

    name = "find-critical"
    help = "Find and classify critical points of Psi_k"
    uses_search = True

    def add_arguments(self, parser):
        parser.add_argument("--k", type=int, required=True, help="Number of peaks")

    def execute(self, args, g, consts):
        cfg = self.search_config(args)
        points = find_critical(g, args.k, cfg, consts)
        self.expect(args, len(points), f"critical point of Psi_{args.k}")
        return {
            "k": args.k,
            "search": cfg.to_dict(),
            "critical_points": [cp.to_dict() for cp in points],
        }


class CountCommand(BaseCommand):
    """Solution counts over k = 1..k_max"""

    name = "count"
    help = "Enumerate T_k for k = 1..k_max and total the predicted solution count"
    uses_search = True

    def add_arguments(self, parser):
        parser.add_argument("--k-max", type=int, required=True,
                            help="Largest number of peaks considered")
        parser.add_argument("--base-point", type=parse_vector, action="append", default=None,
                            help="Peak location for an S_k enumeration; repeat for each peak")
        parser.add_argument("--check-saturation", action="store_true",
                            help="Repeat each search with twice the starts; exit with status 3 if T_k changes")

    def execute(self, args, g, consts):
        cfg = self.search_config(args)
        base_points = parse_points(args.base_point, g.dimension, "base-point")
        report = count_solutions(g, args.k_max, cfg, consts, base_points=base_points,
                                 check_saturation=args.check_saturation)
        if report.saturated is False:
            unstable = [entry.k for entry in report.per_k if not entry.saturated]
            raise SearchExpectationError(f"Counts changed with {2 * cfg.starts} starts for k in {unstable}")
        self.expect(args, report.total, "counted critical point")
        result = report.to_dict()
        result["search"] = cfg.to_dict()
        return result
