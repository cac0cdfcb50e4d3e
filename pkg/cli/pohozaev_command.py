from cli.base_command import BaseCommand, parse_points, parse_vector
from reduction.pohozaev import verify_identities
from reduction.quadrature import MONTE_CARLO_RULES, MonteCarlo, Product, SphereQuadrature, default_theta


class PohozaevVerifyCommand(BaseCommand):
    """Numerical check of the Green-function surface identities"""

    name = "pohozaev-verify"
    help = "Compare quadrature values of the surface identities with their closed forms"

    def add_arguments(self, parser):
        parser.add_argument("--pole", type=parse_vector, action="append", required=True,
                            help="Pole location, comma-separated; repeat for several poles")
        parser.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
        parser.add_argument("--theta", type=float, default=None,
                            help="Sphere radius (default: a fraction of each pole's boundary distance)")
        parser.add_argument("--scheme", choices=("monte_carlo", "product"), default=None)
        parser.add_argument("--rule", choices=MONTE_CARLO_RULES, default=None)
        parser.add_argument("--resolution", type=int, default=None, help="Product-rule resolution")

    def seed(self, args) -> int:
        return self.config.quadrature.seed if args.seed is None else args.seed

    def scheme(self, args):
        defaults = self.config.quadrature
        if (args.scheme or defaults.scheme) == "product":
            return Product(resolution=args.resolution or defaults.product_resolution)
        return MonteCarlo(
            samples=args.samples or defaults.samples,
            seed=self.seed(args),
            rule=args.rule or defaults.rule,
        )

    def execute(self, args, g, consts):
        poles = parse_points(args.pole, g.dimension, "pole")
        scheme = self.scheme(args)
        template = SphereQuadrature(radius=args.theta, scheme=scheme)
        residuals = verify_identities(g, poles, template)
        thetas = [args.theta if args.theta is not None else default_theta(g, p) for p in poles]

        drift_ratios = [r.theta_pair_drift / r.drift_std_error for r in residuals if r.drift_std_error > 0]
        return {
            "poles": poles,
            "theta": thetas,
            "scheme": {"type": type(scheme).__name__, **scheme.__dict__},
            "residuals": [r.to_dict() for r in residuals],
            "max_rel_residual": max(r.rel_residual for r in residuals),
            "max_drift_ratio": max(drift_ratios) if drift_ratios else 0.0,
        }
