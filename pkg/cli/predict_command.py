from cli.base_command import BaseCommand, parse_points, parse_vector
from reduction.critical import find_critical
from reduction.pohozaev import balance_residual
from reduction.predictor import approximate_field, predict
from reduction.psi import PeakConfig
from utils.report_writer import write_field_csv
from utils.visualization import create_field_plot, plane_slice, save_figure


class PredictCommand(BaseCommand):
    """Blow-up predictions from critical points of Psi_k"""

    name = "predict"
    help = "Predict concentration scales and heights of u_eps, optionally sampling the approximate solution"
    uses_search = True

    def add_arguments(self, parser):
        parser.add_argument("--epsilon", type=float, required=True, help="Perturbation parameter")
        parser.add_argument("--k", type=int, default=None, help="Search Psi_k for critical points")
        parser.add_argument("--point", type=parse_vector, action="append", default=None,
                            help="Known critical peak location; repeat for each peak")
        parser.add_argument("--scales", type=parse_vector, default=None, help="Scales of the given peaks")
        parser.add_argument("--grid", type=int, default=None,
                            help="Sample the approximate solution of the first prediction on a slice")
        parser.add_argument("--csv", default=None, help="CSV path for the sampled field")
        parser.add_argument("--plot", action="store_true", help="Also write a plotly HTML heatmap")

    def configurations(self, args, g, consts):
        points = parse_points(args.point, g.dimension, "point")
        if points is not None:
            if args.scales is None:
                raise ValueError("--point needs --scales")
            return [PeakConfig(points, args.scales)]
        if args.k is None:
            raise ValueError("Either --k or --point with --scales is required")
        found = find_critical(g, args.k, self.search_config(args), consts)
        return [cp.config for cp in found if cp.counted]

    def execute(self, args, g, consts):
        configs = self.configurations(args, g, consts)
        self.expect(args, len(configs), "critical point to predict from")

        predictions = []
        for c in configs:
            prediction = predict(c, args.epsilon, g.dimension)
            predictions.append({
                "critical_point": c.to_dict(),
                "prediction": prediction.to_dict(),
                "balance_residual": balance_residual(g, c, args.epsilon, consts, relative=True),
            })

        field = None
        if args.grid is not None and configs:
            prediction = predict(configs[0], args.epsilon, g.dimension)
            axis, points, inside = plane_slice(g, args.grid)
            samples = approximate_field(g, prediction, points[inside])
            field = write_field_csv(samples.to_frame(), self.side_path(args, ".csv", args.csv), samples.metadata)
            if args.plot:
                field["plot"] = save_figure(create_field_plot(axis, samples.values, inside, args.epsilon),
                                            self.side_path(args, ".html"))
        return {"epsilon": args.epsilon, "predictions": predictions, "field": field}
