import numpy as np
import pandas as pd

from cli.base_command import BaseCommand, parse_vector
from reduction.errors import DomainError
from utils.report_writer import write_field_csv
from utils.visualization import create_robin_plot, plane_slice, save_figure


class GreenEvalCommand(BaseCommand):
    """G, its first derivatives and the Robin function at given points"""

    name = "green-eval"
    help = "Evaluate G(x, y), its gradients and the Robin function at x"

    def add_arguments(self, parser):
        parser.add_argument("--x", type=parse_vector, required=True, help="Pole, comma-separated")
        parser.add_argument("--y", type=parse_vector, default=None, help="Target, comma-separated")

    def execute(self, args, g, consts):
        x = np.asarray(args.x, dtype=float)
        result = {
            "provider": g.name,
            "x": x,
            "robin": g.robin(x).to_dict(),
            "green": None,
        }
        if args.y is not None:
            y = np.asarray(args.y, dtype=float)
            result["green"] = {
                "y": y,
                "value": g.green(x, y),
                "grad_x": g.grad_x_green(x, y),
                "grad_y": g.grad_y_green(x, y),
            }
        if hasattr(g, "boundary_residual"):
            result["fit_residual"] = g.boundary_residual(x)
        return result


class RobinMapCommand(BaseCommand):
    """Robin function sampled on a plane slice and written as CSV"""

    name = "robin-map"
    help = "Sample R on a grid in the x1-x2 plane through the domain centroid"

    def add_arguments(self, parser):
        parser.add_argument("--grid", type=int, default=17, help="Points per side")
        parser.add_argument("--csv", default=None, help="CSV path")
        parser.add_argument("--plot", action="store_true", help="Also write a plotly HTML heatmap")

    def execute(self, args, g, consts):
        axis, points, inside = plane_slice(g, args.grid)
        interior = points[inside]
        if len(interior) == 0:
            raise DomainError(f"No grid point of a {args.grid} x {args.grid} slice lies inside the domain")
        values = np.array([g.robin_value(p) for p in interior])

        frame_columns = {f"x{i + 1}": interior[:, i] for i in range(g.dimension)}
        frame = pd.DataFrame(frame_columns)
        frame["robin"] = values
        best = int(np.argmin(values))
        sidecar = {"grid": args.grid, "plane": ["x1", "x2"], "centroid": g.centroid, "provider": g.name}
        files = write_field_csv(frame, self.side_path(args, ".csv", args.csv), sidecar)
        if args.plot:
            files["plot"] = save_figure(create_robin_plot(axis, values, inside), self.side_path(args, ".html"))
        self.logger.info(f"Robin map: {len(interior)} interior points, minimum {values[best]:.6g}")
        return {
            "grid": args.grid,
            "points": len(interior),
            "minimum": {"location": interior[best], "value": float(values[best])},
            "maximum": float(values.max()),
            "files": files,
        }
