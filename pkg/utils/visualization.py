import numpy as np
import plotly.graph_objects as go
from pathlib import Path
from typing import Optional

from utils.logger import get_logger

logger = get_logger(__name__)


def plane_slice(g, size: int, inset: float = 0.05):
    """
    Square grid in the x1-x2 plane through the domain centroid.

    Args:
        g: Green's function provider
        size (int): points per side
        inset (float): relative distance kept from the boundary

    Returns:
        tuple: axis coordinates (size,), all points (size * size, N) and the interior mask
    """
    if size < 2:
        raise ValueError(f"Grid needs at least 2 points per side, got {size}")
    half_width = 0.5 * g.diameter
    axis = np.linspace(-half_width, half_width, size)
    u, v = np.meshgrid(axis, axis, indexing='ij')
    points = np.tile(np.asarray(g.centroid, dtype=float), (size * size, 1))
    points[:, 0] += u.ravel()
    points[:, 1] += v.ravel()
    inside = g.boundary_distance(points) > inset * half_width
    return axis, points, inside


def create_slice_heatmap(axis: np.ndarray, values: np.ndarray, inside: np.ndarray,
                         title: str, colorbar: str) -> go.Figure:
    """Heatmap of values on a plane slice, blank outside the domain"""
    size = len(axis)
    grid = np.full(size * size, np.nan)
    grid[inside] = values
    fig = go.Figure(data=go.Heatmap(
        x=axis,
        y=axis,
        z=grid.reshape(size, size).T,
        colorscale='Viridis',
        colorbar=dict(title=colorbar)
    ))
    fig.update_layout(
        title=title,
        xaxis_title='x1 offset',
        yaxis_title='x2 offset',
        yaxis_scaleanchor='x'
    )
    return fig


def create_robin_plot(axis, values, inside) -> go.Figure:
    """Robin function on the x1-x2 slice"""
    return create_slice_heatmap(axis, values, inside, 'Robin Function R(x)', 'R')


def create_field_plot(axis, values, inside, epsilon: float) -> go.Figure:
    """Approximate blow-up solution on the x1-x2 slice"""
    return create_slice_heatmap(axis, values, inside, f'Approximate Solution (epsilon = {epsilon:.3g})', 'u')


def save_figure(fig: go.Figure, path: str) -> Optional[str]:
    """Write a figure as standalone HTML"""
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(str(target))
        logger.info(f"Figure written to {target}")
        return str(target)
    except Exception as e:
        logger.error(f"Error saving figure: {str(e)}")
        raise
