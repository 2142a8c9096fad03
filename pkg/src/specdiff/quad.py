"""Quadrature helpers shared by the basis and the forward solver."""
import numpy as np

# 10-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of
# degree <= 19, which covers every product of basis splines (degree <= 6
# for the default cubic order) to rounding.
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(10)


def composite_gauss(breaks):
    """Nodes and weights of the composite 10-point Gauss rule.

    Parameters
    ----------
    breaks : array
        Increasing breakpoints; one 10-point panel per interval.

    Returns
    -------
    x, w : arrays of shape (10 * (len(breaks) - 1),)
    """
    breaks = np.asarray(breaks, dtype=float)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    x = (mid[:, None] + half[:, None] * GAUSS_NODES[None, :]).ravel()
    w = (half[:, None] * GAUSS_WEIGHTS[None, :]).ravel()
    return x, w


def cumulative_simpson(f, grid):
    """Cumulative integral of a callable along a grid.

    Uses Simpson's rule on each cell with a midpoint evaluation, so the
    result is fourth-order accurate at every grid point.
    """
    grid = np.asarray(grid, dtype=float)
    h = np.diff(grid)
    fg = np.asarray(f(grid), dtype=float)
    fm = np.asarray(f(0.5 * (grid[:-1] + grid[1:])), dtype=float)
    pieces = h / 6.0 * (fg[:-1] + 4.0 * fm + fg[1:])
    out = np.empty_like(grid)
    out[0] = 0.0
    np.cumsum(pieces, out=out[1:])
    return out


def cumulative_trapezoid(y, x):
    """Cumulative trapezoid integral of grid samples, starting at 0."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * np.diff(x) * (y[:-1] + y[1:]), out=out[1:])
    return out


def trapezoid_weights(x):
    """Trapezoid quadrature weights for samples on the grid ``x``."""
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    h = np.diff(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w
