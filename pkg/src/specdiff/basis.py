"""Orthonormal piecewise-polynomial approximation spaces on [0, 1].

The space at level ``J`` is spanned by splines of a given order on the
dyadic knots ``i / 2**J``.  The raw clamped B-spline basis is
orthonormalized against the Lebesgue inner product with a triangular
factorization of its Gram matrix, so that the returned functions satisfy
``<psi_i, psi_j> = delta_ij`` to rounding while keeping localized
supports.  Values and derivatives up to order 2 are evaluated exactly
from the piecewise-polynomial representation.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .quad import composite_gauss

# Entries of the orthonormalizing weight matrix decay geometrically away
# from the diagonal; below this relative size they are flushed to exact
# zeros so that each basis function has a genuinely compact support.
_SUPPORT_TRUNCATION = 1e-15


def _spans(knots, order, nint, x):
    """Knot-span index for each point: t[s] <= x < t[s+1], left limit at 1."""
    cell = np.minimum((x * nint).astype(np.int64), nint - 1)
    return cell + order - 1


def _basis_values(knots, degree, spans, x):
    """Nonzero B-spline values of the given degree at each x.

    Returns an array of shape (len(x), degree + 1); column r holds
    ``B[spans - degree + r]``.  Standard Cox-de Boor triangle, vectorized
    over the evaluation points.
    """
    npts = x.shape[0]
    vals = np.zeros((npts, degree + 1))
    vals[:, 0] = 1.0
    left = np.empty((degree + 1, npts))
    right = np.empty((degree + 1, npts))
    for j in range(1, degree + 1):
        left[j] = x - knots[spans + 1 - j]
        right[j] = knots[spans + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            temp = vals[:, r] / (right[r + 1] + left[j - r])
            vals[:, r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[:, j] = saved
    return vals


def _raw_design(knots, order, nint, x, d):
    """Dense design matrix of the raw clamped B-splines.

    Parameters
    ----------
    x : array in [0, 1]
    d : derivative order in {0, 1, 2}

    Returns
    -------
    array of shape (len(x), nint + order - 1)
    """
    p = order - 1
    rawdim = nint + p
    x = np.asarray(x, dtype=float)
    spans = _spans(knots, order, nint, x)
    first = spans - p

    if d == 0:
        local = _basis_values(knots, p, spans, x)
    else:
        # Derivatives chain down to lower-order splines:
        # B'_{j,m} = (m-1) * (B_{j,m-1}/D_j - B_{j+1,m-1}/D_{j+1})
        # with D_j = t[j+m-1] - t[j]; terms with D == 0 vanish.
        def step(lower, deg):
            # lower[:, r] = value of index first + r for splines of
            # degree deg - 1 (last column is zero padding).
            out = np.zeros((x.shape[0], lower.shape[1]))
            for r in range(lower.shape[1] - 1):
                dl = knots[first + r + deg] - knots[first + r]
                dr = knots[first + r + 1 + deg] - knots[first + r + 1]
                tl = np.where(dl > 0, lower[:, r] / np.where(dl > 0, dl, 1.0), 0.0)
                tr = np.where(dr > 0, lower[:, r + 1] / np.where(dr > 0, dr, 1.0), 0.0)
                out[:, r] = deg * (tl - tr)
            return out

        # values of degree p - d splines sit at window offsets d..p
        base = np.zeros((x.shape[0], p + 2))
        base[:, d:p + 1] = _basis_values(knots, p - d, spans, x)
        local = base
        for k in range(d, 0, -1):
            local = step(local, p - k + 1)
        local = local[:, : p + 1]

    design = np.zeros((x.shape[0], rawdim))
    rows = np.arange(x.shape[0])
    for r in range(p + 1):
        design[rows, first + r] = local[:, r]
    return design


@dataclass(frozen=True)
class Basis:
    """Orthonormal spline space V_J on dyadic knots.

    Attributes
    ----------
    level : int
        Resolution level J; the knot spacing is 2**-J.
    order : int
        Spline order (degree + 1); at least 4 so second derivatives are
        piecewise linear rather than trivial.
    dim : int
        Number of basis functions, 2**J + order - 1.
    breakpoints : array
        The dyadic knots i / 2**J.
    weights : array, shape (dim, rawdim)
        Change of basis from raw B-splines: psi_i = sum_j W[i, j] b_j.
    """
    level: int
    order: int
    dim: int
    breakpoints: np.ndarray
    knots: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def knot_spacing(self):
        return 1.0 / (1 << self.level)

    @cached_property
    def supports(self):
        """Support interval [lo, hi] of each basis function."""
        m = self.order
        out = np.empty((self.dim, 2))
        for i in range(self.dim):
            nz = np.nonzero(self.weights[i])[0]
            out[i, 0] = self.knots[nz[0]]
            out[i, 1] = self.knots[nz[-1] + m]
        return out

    def design_matrix(self, x, d=0):
        """Matrix of psi_i^(d)(x_n), shape (len(x), dim)."""
        x = np.asarray(x, dtype=float)
        if d not in (0, 1, 2):
            raise ValueError("derivative order must be 0, 1 or 2")
        if x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError("evaluation points must lie in [0, 1]")
        raw = _raw_design(self.knots, self.order, 1 << self.level, x, d)
        return raw @ self.weights.T

    def eval(self, index, x, d=0):
        """Evaluate psi_index (or a derivative) at x; exact zeros off-support."""
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} out of range [0, {self.dim})")
        scalar = np.isscalar(x)
        vals = self.design_matrix(np.atleast_1d(np.asarray(x, dtype=float)), d)[:, index]
        return float(vals[0]) if scalar else vals

    def reconstruct(self, coeffs, x, d=0):
        """Evaluate sum_i coeffs[i] * psi_i^(d) at x."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError("coefficient vector has wrong length")
        return self.design_matrix(x, d) @ coeffs

    def project(self, f, grid=None):
        """L2 coefficients <f, psi_i>.

        ``f`` may be a callable (integrated with the composite Gauss rule,
        exact for smooth integrands to rounding) or an array of samples on
        a uniform ``grid``, which must be at least 8x finer than the knot
        spacing; sampled data is integrated with Simpson weights.
        """
        if callable(f):
            xg, wg = composite_gauss(self.breakpoints)
            return self.design_matrix(xg).T @ (wg * np.asarray(f(xg), dtype=float))
        f = np.asarray(f, dtype=float)
        if grid is None:
            raise ValueError("grid samples require the grid argument")
        grid = np.asarray(grid, dtype=float)
        if grid.shape != f.shape or grid.ndim != 1:
            raise ValueError("grid and samples must be 1-d arrays of equal length")
        h = np.diff(grid)
        if not np.allclose(h, h[0], rtol=1e-9, atol=1e-12):
            raise ValueError("grid must be uniform")
        if h[0] > self.knot_spacing / 8 + 1e-12:
            raise ValueError(
                f"grid spacing {h[0]:.3g} too coarse for knot spacing "
                f"{self.knot_spacing:.3g} (need at least 8x finer)"
            )
        w = _simpson_weights(grid)
        return self.design_matrix(grid).T @ (w * f)

    @cached_property
    def constant_coeffs(self):
        """Coefficients of the constant function 1 (exactly in V_J)."""
        # Raw clamped B-splines form a partition of unity, so solving
        # W^T c = 1 represents 1 exactly up to rounding.
        return np.linalg.solve(self.weights.T, np.ones(self.dim))

    @cached_property
    def integrals(self):
        """Lebesgue integrals of the basis functions."""
        xg, wg = composite_gauss(self.breakpoints)
        return self.design_matrix(xg).T @ wg


def _simpson_weights(grid):
    n = grid.shape[0] - 1
    h = (grid[-1] - grid[0]) / n
    w = np.full(grid.shape[0], h)
    if n % 2 == 0:
        w *= 1.0 / 3.0
        w[1:-1:2] *= 4.0
        w[2:-1:2] *= 2.0
        w[0] = h / 3.0
        w[-1] = h / 3.0
    else:  # odd interval count: trapezoid (still second order on fine grids)
        w[0] = w[-1] = h / 2.0
    return w


def build_basis(level, order=4):
    """Construct the orthonormal spline basis at the given dyadic level.

    Parameters
    ----------
    level : int
        Nonnegative resolution level; 2**level knot intervals.
    order : int
        Spline order, at least 4 (cubics) so that second derivatives of
        reconstructed functions are nondegenerate.

    Returns
    -------
    Basis
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    if order < 4:
        raise ValueError("order must be at least 4 for usable second derivatives")
    nint = 1 << level
    h = 1.0 / nint
    breakpoints = np.arange(nint + 1) * h
    knots = np.concatenate([
        np.zeros(order), np.arange(1, nint) * h, np.ones(order),
    ])
    rawdim = nint + order - 1

    xg, wg = composite_gauss(breakpoints)
    raw = _raw_design(knots, order, nint, xg, 0)
    gram = raw.T @ (wg[:, None] * raw)
    gram = 0.5 * (gram + gram.T)

    # Two rounds of triangular orthonormalization: the second pass removes
    # the O(cond * eps) residual of the first, leaving the Gram at the
    # rounding level.
    low = cholesky(gram, lower=True)
    w0 = solve_triangular(low, np.eye(rawdim), lower=True)
    gram1 = w0 @ gram @ w0.T
    low1 = cholesky(0.5 * (gram1 + gram1.T), lower=True)
    weights = solve_triangular(low1, np.eye(rawdim), lower=True) @ w0

    # Flush the geometrically small tail to exact zeros: keeps supports
    # compact without moving the Gram away from the identity.
    thresh = _SUPPORT_TRUNCATION * np.abs(weights).max(axis=1, keepdims=True)
    weights = np.where(np.abs(weights) >= thresh, weights, 0.0)

    return Basis(
        level=level,
        order=order,
        dim=rawdim,
        breakpoints=breakpoints,
        knots=knots,
        weights=weights,
    )
