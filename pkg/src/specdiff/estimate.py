"""Spectral estimators from a sample path and a basis.

From the observations the module assembles the projected empirical
transition matrix and occupation Gram matrix (with half-weighted
endpoints so that the pencil's spectrum is real and bounded by one),
solves the generalized symmetric eigenproblem, and plugs the resulting
eigenpair together with the projection estimate of the invariant density
into the closed-form identities for sigma^2 and the drift.  Degenerate
outcomes - a Gram matrix that fails its positive-definite factorization,
or a second eigenvalue outside (0, 1) - are reported as flagged null
results, never as exceptions.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, eigh

from .basis import Basis, build_basis
from .errors import NumericalError
from .quad import GAUSS_NODES, GAUSS_WEIGHTS, composite_gauss

_CHUNK = 1 << 15


@dataclass(frozen=True)
class EmpiricalOperators:
    """Projected empirical operators of the observed chain.

    ``gram`` and ``transition`` are exactly symmetric by assembly; the
    gram matrix is positive semidefinite and both act identically on the
    coefficients of the constant function (the weighting of the endpoint
    terms makes that an algebraic identity of the two sums).
    """
    gram: np.ndarray
    transition: np.ndarray
    mu_coeffs: np.ndarray
    n_steps: int
    basis: Basis


def estimate_mu(path, basis):
    """Projection coefficients of the invariant density estimate.

    The reconstruction integrates to 1 exactly (to rounding): constants
    lie in the space, so the integral of the reproducing kernel at every
    observation equals one.
    """
    return build_operators(path, basis).mu_coeffs


def build_operators(path, basis):
    """Assemble the Gram and symmetrized transition matrices."""
    values = path.values
    n = path.n_steps
    if n + 1 < basis.dim:
        raise ValueError(
            f"path with {n + 1} observations cannot support dimension {basis.dim}"
        )
    dim = basis.dim
    gram_sum = np.zeros((dim, dim))
    cross = np.zeros((dim, dim))
    mu_sum = np.zeros(dim)
    first_row = last_row = None
    prev = None
    for start in range(0, n + 1, _CHUNK):
        block = basis.design_matrix(values[start:start + _CHUNK])
        mu_sum += block.sum(axis=0)
        gram_sum += block.T @ block
        if prev is not None:
            cross += np.outer(prev, block[0])
        cross += block[:-1].T @ block[1:]
        if first_row is None:
            first_row = block[0]
        prev = block[-1]
    last_row = prev

    gram = gram_sum - 0.5 * np.outer(first_row, first_row) \
        - 0.5 * np.outer(last_row, last_row)
    gram = 0.5 * (gram + gram.T) / n
    trans = 0.5 * (cross + cross.T) / n
    return EmpiricalOperators(
        gram=gram,
        transition=trans,
        mu_coeffs=mu_sum / (n + 1),
        n_steps=n,
        basis=basis,
    )


@dataclass(frozen=True)
class EigenSolution:
    """Second eigenpair of the empirical pencil, or the flagged null result."""
    kappa1: float
    u1_coeffs: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    degenerate: bool = False
    reason: str = ""


def _degenerate(dim, reason, eigenvalues=None):
    return EigenSolution(
        kappa1=0.0,
        u1_coeffs=np.zeros(dim),
        eigenvalues=np.empty(0) if eigenvalues is None else eigenvalues,
        degenerate=True,
        reason=reason,
    )


def solve_eigenpair(ops):
    """Solve the generalized eigenproblem of (transition, gram).

    Returns the second largest eigenvalue and its eigenvector, normalized
    to unit Lebesgue norm and oriented increasing (u(1) > u(0)).  The top
    eigenvalue equals one with the constant eigenvector by construction;
    all eigenvalues are real and at most one.  A Gram matrix that is not
    positive definite, a second eigenvalue outside (0, 1), or a tie at
    the second position produce a degenerate value.
    """
    gram = ops.gram
    dim = gram.shape[0]
    try:
        cho_factor(gram, lower=True)
    except LinAlgError:
        return _degenerate(dim, "gram matrix not positive definite")
    try:
        vals, vecs = eigh(ops.transition, gram)
    except LinAlgError as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}") from exc

    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    if abs(vals[0] - 1.0) > 1e-6:
        warnings.warn(
            f"top pencil eigenvalue {vals[0]!r} deviates from 1; "
            "operators may be ill-conditioned",
            stacklevel=2,
        )
    kappa1 = float(vals[1])
    if dim > 2 and abs(vals[1] - vals[2]) <= 1e-10 * max(1.0, abs(vals[1])):
        return _degenerate(dim, "tied second eigenvalue", vals)
    if not 0.0 < kappa1 < 1.0:
        return _degenerate(dim, f"second eigenvalue {kappa1:.6g} outside (0, 1)", vals)

    u1 = vecs[:, 1]
    u1 = u1 / np.linalg.norm(u1)
    ends = ops.basis.design_matrix(np.array([0.0, 1.0])) @ u1
    if ends[1] - ends[0] < 0.0:
        u1 = -u1
    return EigenSolution(kappa1=kappa1, u1_coeffs=u1, eigenvalues=vals)


def _cumulative_product_integral(basis, c1, c2, xs):
    """Integral of (sum c1 psi)(sum c2 psi) from 0 to each x, exactly.

    Both factors are piecewise polynomials on the knot intervals, so the
    per-interval Gauss rule is exact; partial intervals are handled by an
    affine rescaling of the panel.
    """
    breaks = basis.breakpoints
    xg, wg = composite_gauss(breaks)
    prod = (basis.design_matrix(xg) @ c1) * (basis.design_matrix(xg) @ c2)
    per_cell = (prod * wg).reshape(breaks.shape[0] - 1, -1).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(per_cell)])

    nint = breaks.shape[0] - 1
    cell = np.minimum((xs * nint).astype(np.int64), nint - 1)
    a = breaks[cell]
    half = 0.5 * (xs - a)
    nodes = (a + half)[:, None] + half[:, None] * GAUSS_NODES[None, :]
    flat = nodes.ravel()
    pv = ((basis.design_matrix(flat) @ c1) * (basis.design_matrix(flat) @ c2))
    partial = (pv.reshape(nodes.shape) * GAUSS_WEIGHTS[None, :]).sum(axis=1) * half
    return cum[cell] + partial


def _clip_denominator(den, clip_frac):
    """Sign-preserving magnitude floor at clip_frac of the max magnitude."""
    floor = clip_frac * np.abs(den).max()
    small = np.abs(den) < floor
    sign = np.where(den >= 0.0, 1.0, -1.0)
    return np.where(small, sign * floor, den), int(small.sum())


@dataclass(frozen=True)
class PlugInResult:
    grid: np.ndarray
    sigma2: np.ndarray
    b: np.ndarray
    clip_count: int
    degenerate: bool = False
    reason: str = ""


def plug_in(
    kappa1,
    u1_coeffs,
    mu_coeffs,
    basis,
    delta,
    interval=(0.1, 0.9),
    grid_size=512,
    clip_frac=0.05,
):
    """Closed-form coefficient estimates from the estimated eigenpair.

    Evaluates the eigenfunction, its first two derivatives and the
    density estimate analytically from their coefficients; the running
    integral of their product is computed by exact piecewise-polynomial
    quadrature.  Denominators are clipped in magnitude at ``clip_frac``
    times their maximum over the interval, preserving sign; if every
    point needs clipping the estimate is junk and is flagged degenerate.
    """
    a, b = interval
    if not 0.0 < a < b < 1.0:
        raise ValueError("interval must satisfy 0 < a < b < 1")
    if not 0.0 < clip_frac < 1.0:
        raise ValueError("clip fraction must lie in (0, 1)")
    if not 0.0 < kappa1 < 1.0:
        raise ValueError("plug-in needs a nondegenerate kappa1 in (0, 1)")

    grid = np.linspace(a, b, grid_size)
    nu1 = math.log(kappa1) / delta
    u1 = basis.reconstruct(u1_coeffs, grid)
    u1p = basis.reconstruct(u1_coeffs, grid, 1)
    u1pp = basis.reconstruct(u1_coeffs, grid, 2)
    muv = basis.reconstruct(mu_coeffs, grid)
    integ = _cumulative_product_integral(basis, u1_coeffs, mu_coeffs, grid)

    den_s = u1p * muv
    den_b = u1p * u1p * muv
    # a unit-norm eigenvector with a derivative at rounding scale is junk
    # (every point would clip against pure noise)
    if np.abs(den_s).max() <= 1e-8 * max(np.abs(muv).max(), 1e-300):
        return PlugInResult(
            grid=grid,
            sigma2=np.zeros(grid_size),
            b=np.zeros(grid_size),
            clip_count=grid_size,
            degenerate=True,
            reason="denominator clipped everywhere (junk eigenvector)",
        )
    den_s_cl, clipped_s = _clip_denominator(den_s, clip_frac)
    den_b_cl, clipped_b = _clip_denominator(den_b, clip_frac)
    clip_count = int(np.sum(
        (np.abs(den_s) < clip_frac * np.abs(den_s).max())
        | (np.abs(den_b) < clip_frac * np.abs(den_b).max())
    ))
    if clipped_s >= grid_size or clipped_b >= grid_size:
        return PlugInResult(
            grid=grid,
            sigma2=np.zeros(grid_size),
            b=np.zeros(grid_size),
            clip_count=clip_count,
            degenerate=True,
            reason="denominator clipped everywhere (junk eigenvector)",
        )

    sigma2 = 2.0 * nu1 * integ / den_s_cl
    drift = nu1 * (u1 * u1p * muv - u1pp * integ) / den_b_cl
    return PlugInResult(
        grid=grid, sigma2=sigma2, b=drift, clip_count=clip_count
    )


def choose_J(n_obs, s, target="density", order=4):
    """Resolution level from the sample size and smoothness.

    ``density`` uses 2^J ~ N^(1/(2s+1)) (the invariant-density rate),
    ``coefficients`` uses 2^J ~ N^(1/(2s+3)) (the eigenpair plug-in
    rate).  Clamped so the dimension stays below a tenth of the sample
    and the level is at least one.
    """
    if n_obs < 16:
        raise ValueError("level selection needs at least 16 observations")
    if s <= 1.0:
        raise ValueError("smoothness must exceed 1")
    if target == "density":
        denom = 2.0 * s + 1.0
    elif target == "coefficients":
        denom = 2.0 * s + 3.0
    else:
        raise ValueError("target must be 'density' or 'coefficients'")
    level = math.floor(math.log2(n_obs) / denom + 0.5)
    while level > 1 and (1 << level) + order - 1 > n_obs / 10:
        level -= 1
    return max(level, 1)


@dataclass(frozen=True)
class EstimateResult:
    """Full output of the estimation pipeline on one path."""
    kappa1: float
    nu1: float
    u1_coeffs: np.ndarray
    mu_coeffs: np.ndarray
    grid: np.ndarray
    sigma2: np.ndarray
    b: np.ndarray
    clip_count: int
    degenerate: bool
    reason: str
    level: int
    delta: float
    n_steps: int

    def to_dict(self):
        return {
            "kappa1": self.kappa1,
            "nu1": self.nu1,
            "degenerate": self.degenerate,
            "reason": self.reason,
            "clip_count": self.clip_count,
            "J": self.level,
            "delta": self.delta,
            "n": self.n_steps,
            "u1_coeffs": self.u1_coeffs.tolist(),
            "mu_coeffs": self.mu_coeffs.tolist(),
            "grid": self.grid.tolist(),
            "sigma2": self.sigma2.tolist(),
            "b": self.b.tolist(),
        }


def estimate_path(
    path,
    s=None,
    J=None,
    basis=None,
    order=4,
    interval=(0.1, 0.9),
    grid_size=512,
    clip_frac=0.05,
):
    """Run the whole pipeline on a path: operators, eigenpair, plug-in.

    The level comes from ``J`` (explicit), from ``basis``, or from the
    smoothness via the eigenpair rule; one of the three must be given.
    """
    if basis is None:
        if J is None:
            if s is None:
                raise ValueError("need a basis, an explicit J, or a smoothness s")
            J = choose_J(path.n_steps, s, target="coefficients", order=order)
        basis = build_basis(J, order)
    ops = build_operators(path, basis)
    sol = solve_eigenpair(ops)
    grid = np.linspace(interval[0], interval[1], grid_size)
    if sol.degenerate:
        return EstimateResult(
            kappa1=0.0,
            nu1=0.0,
            u1_coeffs=sol.u1_coeffs,
            mu_coeffs=ops.mu_coeffs,
            grid=grid,
            sigma2=np.zeros(grid_size),
            b=np.zeros(grid_size),
            clip_count=0,
            degenerate=True,
            reason=sol.reason,
            level=basis.level,
            delta=path.delta,
            n_steps=path.n_steps,
        )
    pr = plug_in(
        sol.kappa1,
        sol.u1_coeffs,
        ops.mu_coeffs,
        basis,
        path.delta,
        interval=interval,
        grid_size=grid_size,
        clip_frac=clip_frac,
    )
    return EstimateResult(
        kappa1=sol.kappa1,
        nu1=math.log(sol.kappa1) / path.delta,
        u1_coeffs=sol.u1_coeffs,
        mu_coeffs=ops.mu_coeffs,
        grid=pr.grid,
        sigma2=pr.sigma2,
        b=pr.b,
        clip_count=pr.clip_count,
        degenerate=pr.degenerate,
        reason=pr.reason,
        level=basis.level,
        delta=path.delta,
        n_steps=path.n_steps,
    )
