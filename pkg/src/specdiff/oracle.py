"""Forward solver for a known spec: invariant law, spectrum, transitions.

Everything the estimator targets can be computed here to discretization
accuracy when the coefficients are known, which makes each estimation
step verifiable: the invariant density and the divergence-form
coefficient have closed forms, the Neumann eigenpairs come from a
conservative finite-volume discretization, the transition density from
the truncated spectral sum, and the closed-form reconstruction
identities recover sigma^2 and b from the first nontrivial eigenpair.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError
from .quad import cumulative_simpson, cumulative_trapezoid, trapezoid_weights


def _log_scale_integral(spec, grid):
    """Cumulative integral of 2 b / sigma^2 from 0 along the grid."""
    def g(x):
        return 2.0 * np.asarray(spec.b(x), dtype=float) / spec.sigma2(x)
    return cumulative_simpson(g, grid)


def invariant_density(spec, n):
    """Invariant density on a uniform grid of n + 1 points.

    Returns ``(grid, mu, C0)`` where mu is proportional to
    ``sigma^-2 * exp(int_0^x 2 b / sigma^2)``, normalized to unit mass by
    cumulative Simpson quadrature, and ``C0 = 1 / (2 Z)`` is the
    normalizing constant of the divergence-form coefficient.
    """
    if n < 64:
        raise ValueError("invariant density grid needs n >= 64")
    if n % 2:
        raise ValueError("invariant density grid needs even n (Simpson weights)")
    fine = np.linspace(0.0, 1.0, 2 * n + 1)
    expnt = _log_scale_integral(spec, fine)
    raw_fine = np.exp(expnt) / spec.sigma2(fine)
    if not np.all(np.isfinite(raw_fine)) or raw_fine.min() <= 0.0:
        raise ValueError("sigma must be positive and finite on the grid")
    grid = fine[::2]
    mass = _simpson_mass(raw_fine[::2], grid)
    mu = raw_fine[::2] / mass
    return grid, mu, 1.0 / (2.0 * mass)


def _simpson_mass(values, grid):
    """Composite Simpson integral of node values (even interval count)."""
    h = grid[1] - grid[0]
    return h / 3.0 * (
        values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum()
    )


def scale_S(spec, n):
    """Divergence-form coefficient S = sigma^2 mu / 2 on the grid.

    Cross-checks the pointwise product against the closed form
    ``C0 * exp(int_0^x 2 b / sigma^2)``; the two must agree to 1e-9.
    """
    grid, mu, c0 = invariant_density(spec, n)
    s_point = 0.5 * spec.sigma2(grid) * mu
    s_closed = c0 * np.exp(_log_scale_integral(spec, grid))
    rel = np.abs(s_point - s_closed) / np.abs(s_closed).max()
    if rel.max() > 1e-9:
        raise NumericalError(
            f"divergence coefficient cross-check failed ({rel.max():.3e})"
        )
    return grid, s_point


def deriv1(y, h):
    """Second-order first derivative on a uniform grid."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    out[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    return out


def deriv2(y, h):
    """Second-order second derivative on a uniform grid."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    out[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h)
    out[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / (h * h)
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ground-truth spectral data of the generator on a uniform grid.

    ``nu`` holds the top eigenvalues in descending order (nu[0] = 0 up to
    solver tolerance) and ``u[k]`` the matching eigenfunctions, normalized
    in L2(mu) with u_k(0) > 0.
    """
    grid: np.ndarray
    mu: np.ndarray
    S: np.ndarray
    C0: float
    nu: np.ndarray
    u: np.ndarray = field(repr=False)
    spec_name: str = ""

    @property
    def n(self):
        return self.grid.shape[0] - 1

    @property
    def h(self):
        return 1.0 / self.n

    def u_deriv(self, k, order=1):
        if order == 1:
            return deriv1(self.u[k], self.h)
        if order == 2:
            return deriv2(self.u[k], self.h)
        raise ValueError("derivative order must be 1 or 2")

    def u_at(self, k, x):
        """Eigenfunction k at arbitrary points, linearly interpolated."""
        return np.interp(x, self.grid, self.u[k])

    @cached_property
    def mu_cdf(self):
        cdf = cumulative_trapezoid(self.mu, self.grid)
        return cdf / cdf[-1]


def generator_eigs(spec, n, K):
    """Top K + 1 Neumann eigenpairs of the generator, via finite volumes.

    The divergence form ``mu^-1 (S f')'`` is discretized conservatively on
    the uniform grid with zero-flux boundary faces, giving a symmetric
    tridiagonal pencil with the diagonal mu weight; the scheme is second
    order in the grid spacing.
    """
    if n < 256:
        raise ValueError("eigenproblem grid needs n >= 256")
    if K > n // 4:
        raise ValueError("requested eigencount K exceeds n / 4")
    fine = np.linspace(0.0, 1.0, 2 * n + 1)
    expnt = _log_scale_integral(spec, fine)
    raw_fine = np.exp(expnt) / spec.sigma2(fine)
    grid = fine[::2]
    h = grid[1] - grid[0]

    # Normalize by the trapezoid mass on this grid: the scheme's discrete
    # L2(mu) then has the constant as an exact unit-norm eigenfunction,
    # which keeps the spectral identities (row mass, long-time limit)
    # exact rather than O(h^2).
    weights = np.full(n + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    mass = float(np.sum(weights * raw_fine[::2]))
    c0 = 1.0 / (2.0 * mass)
    mu = raw_fine[::2] / mass
    s_nodes = 0.5 * spec.sigma2(grid) * mu
    s_faces = 0.5 * spec.sigma2(fine[1::2]) * (raw_fine[1::2] / mass)
    assert np.all(s_faces > 0.0) and np.all(np.isfinite(s_faces)), \
        "flux coefficients must be positive"

    m = mu * weights

    # Symmetric tridiagonal pencil, scaled by the diagonal mass matrix.
    diag = np.empty(n + 1)
    diag[0] = -s_faces[0] / h
    diag[-1] = -s_faces[-1] / h
    diag[1:-1] = -(s_faces[:-1] + s_faces[1:]) / h
    off = s_faces / h

    rs = np.sqrt(m)
    db = diag / m
    eb = off / (rs[:-1] * rs[1:])
    try:
        vals, vecs = eigh_tridiagonal(db, eb, select="i", select_range=(n - K, n))
    except Exception as exc:  # LAPACK failure
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    order = np.argsort(vals)[::-1]
    nu = vals[order]
    u = (vecs[:, order] / rs[:, None]).T
    sign = np.where(u[:, 0] >= 0.0, 1.0, -1.0)
    u = u * sign[:, None]
    # The constant is an exact eigenfunction of the assembled pencil
    # (zero row sums, unit discrete mass); pin it to kill solver noise.
    nu[0] = 0.0
    u[0] = 1.0
    return SpectralDecomposition(
        grid=grid, mu=mu, S=s_nodes, C0=c0, nu=nu, u=u, spec_name=spec.name
    )


def choose_truncation(dec, delta, tol=1e-12):
    """Smallest mode index whose weight exp(nu_k delta) drops below tol."""
    w = np.exp(dec.nu * delta)
    idx = np.nonzero(w < tol)[0]
    if idx.size == 0:
        raise NumericalError(
            f"spectral truncation impossible: exp(nu_K delta) = {w[-1]:.3e} "
            f">= {tol:.1e}; increase K or delta"
        )
    return int(idx[0])


def transition_density(dec, delta, K=None, tol=1e-12):
    """Transition density p_delta(x, y) on grid x grid from the spectral sum.

    Rows integrate to one and the detailed-balance symmetry
    ``mu(x) p(x, y) = mu(y) p(y, x)`` holds by construction.  ``K`` is the
    last mode included; when omitted it is chosen so the smallest retained
    weight exp(nu_K delta) is already below ``tol``.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if K is None:
        K = choose_truncation(dec, delta, tol)
    if K >= dec.nu.shape[0]:
        raise ValueError("truncation K exceeds available eigencount")
    w = np.exp(dec.nu[: K + 1] * delta)
    if w[-1] >= tol:
        raise NumericalError(
            f"truncation residual exp(nu_K delta) = {w[-1]:.3e} above {tol:.1e}; "
            "increase K or delta"
        )
    u = dec.u[: K + 1]
    p = (u.T * w) @ u
    return p * dec.mu[None, :]


def reconstruct_sigma2(dec, interval=(0.1, 0.9)):
    """Recover sigma^2 on a closed interior interval from (nu_1, u_1, mu).

    Implements ``2 nu_1 int_0^x u_1 mu / (u_1'(x) mu(x))`` with cumulative
    trapezoid quadrature and the second-order discrete derivative.
    """
    a, b = interval
    if not 0.0 < a < b < 1.0:
        raise ValueError("interval must satisfy 0 < a < b < 1")
    u1 = dec.u[1]
    integ = cumulative_trapezoid(u1 * dec.mu, dec.grid)
    den = deriv1(u1, dec.h) * dec.mu
    mask = (dec.grid >= a) & (dec.grid <= b)
    dsub = den[mask]
    if np.abs(dsub).min() < 1e-12 * np.abs(dsub).max():
        raise NumericalError("u_1' mu vanishes inside the interval; eigen solve suspect")
    return dec.grid[mask], 2.0 * dec.nu[1] * integ[mask] / dsub


def reconstruct_b(dec, interval=(0.1, 0.9)):
    """Recover the drift on an interior interval from (nu_1, u_1, mu)."""
    a, b = interval
    if not 0.0 < a < b < 1.0:
        raise ValueError("interval must satisfy 0 < a < b < 1")
    u1 = dec.u[1]
    u1p = deriv1(u1, dec.h)
    u1pp = deriv2(u1, dec.h)
    integ = cumulative_trapezoid(u1 * dec.mu, dec.grid)
    mask = (dec.grid >= a) & (dec.grid <= b)
    den = (u1p * u1p * dec.mu)[mask]
    if np.abs(den).min() < 1e-12 * np.abs(den).max():
        raise NumericalError("u_1'^2 mu vanishes inside the interval; eigen solve suspect")
    num = dec.nu[1] * (u1 * u1p * dec.mu - u1pp * integ)[mask]
    return dec.grid[mask], num / den


def invert_tabulated_cdf(cdf, grid, u):
    """Inverse of a tabulated CDF with linear interpolation."""
    u = np.asarray(u, dtype=float)
    idx = np.clip(np.searchsorted(cdf, u, side="right"), 1, cdf.shape[0] - 1)
    lo = cdf[idx - 1]
    span = cdf[idx] - lo
    t = np.where(span > 0.0, (u - lo) / np.where(span > 0.0, span, 1.0), 0.0)
    return grid[idx - 1] + t * (grid[idx] - grid[idx - 1])


def sample_invariant(dec, rng, size=None):
    """Draw from the invariant law by inverse CDF on the oracle grid."""
    u = rng.random(size)
    x = invert_tabulated_cdf(dec.mu_cdf, dec.grid, u)
    return float(x) if size is None else x


def stationary_moment(dec, f=None):
    """Trapezoid integral of f against mu (mean of x when f is None)."""
    vals = dec.grid if f is None else np.asarray(f(dec.grid), dtype=float)
    return float(np.sum(trapezoid_weights(dec.grid) * vals * dec.mu))
