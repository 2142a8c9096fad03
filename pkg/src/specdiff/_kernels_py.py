"""Pure-Python sampling kernels; reference for the compiled module.

Same arithmetic, in the same order, as ``_kernels.pyx``: the compiled
core is built without FMA contraction, so for identical inputs the two
implementations produce bit-identical paths.
"""
from bisect import bisect_right
from math import fmod

COMPILED = False


def fold(x):
    """Reflect a real proposal into [0, 1] (2-periodic triangle map)."""
    r = fmod(x, 2.0)
    if r < 0.0:
        r += 2.0
    if r > 1.0:
        r = 2.0 - r
    return r


def _invert(cdf, grid, n, u):
    j = bisect_right(cdf, u)
    if j < 1:
        j = 1
    elif j > n:
        j = n
    lo = cdf[j - 1]
    span = cdf[j] - lo
    if span > 0.0:
        t = (u - lo) / span
    else:
        t = 0.0
    return grid[j - 1] + t * (grid[j] - grid[j - 1])


def euler_path(x0, normals, dt, sqdt, substeps, sigma_tab, b_tab, out):
    """Reflected Euler chain; records every ``substeps``-th state.

    ``sigma_tab`` and ``b_tab`` tabulate the coefficients on a uniform
    grid over [0, 1] (linear interpolation in between).  ``out`` must
    have length n_obs + 1 and receives the recorded states; ``normals``
    must hold n_obs * substeps standard normal draws.
    """
    sigma_tab = list(sigma_tab)
    b_tab = list(b_tab)
    normals = list(normals)
    m = len(sigma_tab) - 1
    n_obs = len(out) - 1
    x = x0
    out[0] = x
    k = 0
    for rec in range(1, n_obs + 1):
        for _ in range(substeps):
            z = normals[k]
            k += 1
            u = x * m
            i = int(u)
            if i > m - 1:
                i = m - 1
            w = u - i
            bv = b_tab[i] + w * (b_tab[i + 1] - b_tab[i])
            sv = sigma_tab[i] + w * (sigma_tab[i + 1] - sigma_tab[i])
            x = fold(x + bv * dt + sv * sqdt * z)
        out[rec] = x
    return out


def exact_path(u0, uniforms, grid, mu_cdf, row_cdfs, out):
    """Chain sampled from tabulated conditional CDFs of the transition law.

    ``row_cdfs[i]`` is the CDF of the transition density started from
    grid point i; the conditional at the current position blends the
    inverse CDFs of the two bracketing rows.  ``uniforms`` must hold one
    draw per step (len(out) - 1 of them); ``u0`` seeds the stationary
    initial state through ``mu_cdf``.
    """
    grid = list(grid)
    mu_cdf = list(mu_cdf)
    rows = [list(r) for r in row_cdfs]
    uniforms = list(uniforms)
    n = len(grid) - 1
    x = _invert(mu_cdf, grid, n, u0)
    out[0] = x
    for k in range(len(out) - 1):
        u = uniforms[k]
        i = int(x * n)
        if i > n - 1:
            i = n - 1
        wx = x * n - i
        y0 = _invert(rows[i], grid, n, u)
        y1 = _invert(rows[i + 1], grid, n, u)
        x = y0 + wx * (y1 - y0)
        out[k + 1] = x
    return out
