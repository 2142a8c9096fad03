# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels; see _kernels_py for the reference semantics.

Compiled with -ffp-contract=off so the arithmetic matches the pure-Python
fallback bit for bit.
"""
from libc.math cimport fmod

COMPILED = True


cdef inline double _fold(double x) nogil:
    cdef double r = fmod(x, 2.0)
    if r < 0.0:
        r += 2.0
    if r > 1.0:
        r = 2.0 - r
    return r


def fold(double x):
    """Reflect a real proposal into [0, 1] (2-periodic triangle map)."""
    return _fold(x)


cdef inline Py_ssize_t _bisect_right(const double[:] a, double u, Py_ssize_t hi) nogil:
    cdef Py_ssize_t lo = 0, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _invert(const double[:] cdf, const double[:] grid,
                           Py_ssize_t n, double u) nogil:
    cdef Py_ssize_t j = _bisect_right(cdf, u, n + 1)
    cdef double lo, span, t
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


def euler_path(double x0, const double[:] normals, double dt, double sqdt,
               int substeps, const double[:] sigma_tab, const double[:] b_tab,
               double[:] out):
    """Reflected Euler chain; records every ``substeps``-th state."""
    cdef Py_ssize_t m = sigma_tab.shape[0] - 1
    cdef Py_ssize_t n_obs = out.shape[0] - 1
    cdef Py_ssize_t rec, step, k = 0
    cdef Py_ssize_t i
    cdef double x = x0, z, u, w, bv, sv
    out[0] = x
    with nogil:
        for rec in range(1, n_obs + 1):
            for step in range(substeps):
                z = normals[k]
                k += 1
                u = x * m
                i = <Py_ssize_t>u
                if i > m - 1:
                    i = m - 1
                w = u - i
                bv = b_tab[i] + w * (b_tab[i + 1] - b_tab[i])
                sv = sigma_tab[i] + w * (sigma_tab[i + 1] - sigma_tab[i])
                x = _fold(x + bv * dt + sv * sqdt * z)
            out[rec] = x
    return out


def exact_path(double u0, const double[:] uniforms, const double[:] grid,
               const double[:] mu_cdf, const double[:, :] row_cdfs,
               double[:] out):
    """Chain sampled from tabulated conditional CDFs of the transition law."""
    cdef Py_ssize_t n = grid.shape[0] - 1
    cdef Py_ssize_t nstep = out.shape[0] - 1
    cdef Py_ssize_t k, i
    cdef double x, u, wx, y0, y1
    x = _invert(mu_cdf, grid, n, u0)
    out[0] = x
    with nogil:
        for k in range(nstep):
            u = uniforms[k]
            i = <Py_ssize_t>(x * n)
            if i > n - 1:
                i = n - 1
            wx = x * n - i
            y0 = _invert(row_cdfs[i], grid, n, u)
            y1 = _invert(row_cdfs[i + 1], grid, n, u)
            x = y0 + wx * (y1 - y0)
            out[k + 1] = x
    return out
