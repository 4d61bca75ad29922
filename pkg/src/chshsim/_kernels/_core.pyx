# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled counting kernels for the correlated sign-pair Monte Carlo loop.

Both backends draw the identical raw uniform stream (two doubles per trial,
one ``Generator.random`` block per call) and must make bit-identical
decisions; these kernels replace only the numpy fallback's intermediate
boolean arrays with a single C pass over the buffer.  Any change to the
decision logic here has to be mirrored in ``_fallback.py``.
"""

from libc.math cimport sqrt

import numpy as np

from scipy.special.cython_special cimport ndtri


cdef inline object _draw_uniforms(bit_generator, Py_ssize_t n_trials):
    return np.random.Generator(bit_generator).random(2 * n_trials)


def rtw_pair_counts(bit_generator, Py_ssize_t n_trials, double n_same):
    """Joint sign counts for a correlated telegraph-wave pair.

    Per trial: s1 = +1 if u1 < 0.5 else -1, then s2 = s1 if u2 < n_same
    else -s1.  Returns (n_pp, n_mm, n_pm, n_mp).
    """
    cdef const double[::1] u = _draw_uniforms(bit_generator, n_trials)
    cdef long long counts[4]
    cdef Py_ssize_t i
    cdef int s1_plus, s2_plus

    counts[0] = counts[1] = counts[2] = counts[3] = 0
    with nogil:
        # branchless: the decisions are 50/50 coin flips, so a computed
        # index into the four counters beats data-dependent branches
        for i in range(n_trials):
            s1_plus = u[2 * i] < 0.5
            s2_plus = s1_plus == (u[2 * i + 1] < n_same)
            counts[(s1_plus << 1) | s2_plus] += 1
    # index bits (s1_plus, s2_plus): 3 = ++, 0 = --, 2 = +-, 1 = -+
    return counts[3], counts[0], counts[2], counts[1]


def gaussian_pair_counts(bit_generator, Py_ssize_t n_trials, double rho):
    """Joint sign counts for a correlated bivariate-Gaussian sign pair.

    Latent draws come from the inverse normal CDF applied to the uniform
    stream: z1 = ndtri(u1), z2 = rho*z1 + sqrt(1-rho^2)*ndtri(u2).  A latent
    draw of exactly zero maps to +1.  rho in {0, +1, -1} is special-cased so
    the degenerate algebra (0*inf) never arises.
    """
    cdef const double[::1] u = _draw_uniforms(bit_generator, n_trials)
    cdef long long counts[4]
    cdef Py_ssize_t i
    cdef double z1, z2, c
    cdef int s1_plus, s2_plus
    cdef int mode  # 0: general, 1: rho=+1, 2: rho=-1, 3: rho=0

    if rho == 1.0:
        mode = 1
    elif rho == -1.0:
        mode = 2
    elif rho == 0.0:
        mode = 3
    else:
        mode = 0
    c = sqrt(1.0 - rho * rho)

    counts[0] = counts[1] = counts[2] = counts[3] = 0
    with nogil:
        for i in range(n_trials):
            z1 = ndtri(u[2 * i])
            s1_plus = z1 >= 0.0
            if mode == 1:
                s2_plus = s1_plus
            elif mode == 2:
                s2_plus = z1 <= 0.0
            elif mode == 3:
                s2_plus = ndtri(u[2 * i + 1]) >= 0.0
            else:
                z2 = rho * z1 + c * ndtri(u[2 * i + 1])
                s2_plus = z2 >= 0.0
            counts[(s1_plus << 1) | s2_plus] += 1
    # index bits (s1_plus, s2_plus): 3 = ++, 0 = --, 2 = +-, 1 = -+
    return counts[3], counts[0], counts[2], counts[1]
