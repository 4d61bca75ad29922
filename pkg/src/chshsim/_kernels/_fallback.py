"""Pure-numpy counting kernels, used when the compiled extension is absent.

Consumes the same raw uniform stream as ``_core.pyx`` (two doubles per
trial, drawn in one block) and applies the same decision logic, so the two
backends return identical counts for identical bit generators.
"""

import numpy as np
from scipy.special import ndtri


def _split_uniforms(bit_generator, n_trials):
    u = np.random.Generator(bit_generator).random(2 * n_trials)
    return u[0::2], u[1::2]


def _count_sign_pairs(s1_plus, s2_plus):
    n_pp = int(np.count_nonzero(s1_plus & s2_plus))
    n_pm = int(np.count_nonzero(s1_plus & ~s2_plus))
    n_mp = int(np.count_nonzero(~s1_plus & s2_plus))
    n_mm = len(s1_plus) - n_pp - n_pm - n_mp
    return n_pp, n_mm, n_pm, n_mp


def rtw_pair_counts(bit_generator, n_trials, n_same):
    """Joint sign counts for a correlated telegraph-wave pair."""
    u1, u2 = _split_uniforms(bit_generator, n_trials)
    s1_plus = u1 < 0.5
    same = u2 < n_same
    s2_plus = s1_plus == same
    return _count_sign_pairs(s1_plus, s2_plus)


def gaussian_pair_counts(bit_generator, n_trials, rho):
    """Joint sign counts for a correlated bivariate-Gaussian sign pair."""
    u1, u2 = _split_uniforms(bit_generator, n_trials)
    z1 = ndtri(u1)
    s1_plus = z1 >= 0.0
    if rho == 1.0:
        s2_plus = s1_plus
    elif rho == -1.0:
        s2_plus = z1 <= 0.0
    elif rho == 0.0:
        s2_plus = ndtri(u2) >= 0.0
    else:
        z2 = rho * z1 + np.sqrt(1.0 - rho * rho) * ndtri(u2)
        s2_plus = z2 >= 0.0
    return _count_sign_pairs(s1_plus, s2_plus)
