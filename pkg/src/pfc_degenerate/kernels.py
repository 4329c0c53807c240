"""Pointwise hot kernels evaluated on collocation values.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
expression.  ``_accel.USE_NUMBA`` picks the implementation once, at import.
Both paths compute the same closed forms; they agree to rounding, not bitwise.
"""

import numpy as np

from . import _accel

QUARTIC = 0
DERIVATION = 1
LINEAR = 2


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------

def _potential_np(u, kind, order, eps, gamma, kappa):
    # explicit products: numpy's ** on float arrays goes through the slow generic pow
    s = u - 1.0
    s2 = s * s
    if kind == QUARTIC:
        if order == 0:
            return 0.25 * s2 * s2 - 0.5 * eps * s2
        if order == 1:
            return s2 * s - eps * s
        return 3.0 * s2 - eps
    if kind == DERIVATION:
        if order == 0:
            f0 = -1.0 + 0.5 * s2 - s2 * s / 6.0 + s2 * s2 / 12.0
            return f0 + 0.5 * kappa * gamma * s2 - 0.5 * kappa * u * u
        if order == 1:
            return s - 0.5 * s2 + s2 * s / 3.0 + kappa * gamma * s - kappa * u
        return 1.0 - s + s2 + kappa * gamma - kappa
    return np.zeros_like(u)


def _mobility_reg_np(u, theta):
    return np.where(u > theta, u, theta)


def _entropy_reg_np(u, theta):
    upper = np.where(u > theta, u, 1.0)
    hi = upper * np.log(upper) - upper + 1.0
    lo = u * u / (2.0 * theta) + (np.log(theta) - 1.0) * u + 1.0 - 0.5 * theta
    return np.where(u > theta, hi, lo)


def _negativity_density_np(u, theta):
    v = np.minimum(u, 0.0) + theta
    return v * v


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _potential_nb(u, kind, order, eps, gamma, kappa):
        out = np.empty_like(u)
        for i in range(u.size):
            z = u[i]
            s = z - 1.0
            s2 = s * s
            if kind == 0:
                if order == 0:
                    v = 0.25 * s2 * s2 - 0.5 * eps * s2
                elif order == 1:
                    v = s2 * s - eps * s
                else:
                    v = 3.0 * s2 - eps
            elif kind == 1:
                if order == 0:
                    f0 = -1.0 + 0.5 * s2 - s2 * s / 6.0 + s2 * s2 / 12.0
                    v = f0 + 0.5 * kappa * gamma * s2 - 0.5 * kappa * z * z
                elif order == 1:
                    v = s - 0.5 * s2 + s2 * s / 3.0 + kappa * gamma * s - kappa * z
                else:
                    v = 1.0 - s + s2 + kappa * gamma - kappa
            else:
                v = 0.0
            out[i] = v
        return out

    @njit(cache=True)
    def _mobility_reg_nb(u, theta):
        out = np.empty_like(u)
        for i in range(u.size):
            out[i] = u[i] if u[i] > theta else theta
        return out

    @njit(cache=True)
    def _entropy_reg_nb(u, theta):
        out = np.empty_like(u)
        lt = np.log(theta)
        for i in range(u.size):
            z = u[i]
            if z > theta:
                out[i] = z * np.log(z) - z + 1.0
            else:
                out[i] = z * z / (2.0 * theta) + (lt - 1.0) * z + 1.0 - 0.5 * theta
        return out

    @njit(cache=True)
    def _negativity_density_nb(u, theta):
        out = np.empty_like(u)
        for i in range(u.size):
            v = (u[i] if u[i] < 0.0 else 0.0) + theta
            out[i] = v * v
        return out


def _flat(u):
    return np.ascontiguousarray(u, dtype=np.float64).reshape(-1)


def potential(u, kind, order, eps=0.0, gamma=0.0, kappa=1.0):
    """W, W' or W'' (``order`` 0/1/2) of the potential ``kind`` at every point of ``u``."""
    u = np.asarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        out = _potential_nb(_flat(u), int(kind), int(order), float(eps), float(gamma), float(kappa))
        return out.reshape(u.shape)
    return _potential_np(u, kind, order, eps, gamma, kappa)


def mobility_reg(u, theta):
    u = np.asarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _mobility_reg_nb(_flat(u), float(theta)).reshape(u.shape)
    return _mobility_reg_np(u, theta)


def entropy_reg(u, theta):
    u = np.asarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _entropy_reg_nb(_flat(u), float(theta)).reshape(u.shape)
    return _entropy_reg_np(u, theta)


def negativity_density(u, theta):
    u = np.asarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _negativity_density_nb(_flat(u), float(theta)).reshape(u.shape)
    return _negativity_density_np(u, theta)
