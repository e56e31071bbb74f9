import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

# Flat bump on the roof: w(s) = exp(4 - 1/(s(1-s))), peak value 1 at s = 1/2
WINDOW_PEAK_SHIFT = 4.0
# Below this value of s(1-s) the window and all its derivatives underflow to 0
WINDOW_CUTOFF = 1e-3

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-12

observables = {
    'const': lambda base, roof: np.ones_like(roof),
    'cos_roof': lambda base, roof: np.cos(2 * np.pi * roof),
    'sin_roof': lambda base, roof: np.sin(2 * np.pi * roof),
    'cos_base1': lambda base, roof: np.cos(2 * np.pi * base[..., 0]),
    'cos_base2': lambda base, roof: np.cos(2 * np.pi * base[..., 1]),
    'win_cos_base1': lambda base, roof: window(roof) * np.cos(2 * np.pi * base[..., 0]),
}


def window_scalar(s):
    """
    Scalar flat bump, used inside quadrature callbacks
    :param s: float, roof coordinate
    :return: float
    """
    q = s * (1.0 - s)
    if q < WINDOW_CUTOFF:
        return 0.0
    return math.exp(WINDOW_PEAK_SHIFT - 1.0 / q)


def window(s):
    """
    Vectorised flat bump w(s), zero outside (0, 1)
    :param s: float or numpy array, roof coordinate
    :return: numpy array of the same shape
    """
    s = np.asarray(s, dtype=float)
    q = s * (1.0 - s)
    inside = q >= WINDOW_CUTOFF
    safe_q = np.where(inside, q, 1.0)
    return np.where(inside, np.exp(WINDOW_PEAK_SHIFT - 1.0 / safe_q), 0.0)


def window_derivative(s, order=1):
    """
    Derivatives of the flat bump, closed form
    :param s: float or numpy array, roof coordinate
    :param order: int, 0, 1 or 2
    :return: numpy array
    """
    if order == 0:
        return window(s)
    s = np.asarray(s, dtype=float)
    q = s * (1.0 - s)
    inside = q >= WINDOW_CUTOFF
    safe_q = np.where(inside, q, 1.0)
    w = np.where(inside, np.exp(WINDOW_PEAK_SHIFT - 1.0 / safe_q), 0.0)
    dq = 1.0 - 2.0 * s
    ratio = dq / safe_q ** 2
    if order == 1:
        return w * ratio
    if order == 2:
        return w * (ratio ** 2 - 2.0 / safe_q ** 2 - 2.0 * dq ** 2 / safe_q ** 3)
    raise ValueError(f"Unsupported window derivative order: {order}")


@lru_cache(maxsize=None)
def window_mass():
    """
    Total mass of the window over one roof interval
    :return: tuple (value, abs error estimate)
    """
    value, err = quad(window_scalar, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return value, err


@lru_cache(maxsize=None)
def window_sup(order):
    """
    Supremum of |w^(order)| over the roof, used for Lipschitz bounds on tau
    :param order: int, 0 or 1
    :return: float
    """
    if order == 0:
        return 1.0
    g = lambda s: -abs(float(window_derivative(s, order)))
    # |w'| is symmetric about 1/2, so the left half is enough
    res = minimize_scalar(g, bounds=(0.02, 0.5), method='bounded', options={'xatol': 1e-10})
    return -res.fun * (1 + 1e-6)


@lru_cache(maxsize=8192)
def window_integral(order, lo, hi):
    """
    Integral of w^(order) over [lo, hi] inside one roof interval
    :param order: int, 0 (quadrature) or 1 (exact, w(hi) - w(lo))
    :param lo: float, lower roof value
    :param hi: float, upper roof value
    :return: tuple (value, abs error estimate)
    """
    if hi <= lo:
        return 0.0, 0.0
    if order == 1:
        return window_scalar(hi) - window_scalar(lo), 0.0
    if order != 0:
        raise ValueError(f"Unsupported window integral order: {order}")
    if lo == 0.0 and hi == 1.0:
        return window_mass()
    value, err = quad(window_scalar, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return value, err
