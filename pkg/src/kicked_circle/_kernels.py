"""Compiled orbit loops for the kicked circle map.

psi is passed as (k, cos_coeffs, sin_coeffs) arrays; kicks are generated
outside (see noise.KickStream) so that the loops stay pure.
"""
import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
# |tau'| below this is floored before taking the log
LOG_FLOOR = 1e-300


@njit(cache=True)
def _psi_and_d1(x, k, c, s):
    v = 0.0
    d = 0.0
    for j in range(k.shape[0]):
        w = TWO_PI * k[j]
        th = w * x
        ct = math.cos(th)
        st = math.sin(th)
        v += c[j] * ct + s[j] * st
        d += w * (s[j] * ct - c[j] * st)
    return v, d


@njit(cache=True)
def orbit_log_derivative(x0, a, L, k, c, s, kicks, burn_in):
    """Mean of log|tau'(x_i)| and of |psi'(x_i)| over the orbit after burn_in steps."""
    x = x0
    acc = 0.0
    acc_abs = 0.0
    n = kicks.shape[0]
    for i in range(n):
        v, d = _psi_and_d1(x, k, c, s)
        if i >= burn_in:
            acc += math.log(max(abs(1.0 + L * d), LOG_FLOOR))
            acc_abs += abs(d)
        x = a + x + L * v + kicks[i]
        x -= math.floor(x)
    m = n - burn_in
    return acc / m, acc_abs / m


@njit(cache=True)
def sink_orbit(x0, z, nu, a, L, k, c, s, kicks):
    """Orbit average of log|tau'| while checking confinement to B_nu(z).

    Returns (mean_log, escape_step) with escape_step = -1 if never escaped.
    """
    x = x0
    acc = 0.0
    n = kicks.shape[0]
    for i in range(n):
        dz = x - z
        dz -= math.floor(dz + 0.5)
        if abs(dz) > nu:
            return acc / max(i, 1), i
        v, d = _psi_and_d1(x, k, c, s)
        acc += math.log(max(abs(1.0 + L * d), LOG_FLOOR))
        x = a + x + L * v + kicks[i]
        x -= math.floor(x)
    dz = x - z
    dz -= math.floor(dz + 0.5)
    if abs(dz) > nu:
        return acc / n, n
    return acc / n, -1


@njit(cache=True)
def orbit_histogram(x0, a, L, k, c, s, kicks, burn_in, n_cells):
    """Visit counts per cell of the kicked orbit after burn_in steps."""
    counts = np.zeros(n_cells, dtype=np.int64)
    x = x0
    for i in range(kicks.shape[0]):
        if i >= burn_in:
            j = int(x * n_cells)
            if j >= n_cells:
                j = n_cells - 1
            counts[j] += 1
        v, d = _psi_and_d1(x, k, c, s)
        x = a + x + L * v + kicks[i]
        x -= math.floor(x)
    return counts
