"""Gauss-Legendre panels and product-integration weights for log|t - t0|."""
import math

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander

NQ = 16
TG, WG = leggauss(NQ)
VL = legvander(TG, NQ - 1)              # P_m(t_j)
VL_INV = np.linalg.inv(VL)              # nodal values -> Legendre coefficients
_SCALE = (2 * np.arange(NQ) + 1) / 2.0


def legendre_Q(z, nmax):
    """Q_0..Q_nmax at real z.  Ferrers functions on |z| < 1.  On |z| > 1 the
    forward recurrence amplifies errors by about exp(2 n acosh|z|): it is used
    while that stays small, Miller's backward recurrence (started deep enough
    for the minimal solution to dominate) otherwise."""
    z = float(z)
    Q = np.empty(nmax + 1)
    az = abs(z)
    if az < 1:
        Q[0] = 0.5 * math.log((1 + z) / (1 - z))
    else:
        Q[0] = 0.5 * math.log((z + 1) / (z - 1))
    eta = math.acosh(az) if az > 1 else 0.0
    if az < 1 or eta < 0.1:
        if nmax >= 1:
            Q[1] = z * Q[0] - 1
        for j in range(1, nmax):
            Q[j + 1] = ((2 * j + 1) * z * Q[j] - j * Q[j - 1]) / (j + 1)
        return Q
    N = nmax + 10 + int(math.ceil(40.0 / eta))
    q = np.zeros(N + 2)
    q[N] = 1e-300
    for j in range(N, 0, -1):
        q[j - 1] = ((2 * j + 1) * z * q[j] - (j + 1) * q[j + 1]) / j
    return q[: nmax + 1] * (Q[0] / q[0])


def log_moments(t0):
    """I_m = int_{-1}^{1} P_m(t) log|t - t0| dt for m < NQ."""
    I = np.empty(NQ)
    m = np.arange(1, NQ)
    if abs(abs(t0) - 1) < 1e-14:
        # endpoint limit: int P_m log(1 -+ t) = -2/(m(m+1)) times the parity sign
        I[0] = 2 * math.log(2) - 2
        I[1:] = -2.0 / (m * (m + 1)) * (np.sign(t0) ** m)
        return I
    Q = legendre_Q(t0, NQ)
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = (1 - t0) * np.log(abs(1 - t0)) if t0 != 1 else 0.0
        lp = (1 + t0) * np.log(abs(1 + t0)) if t0 != -1 else 0.0
    I[0] = lm + lp - 2
    I[1:] = 2.0 / (2 * m + 1) * (Q[2:] - Q[:-2])
    return I


def log_weights(t0):
    """Weights w_j with sum_j w_j f(t_j) = int f(t) log|t - t0| dt for
    polynomial f of degree < NQ."""
    return VL @ (_SCALE * log_moments(t0)) * WG


def interp_matrix(t):
    """Rows evaluate the degree NQ-1 interpolant of nodal values at t."""
    return legvander(np.atleast_1d(t), NQ - 1) @ VL_INV
