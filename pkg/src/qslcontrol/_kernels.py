"""
Compiled inner loop for GRAPE on phase-control models.

When the spectrum ``{w_j}`` of ``H(alpha)`` does not depend on ``alpha``,
``exp(-i H dt) = sum_p c_p H^p`` with coefficients interpolating
``exp(-i w dt)`` on that fixed spectrum, and the same identity differentiated
gives ``dU / d alpha`` exactly.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _mm(a, b, out):
    d = a.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0j
            for l in range(d):
                s += a[i, l] * b[l, j]
            out[i, j] = s


@njit(cache=True)
def phase_control_value_and_grad(ga, gb, amp, coeffs, alphas, vdag):
    n = alphas.size
    d = ga.shape[0]
    m = coeffs.size
    u = np.zeros((n, d, d), np.complex128)
    du = np.zeros((n, d, d), np.complex128)
    h = np.empty((d, d), np.complex128)
    dh = np.empty((d, d), np.complex128)
    hp = np.empty((d, d), np.complex128)
    dhp = np.empty((d, d), np.complex128)
    t1 = np.empty((d, d), np.complex128)
    t2 = np.empty((d, d), np.complex128)
    for k in range(n):
        ca = np.cos(alphas[k])
        sa = np.sin(alphas[k])
        for i in range(d):
            for j in range(d):
                h[i, j] = amp * (ca * ga[i, j] + sa * gb[i, j])
                dh[i, j] = amp * (-sa * ga[i, j] + ca * gb[i, j])
                hp[i, j] = h[i, j]
                dhp[i, j] = dh[i, j]
                u[k, i, j] = coeffs[1] * h[i, j]
                du[k, i, j] = coeffs[1] * dh[i, j]
            u[k, i, i] += coeffs[0]
        for p in range(2, m):
            # d(H^p) = d(H^(p-1)) H + H^(p-1) dH
            _mm(dhp, h, t1)
            _mm(hp, dh, t2)
            for i in range(d):
                for j in range(d):
                    dhp[i, j] = t1[i, j] + t2[i, j]
            _mm(hp, h, t1)
            for i in range(d):
                for j in range(d):
                    hp[i, j] = t1[i, j]
                    u[k, i, j] += coeffs[p] * hp[i, j]
                    du[k, i, j] += coeffs[p] * dhp[i, j]

    fwd = np.empty((n + 1, d, d), np.complex128)
    for i in range(d):
        for j in range(d):
            fwd[0, i, j] = 1.0 if i == j else 0.0
    for k in range(n):
        _mm(u[k], fwd[k], fwd[k + 1])

    g = 0j
    for i in range(d):
        for l in range(d):
            g += vdag[i, l] * fwd[n, l, i]

    # back[k] = V^dagger U_n ... U_(k+1); dg_k = tr(fwd[k] back[k] dU_k)
    back = vdag.copy()
    grad = np.empty(n)
    for k in range(n - 1, -1, -1):
        _mm(fwd[k], back, t1)
        s = 0j
        for i in range(d):
            for j in range(d):
                s += t1[i, j] * du[k, j, i]
        grad[k] = -2.0 / d**2 * (np.conj(g) * s).real
        _mm(back, u[k], t2)
        for i in range(d):
            for j in range(d):
                back[i, j] = t2[i, j]
    return 1.0 - abs(g) ** 2 / d**2, grad, fwd[n].copy()
