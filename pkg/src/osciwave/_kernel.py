"""Compiled Dormand-Prince 5(4) integrator for a single Fourier mode.

The state is ``(V1, V2, Q)`` where ``V = (i|xi| v, v_t)`` and ``Q`` accumulates
the dissipated energy ``int 2 b |v_t|^2``. In the averaged frame the damping is
the principal part alone and the oscillating part enters only through the
slowly varying factor applied outside the kernel.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

STATUS_OK = 0
STATUS_STIFF = 1
STATUS_BLOWUP = 2
STATUS_MAX_STEPS = 3

MODE_RESOLVED = 0
MODE_AVERAGED = 1


@njit(cache=True, nogil=True)
def _chi(x, m, cm):
    return cm * math.sin(2.0 * math.pi * x) * (4.0 * x * (1.0 - x)) ** (m + 1)


@njit(cache=True, nogil=True)
def _bump(t, p, q, r, h, m, cm):
    if t < 1.0:
        return 0.0
    n0 = int(math.floor(t ** (1.0 / r)))
    for dn in range(3):
        n = n0 + 1 - dn
        if n < 1:
            continue
        tn = float(n) ** r
        cnt = math.floor(float(n) ** h + 1e-12)
        if tn <= t <= tn + cnt * tn ** (1.0 - q):
            tau = tn ** (q - 1.0) * (t - tn)
            if tau >= cnt:
                return 0.0
            x = tau - math.floor(tau)
            return tn**p * _chi(x, m, cm)
    return 0.0


@njit(cache=True, nogil=True)
def principal_value(t, params):
    if params[0] == 1.0:
        return params[1]
    return params[1] / (1.0 + t)


@njit(cache=True, nogil=True)
def sigma_value(t, params):
    kind = params[2]
    if kind == 1.0:
        s = 1.0 + t
        return s ** params[3] * math.sin(s ** params[4])
    if kind == 2.0:
        return _bump(t, params[3], params[4], params[5], params[6], params[7], params[8])
    return 0.0


@njit(cache=True, nogil=True)
def oscillation_rate(t, params):
    kind = params[2]
    if kind == 1.0:
        return params[4] * (1.0 + t) ** (params[4] - 1.0)
    if kind == 2.0:
        return 2.0 * math.pi * (params[7] + 2.0) * (1.0 + t) ** (params[4] - 1.0)
    return 0.0


@njit(cache=True, nogil=True)
def _rhs(t, y1, y2, xi, params, mode):
    if mode == 0:
        b = principal_value(t, params) + sigma_value(t, params)
    else:
        b = principal_value(t, params)
    d1 = 1j * xi * y2
    d2 = 1j * xi * y1 - b * y2
    dq = 2.0 * b * (y2.real * y2.real + y2.imag * y2.imag)
    return d1, d2, dq


@njit(cache=True, nogil=True)
def _h_max(t, xi, params, mode, c_step):
    w = max(xi, 1.0)
    if mode == 0:
        w = max(w, oscillation_rate(t, params))
    return c_step * 2.0 * math.pi / w


@njit(cache=True, nogil=True)
def integrate(xi, y0, t0, samples, rtol, atol, params, mode, c_step, h_min, max_steps):
    """Advance ``y0`` from ``t0`` through the increasing ``samples``.

    Steps land exactly on every sample time. Returns the sampled states,
    a status code, the accepted and rejected step counts and the last time
    reached.
    """
    ns = samples.shape[0]
    out = np.empty((ns, 3), dtype=np.complex128)
    y1 = y0[0]
    y2 = y0[1]
    yq = y0[2].real
    t = t0
    k1a, k1b, k1q = _rhs(t, y1, y2, xi, params, mode)
    h = 0.1 * _h_max(t, xi, params, mode, c_step)
    steps = 0
    rejected = 0
    j = 0
    while j < ns and samples[j] <= t:
        out[j, 0] = y1
        out[j, 1] = y2
        out[j, 2] = yq
        j += 1
    while j < ns:
        if steps + rejected >= max_steps:
            return out, STATUS_MAX_STEPS, steps, rejected, t
        hm = _h_max(t, xi, params, mode, c_step)
        if h > hm:
            h = hm
        land = False
        target = samples[j]
        if t + h >= target - 1e-13 * max(1.0, abs(target)):
            h = target - t
            land = True
        if h < h_min:
            if land and h > 0.0:
                pass
            else:
                return out, STATUS_STIFF, steps, rejected, t

        a1 = y1 + h * A21 * k1a
        a2 = y2 + h * A21 * k1b
        k2a, k2b, k2q = _rhs(t + C2 * h, a1, a2, xi, params, mode)
        a1 = y1 + h * (A31 * k1a + A32 * k2a)
        a2 = y2 + h * (A31 * k1b + A32 * k2b)
        k3a, k3b, k3q = _rhs(t + C3 * h, a1, a2, xi, params, mode)
        a1 = y1 + h * (A41 * k1a + A42 * k2a + A43 * k3a)
        a2 = y2 + h * (A41 * k1b + A42 * k2b + A43 * k3b)
        k4a, k4b, k4q = _rhs(t + C4 * h, a1, a2, xi, params, mode)
        a1 = y1 + h * (A51 * k1a + A52 * k2a + A53 * k3a + A54 * k4a)
        a2 = y2 + h * (A51 * k1b + A52 * k2b + A53 * k3b + A54 * k4b)
        k5a, k5b, k5q = _rhs(t + C5 * h, a1, a2, xi, params, mode)
        a1 = y1 + h * (A61 * k1a + A62 * k2a + A63 * k3a + A64 * k4a + A65 * k5a)
        a2 = y2 + h * (A61 * k1b + A62 * k2b + A63 * k3b + A64 * k4b + A65 * k5b)
        k6a, k6b, k6q = _rhs(t + h, a1, a2, xi, params, mode)
        n1 = y1 + h * (B1 * k1a + B3 * k3a + B4 * k4a + B5 * k5a + B6 * k6a)
        n2 = y2 + h * (B1 * k1b + B3 * k3b + B4 * k4b + B5 * k5b + B6 * k6b)
        nq = yq + h * (B1 * k1q + B3 * k3q + B4 * k4q + B5 * k5q + B6 * k6q)
        k7a, k7b, k7q = _rhs(t + h, n1, n2, xi, params, mode)

        e1 = h * (E1 * k1a + E3 * k3a + E4 * k4a + E5 * k5a + E6 * k6a + E7 * k7a)
        e2 = h * (E1 * k1b + E3 * k3b + E4 * k4b + E5 * k5b + E6 * k6b + E7 * k7b)
        eq = h * (E1 * k1q + E3 * k3q + E4 * k4q + E5 * k5q + E6 * k6q + E7 * k7q)
        norm_old = math.sqrt(abs(y1) ** 2 + abs(y2) ** 2)
        norm_new = math.sqrt(abs(n1) ** 2 + abs(n2) ** 2)
        scale = atol + rtol * max(norm_old, norm_new)
        err = math.sqrt(abs(e1) ** 2 + abs(e2) ** 2) / scale
        errq = abs(eq) / (atol + rtol * (abs(nq) + max(norm_old, norm_new) ** 2))
        if errq > err:
            err = errq

        if not (math.isfinite(n1.real) and math.isfinite(n1.imag) and math.isfinite(n2.real)
                and math.isfinite(n2.imag) and math.isfinite(nq)):
            if h <= h_min:
                return out, STATUS_BLOWUP, steps, rejected, t
            h *= 0.25
            rejected += 1
            continue

        if err <= 1.0:
            t = target if land else t + h
            y1 = n1
            y2 = n2
            yq = nq
            k1a, k1b, k1q = k7a, k7b, k7q
            steps += 1
            if land:
                out[j, 0] = y1
                out[j, 1] = y2
                out[j, 2] = yq
                j += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-0.2)))
            if not land:
                h = h * fac
            else:
                h = max(h * fac, 0.1 * _h_max(t, xi, params, mode, c_step))
        else:
            rejected += 1
            h = h * max(0.2, 0.9 * err ** (-0.2))
    return out, STATUS_OK, steps, rejected, t
