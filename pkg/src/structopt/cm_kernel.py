"""Compiled per-site update kernel for the probe-based sweep.

The per-site pipeline (five probe evaluations, tangent system, sinusoid
roots, curvature pick, write-back guard) is pure scalar arithmetic on a
handful of cached complex numbers; in CPython the interpreter dominates
its cost, which would bury the algorithmic complexity comparison the
runtime benchmark makes.  This module holds a numba translation of
exactly the same pipeline for contexts that can expose their per-site
scalars; :func:`structopt.cm_solvers._site_update` remains the reference
implementation and the two are pinned together by tests.

Returns NaN where the reference path skips the site.
"""

from __future__ import annotations

import math

import numba
import numpy as np

TWO_PI = 2.0 * math.pi
_RE_G_MIN = 1e-12
_RESIDUAL_TOL = 1e-8
_ROTATE = 0.05
_ATTEMPTS = 5
_FD_STEP = 1e-4
_CURV_MIN = 1e-10
_STAT_TOL = 1e-6
_ARCSIN_SLACK = 1e-9


@numba.njit(cache=True)
def _g_at(psi, e_cur, s00, s01, s10, s11, nb2):
    """G at a trial phase from the cached rank-two scalars."""
    e = np.exp(1j * psi)
    delta = e - e_cur
    if abs(delta) < 1e-300:
        return s10 * e
    dc = np.conj(delta)
    c00 = (delta * dc).real * nb2
    m00 = 1.0 + c00 * s00 + delta * s10
    m01 = c00 * s01 + delta * s11
    m10 = dc * s00
    m11 = 1.0 + dc * s01
    det = m00 * m11 - m01 * m10
    n00 = (m11 * c00 - m01 * dc) / det
    n01 = (m11 * delta) / det
    n10 = (m00 * dc - m10 * c00) / det
    n11 = (-m10 * delta) / det
    q0 = n00 * s00 + n01 * s10
    q1 = n10 * s00 + n11 * s10
    pa_a = s00 - (s00 * q0 + s01 * q1)
    pa_w = s10 - (s10 * q0 + s11 * q1)
    return (pa_w + dc * nb2 * pa_a) * e


@numba.njit(cache=True)
def _solve5(a, b, out):
    """Partial-pivot Gaussian elimination; False when a pivot collapses."""
    for col in range(5):
        piv = col
        best = abs(a[col, col])
        for row in range(col + 1, 5):
            v = abs(a[row, col])
            if v > best:
                best = v
                piv = row
        if best < 1e-300:
            return False
        if piv != col:
            for j in range(5):
                tmp = a[col, j]
                a[col, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        inv_p = 1.0 / a[col, col]
        for row in range(col + 1, 5):
            f = a[row, col] * inv_p
            if f != 0.0:
                for j in range(col, 5):
                    a[row, j] -= f * a[col, j]
                b[row] -= f * b[col]
    for col in range(4, -1, -1):
        acc = b[col]
        for j in range(col + 1, 5):
            acc -= a[col, j] * out[j]
        out[col] = acc / a[col, col]
    return True


@numba.njit(cache=True)
def site_update(theta_cur, s00, s01, s10, s11, nb2, grad_scale,
                want_positive):
    """One Gauss-Seidel site step; NaN means the site is skipped."""
    e_cur = np.exp(1j * theta_cur)
    w = np.zeros(5)
    r_mat = np.empty((5, 5))
    r_work = np.empty((5, 5))
    tans = np.empty(5)
    t_work = np.empty(5)
    found = False
    for attempt in range(_ATTEMPTS):
        shift = attempt * _ROTATE
        usable = True
        for m in range(5):
            psi = theta_cur + shift + TWO_PI * m / 5.0
            g_val = _g_at(psi, e_cur, s00, s01, s10, s11, nb2)
            re_g = g_val.real
            if not (math.isfinite(re_g) and math.isfinite(g_val.imag)) \
                    or abs(re_g) <= _RE_G_MIN:
                usable = False
                break
            t = g_val.imag / re_g
            c = math.cos(psi)
            s = math.sin(psi)
            r_mat[m, 0] = s - t * c
            r_mat[m, 1] = c + t * s
            r_mat[m, 2] = -s - t * c
            r_mat[m, 3] = c - t * s
            r_mat[m, 4] = 1.0
            tans[m] = t
        if not usable:
            continue
        for m in range(5):
            t_work[m] = tans[m]
            for j in range(5):
                r_work[m, j] = r_mat[m, j]
        if not _solve5(r_work, t_work, w):
            continue
        scale = 1.0
        for m in range(5):
            if abs(tans[m]) > scale:
                scale = abs(tans[m])
        resid_ok = True
        for m in range(5):
            acc = 0.0
            for j in range(5):
                acc += r_mat[m, j] * w[j]
            if abs(acc - tans[m]) > _RESIDUAL_TOL * scale:
                resid_ok = False
                break
        if resid_ok:
            found = True
            break
    if not found:
        return np.nan

    z1 = w[0] - w[2]
    z2 = w[1] + w[3]
    c = w[4]
    r = math.hypot(z1, z2)
    if r <= _RE_G_MIN:
        return np.nan  # degenerate or inconsistent slice
    s0 = -c / r
    if abs(s0) > 1.0 + _ARCSIN_SLACK:
        return np.nan
    if s0 > 1.0:
        s0 = 1.0
    if s0 < -1.0:
        s0 = -1.0
    phi = math.atan2(z2, z1)
    base = math.asin(s0)
    t1 = (base - phi) % TWO_PI
    t2 = (math.pi - base - phi) % TWO_PI
    if t1 >= TWO_PI:
        t1 = 0.0
    if t2 >= TWO_PI:
        t2 = 0.0

    hi = _g_at(t1 + _FD_STEP, e_cur, s00, s01, s10, s11, nb2).imag
    lo = _g_at(t1 - _FD_STEP, e_cur, s00, s01, s10, s11, nb2).imag
    c1 = grad_scale * (hi - lo) / (2.0 * _FD_STEP)
    if abs(c1) <= _CURV_MIN:
        return np.nan
    if (c1 > 0.0) == want_positive:
        chosen = t1
    else:
        chosen = t2
    g_sel = _g_at(chosen, e_cur, s00, s01, s10, s11, nb2)
    bound = abs(g_sel)
    if bound < 1.0:
        bound = 1.0
    if abs(g_sel.imag) > _STAT_TOL * bound:
        return np.nan
    return chosen
