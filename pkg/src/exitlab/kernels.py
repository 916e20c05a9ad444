"""Compiled inner loops for the jump-adapted integrator.

One kernel advances the mild solution across a window [t0, t1] on a
uniform grid with the window's small jumps inserted at their exact times.
Modes: plain integration, ball-domain exit detection, and the deviation
probe that co-integrates the noiseless path on the same grid.  The Python
layer owns all sampling (counter-based streams) so the kernels stay purely
deterministic state maps.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_END = 0
STATUS_EXIT = 1
STATUS_BLOWUP = 2

MODE_PLAIN = 0
MODE_EXIT_BALL = 1
MODE_PROBE = 2

G_ADDITIVE = 0
G_NORM_MULT = 1
G_RANK_ONE = 2


@njit(cache=True)
def _h_norm2(lam, c):
    s = 0.0
    for i in range(c.size):
        s += lam[i] * c[i] * c[i]
    return s


@njit(cache=True)
def _h_dist2(lam, c, center):
    s = 0.0
    for i in range(c.size):
        d = c[i] - center[i]
        s += lam[i] * d * d
    return s


@njit(cache=True)
def _poly_grid(coef, u, out):
    # Horner evaluation of an ascending-coefficient polynomial on the grid
    for j in range(u.size):
        acc = coef[coef.size - 1]
        for k in range(coef.size - 2, -1, -1):
            acc = acc * u[j] + coef[k]
        out[j] = acc


@njit(cache=True)
def _g_apply(gkind, gdir, lam, x, z, scale, out):
    # out = G(x, scale * z); all presets are homogeneous of degree 1 in z
    if gkind == G_ADDITIVE:
        for i in range(x.size):
            out[i] = scale * z[i]
    elif gkind == G_NORM_MULT:
        s = np.sqrt(_h_norm2(lam, x)) * scale
        for i in range(x.size):
            out[i] = s * z[i]
    else:
        s = 0.0
        for i in range(x.size):
            s += lam[i] * (x[i] - gdir[i]) * z[i]
        s *= scale
        for i in range(x.size):
            out[i] = s * gdir[i]


@njit(cache=True)
def _reaction(synth, anal, fcoef, c, u_buf, fu_buf, out):
    for j in range(u_buf.size):
        acc = 0.0
        for i in range(c.size):
            acc += synth[j, i] * c[i]
        u_buf[j] = acc
    _poly_grid(fcoef, u_buf, fu_buf)
    for i in range(c.size):
        acc = 0.0
        for j in range(u_buf.size):
            acc += anal[i, j] * fu_buf[j]
        out[i] = acc


@njit(cache=True)
def _potential(lam, synth, quadw, Fcoef, c, u_buf, fu_buf):
    v = 0.5 * _h_norm2(lam, c)
    if Fcoef.size > 1:
        for j in range(u_buf.size):
            acc = 0.0
            for i in range(c.size):
                acc += synth[j, i] * c[i]
            u_buf[j] = acc
        _poly_grid(Fcoef, u_buf, fu_buf)
        s = 0.0
        for j in range(fu_buf.size):
            s += fu_buf[j]
        v -= quadw * s
    return v


@njit(cache=True)
def _advance(c, h, lam, synth, anal, fcoef, fpcoef, has_f,
             gkind, gdir, eps, drift, has_drift,
             u_buf, fu_buf, fhat, gz):
    # exponential-Euler step: exact semigroup, reaction and compensator
    # drift frozen at the left endpoint and weighted by phi1 = (1-e)/lam.
    # Far from the attractor the frozen reaction is stiff (|f'| large after
    # a heavy-tailed jump), so the step subdivides until |f'| h <= 1/2;
    # near the attractor a single full step is taken unchanged.
    remaining = h
    guard = 0
    while remaining > 0.0:
        hs = remaining
        if has_f:
            for j in range(u_buf.size):
                acc = 0.0
                for i in range(c.size):
                    acc += synth[j, i] * c[i]
                u_buf[j] = acc
            _poly_grid(fpcoef, u_buf, fu_buf)
            scale = 0.0
            for j in range(fu_buf.size):
                a = abs(fu_buf[j])
                if a > scale:
                    scale = a
            if scale * hs > 0.5:
                hs = 0.5 / scale
            _poly_grid(fcoef, u_buf, fu_buf)
            for i in range(c.size):
                acc = 0.0
                for j in range(u_buf.size):
                    acc += anal[i, j] * fu_buf[j]
                fhat[i] = acc
        if has_drift:
            _g_apply(gkind, gdir, lam, c, drift, eps, gz)
        for i in range(c.size):
            dec = np.exp(-lam[i] * hs)
            phi1 = (1.0 - dec) / lam[i]
            inc = 0.0
            if has_f:
                inc += fhat[i]
            if has_drift:
                inc += gz[i]
            c[i] = dec * c[i] + phi1 * inc
        remaining -= hs
        guard += 1
        if guard > 100000:
            break  # caller's blow-up check reports the failure


@njit(cache=True)
def _decay_with_increment(psi, h, lam, gz, has_inc):
    for i in range(psi.size):
        dec = np.exp(-lam[i] * h)
        if has_inc:
            psi[i] = dec * psi[i] + (1.0 - dec) / lam[i] * gz[i]
        else:
            psi[i] = dec * psi[i]


@njit(cache=True)
def integrate_window(c, psi, cdet, t0, t1, dt,
                     lam, synth, anal, fcoef, fpcoef, has_f,
                     gkind, gdir, eps,
                     jump_times, jump_marks,
                     drift, has_drift,
                     mode, center, radius_eff,
                     track_psi, check_levelset, Fcoef, quadw, dstar,
                     blowcap, refine, refine_tol,
                     sigma_times):
    """Advance the state over [t0, t1]; returns (status, t_event, max_deviation).

    Mutates ``c`` (noisy path), ``psi`` (stochastic convolution, when
    tracked), ``cdet`` (deterministic co-path in probe mode) and
    ``sigma_times`` (first level-set exits of the path and of the
    convolution; -1 while not triggered).  In exit mode the state at
    return is the exit locus when status == STATUS_EXIT.
    """
    n = c.size
    m_grid = synth.shape[0]
    u_buf = np.empty(m_grid)
    fu_buf = np.empty(m_grid)
    fhat = np.empty(n)
    gz = np.empty(n)
    gz2 = np.empty(n)
    c_prev = np.empty(n)
    cap2 = blowcap * blowcap
    r_eff2 = radius_eff * radius_eff
    maxdev = 0.0
    if mode == MODE_PROBE:
        d2 = _h_dist2(lam, c, cdet)
        if d2 > maxdev:
            maxdev = d2

    t = t0
    grid_i = 1
    jump_j = 0
    n_jumps = jump_times.size
    eps_tol = 1e-12 * max(1.0, abs(t1))

    while t < t1 - eps_tol:
        t_grid = t0 + grid_i * dt
        if t_grid > t1:
            t_grid = t1
        is_jump = False
        if jump_j < n_jumps and jump_times[jump_j] <= t_grid:
            t_evt = jump_times[jump_j]
            is_jump = True
        else:
            t_evt = t_grid
            grid_i += 1
        h = t_evt - t
        if h > 0.0:
            for i in range(n):
                c_prev[i] = c[i]
            _advance(c, h, lam, synth, anal, fcoef, fpcoef, has_f,
                     gkind, gdir, eps, drift, has_drift,
                     u_buf, fu_buf, fhat, gz)
            if track_psi:
                if has_drift:
                    _g_apply(gkind, gdir, lam, c_prev, drift, eps, gz2)
                _decay_with_increment(psi, h, lam, gz2, has_drift)
            if mode == MODE_PROBE:
                _advance(cdet, h, lam, synth, anal, fcoef, fpcoef, has_f,
                         gkind, gdir, 0.0, drift, False,
                         u_buf, fu_buf, fhat, gz)
        t = t_evt
        if is_jump:
            _g_apply(gkind, gdir, lam, c, jump_marks[jump_j], eps, gz2)
            for i in range(n):
                c[i] += gz2[i]
            if track_psi:
                for i in range(n):
                    psi[i] += gz2[i]
            jump_j += 1

        if mode == MODE_EXIT_BALL:
            if _h_dist2(lam, c, center) > r_eff2:
                if refine and not is_jump and h > refine_tol:
                    # crossing happened inside a smooth step: bisect the
                    # sub-step length from the saved entry state
                    lo = 0.0
                    hi = h
                    trial = np.empty(n)
                    while hi - lo > refine_tol:
                        mid = 0.5 * (lo + hi)
                        for i in range(n):
                            trial[i] = c_prev[i]
                        _advance(trial, mid, lam, synth, anal, fcoef, fpcoef, has_f,
                                 gkind, gdir, eps, drift, has_drift,
                                 u_buf, fu_buf, fhat, gz)
                        if _h_dist2(lam, trial, center) > r_eff2:
                            hi = mid
                        else:
                            lo = mid
                    for i in range(n):
                        c[i] = c_prev[i]
                    _advance(c, hi, lam, synth, anal, fcoef, fpcoef, has_f,
                             gkind, gdir, eps, drift, has_drift,
                             u_buf, fu_buf, fhat, gz)
                    return STATUS_EXIT, t - h + hi, np.sqrt(maxdev)
                return STATUS_EXIT, t, np.sqrt(maxdev)
            if _h_norm2(lam, c) > cap2:
                return STATUS_BLOWUP, t, np.sqrt(maxdev)
        elif mode == MODE_PROBE:
            if _h_norm2(lam, c) > cap2:
                return STATUS_BLOWUP, t, np.sqrt(maxdev)
            d2 = _h_dist2(lam, c, cdet)
            if d2 > maxdev:
                maxdev = d2
            if check_levelset:
                if sigma_times[0] < 0.0:
                    if _potential(lam, synth, quadw, Fcoef, c, u_buf, fu_buf) > dstar:
                        sigma_times[0] = t
                if track_psi and sigma_times[1] < 0.0:
                    if _potential(lam, synth, quadw, Fcoef, psi, u_buf, fu_buf) > dstar:
                        sigma_times[1] = t
        else:
            if _h_norm2(lam, c) > cap2:
                return STATUS_BLOWUP, t, np.sqrt(maxdev)

    return STATUS_END, t1, np.sqrt(maxdev)
