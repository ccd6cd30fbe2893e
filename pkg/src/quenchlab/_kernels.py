"""Compiled inner loops.

Everything here works on plain float arrays and scalars so that numba can
compile it. The public wrappers live in ``discretize`` and ``integrate``.

Scaling convention: ``F = h**2 * du/dt``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

PHI_IDENTITY = 0
PHI_POWER = 1

# status codes returned by advance()
RUNNING = 0
QUENCH_THRESHOLD = 1
QUENCH_WALL_EXIT = 2
MAX_TIME = 3
STALL = 4
NONFINITE = 5

SIDE_NONE = 0
SIDE_LEFT = 1
SIDE_RIGHT = 2

STALL_WALL_CHANGE = 1e-14


@njit(cache=True)
def rhs_heat(u, h, p, q, out):
    n = u.shape[0]
    for k in range(1, n - 1):
        out[k] = (u[k + 1] - u[k]) - (u[k] - u[k - 1])
    out[0] = 2.0 * (u[1] - u[0]) - 2.0 * h * u[0] ** (-p)
    out[n - 1] = 2.0 * h * (1.0 - u[n - 1]) ** (-q) - 2.0 * (u[n - 1] - u[n - 2])


@njit(cache=True)
def _flux_power(w, r):
    # |w|^(r-2) w, continuous extension 0 at w = 0
    if r == 2.0:
        return w
    if w == 0.0:
        return 0.0
    return abs(w) ** (r - 2.0) * w


@njit(cache=True)
def phi_value(s, kind, m):
    if kind == PHI_IDENTITY:
        return s
    return s ** (1.0 / m)


@njit(cache=True)
def phi_B(s, kind, m):
    # 1 / phi'(s)
    if kind == PHI_IDENTITY:
        return 1.0
    return m * s ** (1.0 - 1.0 / m)


@njit(cache=True)
def rhs_general(u, h, p, q, r, kind, m, out):
    n = u.shape[0]
    scale = 1.0 if r == 2.0 else h ** (r - 2.0)
    # W[j] holds |w|^(r-2) w / h^(r-2) for w = u[j+1] - u[j]
    w_prev = _flux_power(u[1] - u[0], r) / scale
    g_left = _flux_power(u[0] ** (-p), r)
    out[0] = phi_B(u[0], kind, m) * (2.0 * w_prev - 2.0 * h * g_left)
    for k in range(1, n - 1):
        w_next = _flux_power(u[k + 1] - u[k], r) / scale
        out[k] = phi_B(u[k], kind, m) * (w_next - w_prev)
        w_prev = w_next
    g_right = _flux_power((1.0 - u[n - 1]) ** (-q), r)
    out[n - 1] = phi_B(u[n - 1], kind, m) * (2.0 * h * g_right - 2.0 * w_prev)


@njit(cache=True)
def rhs(u, h, p, q, r, kind, m, out):
    if r == 2.0 and kind == PHI_IDENTITY:
        rhs_heat(u, h, p, q, out)
    else:
        rhs_general(u, h, p, q, r, kind, m, out)


@njit(cache=True)
def mass(u, h, kind, m):
    n = u.shape[0]
    acc = 0.0
    for j in range(1, n - 1):
        acc += phi_value(u[j], kind, m)
    acc += 0.5 * (phi_value(u[0], kind, m) + phi_value(u[n - 1], kind, m))
    return h * acc


@njit(cache=True)
def flux_balance(u_left, u_right, p, q, r):
    return (1.0 - u_right) ** (-q * (r - 1.0)) - u_left ** (-p * (r - 1.0))


@njit(cache=True)
def _inside(v):
    n = v.shape[0]
    if not (v[0] > 0.0 and v[n - 1] < 1.0):
        return False
    for j in range(n):
        if not math.isfinite(v[j]):
            return False
    return True


@njit(cache=True)
def _exit_side(v):
    n = v.shape[0]
    left = v[0] <= 0.0
    right = v[n - 1] >= 1.0
    if left and right:
        # deeper relative excursion past the singular value
        return SIDE_LEFT if -v[0] >= v[n - 1] - 1.0 else SIDE_RIGHT
    if left:
        return SIDE_LEFT
    if right:
        return SIDE_RIGHT
    return SIDE_NONE


@njit(cache=True)
def heun_step(v, tau, h, p, q, r, kind, m, f0, vstar, f1, out):
    """One predictor-corrector step; f0 must hold F(v) on entry.

    Returns 0 on success, otherwise the side (1 left, 2 right) at which the
    predictor or corrector left (0, 1), or 3 for a non-finite value.
    """
    n = v.shape[0]
    mu = tau / (2.0 * h * h)
    for j in range(n):
        vstar[j] = v[j] + 2.0 * mu * f0[j]
    if not _inside(vstar):
        s = _exit_side(vstar)
        return s if s != SIDE_NONE else 3
    rhs(vstar, h, p, q, r, kind, m, f1)
    for j in range(n):
        out[j] = v[j] + mu * (f1[j] + f0[j])
    if not _inside(out):
        s = _exit_side(out)
        return s if s != SIDE_NONE else 3
    return 0


@njit(cache=True)
def next_tau(tau, d0, d1, d2, tau_min, tau_max):
    n = d0.shape[0]
    m_ = np.inf
    for i in range(n):
        a = d1[i] - d0[i]
        b = d2[i] - d1[i]
        val = a * a - b * b
        if val < m_:
            m_ = val
    rad = tau * tau + m_
    if not rad > 0.0:
        return tau_min
    out = math.sqrt(rad)
    if out < tau_min:
        return tau_min
    if out > tau_max:
        return tau_max
    return out


@njit(cache=True)
def advance(u, f0, d0, d1, d2, state, params, n_max,
            out_t, out_ul, out_ur, out_tau, out_mass, out_fb, out_dl, out_dr, diag):
    """March up to ``n_max`` accepted steps, recording each one.

    ``state`` = [t, tau, k, exit_side] is updated in place; ``params`` =
    [h, p, q, r, kind, m, tau1, tau_min, tau_max, adaptive, eps, max_time].
    ``f0`` holds F(u) on entry and on exit. ``diag`` accumulates
    [non-monotone steps, all-positive interior, all-negative interior, mixed].
    Returns (number recorded, status).
    """
    h, p, q, r = params[0], params[1], params[2], params[3]
    kind = int(params[4])
    m = params[5]
    tau1, tau_min, tau_max = params[6], params[7], params[8]
    adaptive = params[9] != 0.0
    eps, max_time = params[10], params[11]
    n = u.shape[0]
    h2 = h * h
    vstar = np.empty(n)
    f1 = np.empty(n)
    un = np.empty(n)
    t = state[0]
    tau = state[1]
    k = int(state[2])
    recorded = 0
    status = RUNNING
    while recorded < n_max:
        landing = False
        if t + tau >= max_time:
            tau = max_time - t
            landing = True
        code = heun_step(u, tau, h, p, q, r, kind, m, f0, vstar, f1, un)
        if code != 0:
            if adaptive and tau > tau_min and not landing:
                tau = max(0.5 * tau, tau_min)
                continue
            if code == 3:
                status = NONFINITE
            else:
                status = QUENCH_WALL_EXIT
                state[3] = code
            break
        du_left = un[0] - u[0]
        du_right = un[n - 1] - u[n - 1]
        for j in range(n):
            u[j] = un[j]
        t += tau
        k += 1
        rhs(u, h, p, q, r, kind, m, f0)
        for j in range(n):
            d0[j] = d1[j]
            d1[j] = d2[j]
            d2[j] = f0[j] / h2

        out_t[recorded] = t
        out_ul[recorded] = u[0]
        out_ur[recorded] = u[n - 1]
        out_tau[recorded] = tau
        out_mass[recorded] = mass(u, h, kind, m)
        out_fb[recorded] = flux_balance(u[0], u[n - 1], p, q, r)
        out_dl[recorded] = d2[0]
        out_dr[recorded] = d2[n - 1]
        recorded += 1

        for j in range(n - 1):
            if not u[j + 1] > u[j]:
                diag[0] += 1
                break
        pos = True
        neg = True
        for j in range(1, n - 1):
            if not d2[j] > 0.0:
                pos = False
            if not d2[j] < 0.0:
                neg = False
        if pos:
            diag[1] += 1
        elif neg:
            diag[2] += 1
        else:
            diag[3] += 1

        if u[0] <= eps or u[n - 1] >= 1.0 - eps:
            status = QUENCH_THRESHOLD
            break
        if landing:
            status = MAX_TIME
            break
        if (adaptive and tau <= tau_min and abs(du_left) < STALL_WALL_CHANGE
                and abs(du_right) < STALL_WALL_CHANGE):
            status = STALL
            break
        if adaptive:
            if k == 1:
                tau = tau1
            elif k >= 2:
                tau = next_tau(tau, d0, d1, d2, tau_min, tau_max)
    state[0] = t
    state[1] = tau
    state[2] = k
    return recorded, status
