"""Per-pixel orbit kernels in log coordinates.

The state of an orbit is (rho, theta) = (log|z|, arg z) with theta kept in
[-pi, pi] by a sign-symmetric reduction. One step applies the lift
w -> w + log(lam) + exp(-w - exp(w)). Once the tail term itself overflows
the orbit is *saturated*: |f^n| is beyond any representable log-modulus,
and only the direction (huge or tiny) is kept.

Two implementations of the tile kernel exist: ``_tile_numba`` (scalar loop,
compiled when numba is available) and ``_tile_numpy`` (vectorized). They are
selected by ``orbit_tile(..., backend=...)``.
"""
import math

import numpy as np

from ._accel import HAS_NUMBA, default_backend, njit

PI = math.pi
TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)
LOG_MAX = 709.0
TAIL_FLUSH = -745.0
LOG_SAT = 1e300
ANGLE_LIMIT = 2.0**52  # beyond this an angle increment carries no information

# step status
OK = 0
SAT_BIG = 1
SAT_SMALL = 2

# condition bits stored per step
BIG = 1
SMALL = 2
H2 = 4
SAT = 8


@njit
def wrap_angle(t):
    """Reduce to [-pi, pi]; wrap_angle(-t) == -wrap_angle(t) exactly."""
    a = abs(t)
    if a > PI:
        a = a - TWO_PI * np.floor((a + PI) / TWO_PI)
    return a if t >= 0.0 else -a


@njit
def sin_exact(t):
    if t == PI or t == -PI:
        return 0.0
    return math.sin(t)


@njit
def scaled(log_scale, a):
    if a == 0.0:
        return 0.0
    v = log_scale + math.log(abs(a))
    if v > LOG_MAX:
        return math.copysign(math.inf, a)
    return math.copysign(math.exp(v), a)


@njit
def lift_step(rho, th, log_lam):
    """One step of the lift. Returns (rho, theta, status)."""
    c = math.cos(th)
    s = sin_exact(th)
    if rho <= LOG_MAX:
        e = math.exp(rho)
        er = e * c
        ei = e * s
    else:
        er = scaled(rho, c)
        ei = scaled(rho, s)
    u_re = -rho - er
    u_im = -th - ei
    if u_re < TAIL_FLUSH:
        t_re = 0.0
        t_im = 0.0
    elif u_re > LOG_MAX:
        if math.isfinite(u_im) and math.cos(u_im) < 0.0:
            return -LOG_SAT, th, SAT_SMALL
        return LOG_SAT, th, SAT_BIG
    else:
        m = math.exp(u_re)
        t_re = m * math.cos(u_im)
        t_im = m * sin_exact(u_im)
    rho2 = rho + log_lam + t_re
    if rho2 > LOG_SAT or (abs(t_im) > ANGLE_LIMIT and rho2 >= 0.0):
        return LOG_SAT, th, SAT_BIG
    if rho2 < -LOG_SAT or abs(t_im) > ANGLE_LIMIT:
        return -LOG_SAT, th, SAT_SMALL
    return rho2, wrap_angle(th + t_im), OK


@njit
def in_h(rho, th):
    """Re z >= 2 for z = exp(rho + i th), decided without forming exp(rho)."""
    c = math.cos(th)
    if c <= 0.0:
        return False
    return rho + math.log(c) >= LN2


@njit
def _pixel(rho, th, log_lam, budget, horizon, log_half, log_two_over, ok):
    """Return (entry_time or -1, in I_horizon, saturated); ``ok`` is scratch."""
    entry = -1
    sat = False
    in_i = True
    for k in range(budget + 1):
        if k > 0 and not sat:
            rho, th, status = lift_step(rho, th, log_lam)
            if status != OK:
                sat = True
        hit = (not sat) and in_h(rho, th)
        if hit and entry < 0:
            entry = k
        if 1 <= k <= horizon:
            ok[k] = sat or rho >= log_half[k] or rho <= log_two_over[k]
        n = k - 2
        if 1 <= n <= horizon and not (ok[n] or hit):
            in_i = False
        if k >= horizon + 2 and (entry >= 0 or sat):
            break
    return entry, in_i, sat


def _log_tables(horizon):
    n = np.arange(horizon + 1, dtype=float)
    n[0] = 1.0
    return np.log(n / 2.0), np.log(2.0 / n)


@njit
def _tile_numba(rho, th, log_lam, budget, horizon, log_half, log_two_over, entry, in_i, sat):
    ok = np.ones(horizon + 1, dtype=np.bool_)
    for i in range(rho.shape[0]):
        for j in range(rho.shape[1]):
            e, a, s = _pixel(rho[i, j], th[i, j], log_lam, budget, horizon, log_half,
                             log_two_over, ok)
            entry[i, j] = e
            in_i[i, j] = a
            sat[i, j] = s


def _wrap_np(t):
    a = np.abs(t)
    a = np.where(a > PI, a - TWO_PI * np.floor((a + PI) / TWO_PI), a)
    return np.where(t >= 0.0, a, -a)


def _sin_exact_np(t):
    return np.where((t == PI) | (t == -PI), 0.0, np.sin(t))


def _scaled_np(log_scale, a):
    with np.errstate(divide="ignore", over="ignore"):
        v = log_scale + np.log(np.abs(a))
        mag = np.where(v > LOG_MAX, np.inf, np.exp(np.minimum(v, LOG_MAX)))
    return np.where(a == 0.0, 0.0, np.copysign(mag, a))


def lift_step_np(rho, th, log_lam):
    c = np.cos(th)
    s = _sin_exact_np(th)
    small = rho <= LOG_MAX
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(np.where(small, rho, 0.0))
        er = np.where(small, e * c, _scaled_np(rho, c))
        ei = np.where(small, e * s, _scaled_np(rho, s))
        u_re = -rho - er
        u_im = -th - ei
        flush = u_re < TAIL_FLUSH
        over = u_re > LOG_MAX
        live = ~(flush | over)
        m = np.exp(np.where(live, u_re, 0.0))
        uc = np.where(live, u_im, 0.0)
        t_re = np.where(live, m * np.cos(uc), 0.0)
        t_im = np.where(live, m * _sin_exact_np(uc), 0.0)
        sat_small = over & np.isfinite(u_im) & (np.cos(np.where(np.isfinite(u_im), u_im, 0.0)) < 0.0)
        status = np.where(over, np.where(sat_small, SAT_SMALL, SAT_BIG), OK)
        rho2 = rho + log_lam + t_re
    spin = np.abs(t_im) > ANGLE_LIMIT
    status = np.where((status == OK) & ((rho2 > LOG_SAT) | (spin & (rho2 >= 0.0))), SAT_BIG, status)
    status = np.where((status == OK) & ((rho2 < -LOG_SAT) | spin), SAT_SMALL, status)
    rho2 = np.where(status == SAT_BIG, LOG_SAT, np.where(status == SAT_SMALL, -LOG_SAT, rho2))
    th2 = np.where(status == OK, _wrap_np(th + t_im), th)
    return rho2, th2, status


def in_h_np(rho, th):
    c = np.cos(th)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (c > 0.0) & (rho + np.log(np.where(c > 0.0, c, 1.0)) >= LN2)


def _tile_numpy(rho, th, log_lam, budget, horizon, log_half, log_two_over, entry, in_i, sat):
    rho = rho.astype(float).copy()
    th = th.astype(float).copy()
    shape = rho.shape
    ok = np.ones((horizon + 1,) + shape, dtype=bool)
    ent = np.full(shape, -1, dtype=np.int32)
    s = np.zeros(shape, dtype=bool)
    ii = np.ones(shape, dtype=bool)
    active = np.ones(shape, dtype=bool)
    for k in range(budget + 1):
        if k > 0:
            step = active & ~s
            if not step.any():
                break
            r2, t2, status = lift_step_np(rho[step], th[step], log_lam)
            rho[step] = r2
            th[step] = t2
            s[step] |= status != OK
        hit = ~s & in_h_np(rho, th) & active
        ent = np.where(hit & (ent < 0), k, ent)
        if 1 <= k <= horizon:
            ok[k] = s | (rho >= log_half[k]) | (rho <= log_two_over[k])
        n = k - 2
        if 1 <= n <= horizon:
            ii &= ~active | ok[n] | hit
        if k >= horizon + 2:
            active &= ~((ent >= 0) | s)
    entry[...] = ent
    in_i[...] = ii
    sat[...] = s


def orbit_tile(rho, th, log_lam, budget, horizon, backend=None):
    """Run the orbit kernel on arrays of starting log coordinates.

    Returns (entry_time int32 with -1 for none, in_I bool, saturated bool).
    """
    if budget < horizon + 2:
        raise ValueError("budget must be at least horizon + 2")
    backend = backend or default_backend()
    rho = np.ascontiguousarray(rho, dtype=float)
    th = np.ascontiguousarray(th, dtype=float)
    entry = np.empty(rho.shape, dtype=np.int32)
    in_i = np.empty(rho.shape, dtype=np.bool_)
    sat = np.empty(rho.shape, dtype=np.bool_)
    log_half, log_two_over = _log_tables(horizon)
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is disabled or missing")
        _tile_numba(rho, th, float(log_lam), int(budget), int(horizon), log_half, log_two_over,
                    entry, in_i, sat)
    elif backend == "numpy":
        _tile_numpy(rho, th, float(log_lam), int(budget), int(horizon), log_half, log_two_over,
                    entry, in_i, sat)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return entry, in_i, sat
