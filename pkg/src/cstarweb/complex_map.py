"""Evaluation of f(z) = lam * z * exp(exp(-z)/z) on the punctured plane.

Points are plain Python ``complex`` numbers. Log-coordinate points are also
``complex``: ``w = log|z| + i arg z``, so that ``z = exp(w)``.

Every scalar routine is written so that replacing ``z`` by its conjugate
only flips signs of exactly-computed quantities; this makes the conjugation
symmetry f(conj z) = conj f(z) hold bit for bit.
"""
import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, MapOverflow

LOG_MAX = 709.0  # exp() overflows just above 709.78
LOG_MIN = -708.0  # below this the result is subnormal
TAIL_FLUSH = -745.0  # exp(x) == 0.0 for x below this


@dataclass(frozen=True)
class MapParams:
    lam: float = 32.0

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0:
            raise ValueError(f"lambda must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def log_lam(self):
        return math.log(self.lam)

    def require(self, minimum, what="this operation"):
        if self.lam < minimum:
            raise ValueError(f"{what} requires lambda >= {minimum}, got {self.lam}")
        return self

    def lift(self, w):
        return evaluate_log(self, w)


class XiZeta(NamedTuple):
    xi: float
    zeta: float


def _scaled(log_scale, a):
    """Return exp(log_scale) * a without forming exp(log_scale) alone."""
    if a == 0.0:
        return 0.0 * a
    try:
        mag = math.exp(log_scale + math.log(abs(a)))
    except OverflowError:
        mag = math.inf
    return math.copysign(mag, a)


def _check_point(z):
    z = complex(z)
    if z == 0:
        raise DomainError("z = 0 is not in the punctured plane")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite point {z!r}")
    return z


def xi_zeta(z) -> XiZeta:
    """Real and imaginary parts of exp(-z)/z."""
    z = _check_point(z)
    x, y = z.real, z.imag
    cy, sy = math.cos(y), math.sin(y)
    a = x * cy - y * sy
    b = x * sy + y * cy
    log_q = -x - 2.0 * math.log(math.hypot(x, y))
    if log_q < LOG_MAX:
        q = math.exp(log_q)
        return XiZeta(q * a, -(q * b))
    return XiZeta(_scaled(log_q, a), -_scaled(log_q, b))


def log_modulus(params: MapParams, z) -> float:
    """log|f(z)|; finite or +-inf, never raises for z != 0."""
    z = _check_point(z)
    xi = xi_zeta(z).xi
    return params.log_lam + math.log(abs(z)) + xi


def _guard(lm):
    if lm > LOG_MAX:
        raise MapOverflow("overflow", lm)
    if lm < LOG_MIN:
        raise MapOverflow("underflow", lm)


def re_im_parts(params: MapParams, z):
    """(Re f, Im f, XiZeta) using the xi/zeta decomposition."""
    z = _check_point(z)
    xz = xi_zeta(z)
    x, y = z.real, z.imag
    _guard(params.log_lam + math.log(abs(z)) + xz.xi)
    m = params.lam * math.exp(xz.xi)
    cz, sz = math.cos(xz.zeta), math.sin(xz.zeta)
    re = m * (x * cz - y * sz)
    im = m * (x * sz + y * cz)
    return re, im, xz


def evaluate(params: MapParams, z) -> complex:
    re, im, _ = re_im_parts(params, z)
    return complex(re, im)


def modulus_formula(params: MapParams, z) -> float:
    """|f(z)| = lam |z| exp(exp(-x) (x cos y - y sin y) / |z|^2)."""
    z = _check_point(z)
    x, y = z.real, z.imag
    expo = math.exp(-x) / (x * x + y * y) * (x * math.cos(y) - y * math.sin(y))
    return params.lam * abs(z) * math.exp(expo)


def _exp_parts(w):
    """exp(w) as (re, im) with signed infinities instead of OverflowError."""
    rho, th = w.real, w.imag
    if rho <= LOG_MAX:
        e = cmath.exp(w)
        return e.real, e.imag
    c, s = math.cos(th), math.sin(th)
    return _scaled(rho, c), _scaled(rho, s)


def evaluate_log(params: MapParams, w) -> complex:
    """Lift of f through exp: w + log(lam) + exp(-w - exp(w))."""
    w = complex(w)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise ValueError(f"non-finite lift point {w!r}")
    er, ei = _exp_parts(w)
    u_re = -w.real - er
    u_im = -w.imag - ei
    if u_re < TAIL_FLUSH:
        tail = 0j
    elif u_re > LOG_MAX:
        raise MapOverflow("overflow", math.inf)
    else:
        tail = cmath.exp(complex(u_re, u_im))
    return complex(w.real + params.log_lam + tail.real, w.imag + tail.imag)


def derivative(params: MapParams, z) -> complex:
    """f'(z) = lam exp(e^{-z}/z) (1 - e^{-z} (z + 1) / z)."""
    z = _check_point(z)
    xz = xi_zeta(z)
    _guard(params.log_lam + xz.xi)
    q = complex(xz.xi, xz.zeta)
    return params.lam * cmath.exp(q) * (1.0 - q * (z + 1.0))


def _scan_roots(g, lo, hi, points, xtol):
    grid = np.geomspace(lo, hi, points)
    vals = [g(t) for t in grid]
    roots = []
    for a, b, ga, gb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if ga == 0.0:
            roots.append(float(a))
        elif ga * gb < 0:
            roots.append(bisect(g, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))
    return roots


def fixed_points_negative_axis(params: MapParams, tol=1e-12):
    """Real fixed points x < 0, in decreasing order (closest to 0 first).

    With x = -t the fixed-point equation is exp(t) = t log(lam); in log form
    g(t) = t - log(t) - log(log(lam)) is convex with its minimum at t = 1.
    """
    if params.lam <= 1:
        raise ValueError("fixed points on the negative axis need lambda > 1")
    loglog = math.log(params.log_lam)

    def g(t):
        return t - math.log(t) - loglog

    gmin = g(1.0)
    if abs(gmin) <= 1e-12:
        return [-1.0]
    if gmin > 0:
        return []
    roots = _scan_roots(g, 1e-12, 1e4, 4001, tol)
    return sorted((-t for t in roots), reverse=True)


def critical_point_positive_axis(tol=1e-14):
    """The unique positive root of exp(x) = 1 + 1/x."""
    roots = _scan_roots(lambda x: math.expm1(x) - 1.0 / x, 1e-3, 10.0, 1001, tol)
    return roots[0]


# -- vectorized forms (arrays of x, y) --------------------------------------


def xi_zeta_np(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        cy, sy = np.cos(y), np.sin(y)
        a = x * cy - y * sy
        b = x * sy + y * cy
        log_q = -x - 2.0 * np.log(np.hypot(x, y))
        small = log_q < LOG_MAX
        if np.all(small):
            q = np.exp(log_q)
            return q * a, -(q * b)
        q = np.exp(np.where(small, log_q, 0.0))
        xi = np.where(small, q * a, np.sign(a) * np.exp(log_q + np.log(np.abs(a))))
        zeta = np.where(small, -(q * b), -np.sign(b) * np.exp(log_q + np.log(np.abs(b))))
        xi = np.where(a == 0, 0.0, xi)
        zeta = np.where(b == 0, 0.0, zeta)
    return xi, zeta


def log_modulus_np(params: MapParams, x, y):
    xi, _ = xi_zeta_np(x, y)
    return params.log_lam + np.log(np.hypot(x, y)) + xi


def phase_np(params: MapParams, x, y):
    """Unreduced argument of f: atan2(y, x) + zeta, with log|f|.

    f lies on the positive real axis exactly when the phase is a multiple
    of 2 pi; sin(phase) has the sign of Im f and cos(phase) that of Re f.
    """
    xi, zeta = xi_zeta_np(x, y)
    lm = params.log_lam + np.log(np.hypot(x, y)) + xi
    return np.arctan2(y, x) + zeta, lm


def re_im_np(params: MapParams, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xi, zeta = xi_zeta_np(x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        m = params.lam * np.exp(xi)
        cz, sz = np.cos(zeta), np.sin(zeta)
        return m * (x * cz - y * sz), m * (x * sz + y * cz)


class ZExpFixture:
    """g(z) = z exp(z - 1), with lift w + exp(w) - 1 + 2 pi i * shift.

    1 is a fixed point of g while the shifted lift sends 0 to 2 pi i n,
    so escaping points of a lift need not project to escaping points.
    """

    def __init__(self, shift=1):
        self.shift = shift

    def evaluate(self, z):
        z = _check_point(z)
        return z * cmath.exp(z - 1.0)

    def lift(self, w):
        w = complex(w)
        return w + cmath.exp(w) - 1.0 + 2j * math.pi * self.shift
