"""Implicit curves: preimages of the positive real axis, the barrier set and
the circle / tongue approximants, traced by marching squares.

Each residual is sampled on a grid twice as fine as the cell grid. A cell
edge whose three samples change sign twice holds two nearby branches; the
tracer then raises ``ResolutionTooCoarse`` (or skips those cells when asked
to). Crossing points are refined by bisection along their edge, and the
midpoint sample decides the connection inside saddle cells.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .complex_map import MapParams, phase_np
from .errors import DomainError, ResolutionTooCoarse

PREIMAGE_RPLUS = "preimage_rplus"
BARRIER = "barrier"
A_N_CIRCLE = "a_n_circle"
A_N_PRIME = "a_n_prime"

EPS0 = 0.25
REL_TOL = 1e-10
CSV_HEADER = ("kind", "branch", "x", "y", "residual")


@dataclass
class CurvePolyline:
    points: np.ndarray = field(repr=False)
    kind: str
    branch: Optional[int] = None
    residuals: Optional[np.ndarray] = field(default=None, repr=False)
    closed: bool = False

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points.real

    @property
    def y(self):
        return self.points.imag


# -- residuals -----------------------------------------------------------------


class _Residual:
    """sign(value) drives the tracer; ``error`` is the reported residual."""

    tol = 1e-10

    def value(self, x, y):
        raise NotImplementedError

    def valid(self, x, y):
        return np.ones(np.shape(x), dtype=bool)

    def error(self, x, y):
        return np.abs(self.value(x, y))


class _PreimageResidual(_Residual):
    """Im f has the sign of sin(arg f); the relative residual is
    |Im f| / max(1, |Re f|), computed from log|f| without overflow."""

    def __init__(self, params):
        self.params = params

    def value(self, x, y):
        phi, _ = phase_np(self.params, x, y)
        return np.sin(phi)

    def valid(self, x, y):
        phi, _ = phase_np(self.params, x, y)
        return np.cos(phi) > 0.0

    def error(self, x, y):
        phi, lm = phase_np(self.params, x, y)
        with np.errstate(divide="ignore"):
            log_im = lm + np.log(np.abs(np.sin(phi)))
            log_re = lm + np.log(np.abs(np.cos(phi)))
        return np.exp(np.minimum(log_im - np.maximum(0.0, log_re), 700.0))


class _BarrierResidual(_Residual):
    def value(self, x, y):
        return x * np.sin(y) + y * np.cos(y)


class _TongueResidual(_Residual):
    tol = 1e-12

    def __init__(self, n):
        self.n = n

    def value(self, x, y):
        with np.errstate(over="ignore"):
            return np.sin(y + np.arctan(y / x)) - np.exp(x) * np.hypot(x, y) * (self.n * math.pi)


# -- marching squares ------------------------------------------------------------


def _nodes(window, resolution):
    x0, x1, y0, y1 = (float(v) for v in window)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty window {window}")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 cells per axis")
    return np.linspace(x0, x1, 2 * nx + 1), np.linspace(y0, y1, 2 * ny + 1), nx, ny


def _bisect(res, a, b, sa, iters=64):
    """Refine crossings on segments [a, b] (complex) where sign(a) == sa.

    A point stops as soon as its residual is within ``res.tol`` or its
    bracket can no longer be halved.
    """
    a, b = a.copy(), b.copy()
    out = 0.5 * (a + b)
    active = np.arange(a.size)
    for _ in range(iters):
        if active.size == 0:
            break
        aa, bb = a[active], b[active]
        m = 0.5 * (aa + bb)
        out[active] = m
        stop = (m == aa) | (m == bb) | (res.error(m.real, m.imag) <= res.tol)
        sm = res.value(m.real, m.imag) >= 0.0
        left = sm == sa[active]
        a[active] = np.where(left, m, aa)
        b[active] = np.where(left, bb, m)
        active = active[~stop]
    return out


def _march(res, window, resolution, kind, on_coarse="raise"):
    xs, ys, nx, ny = _nodes(window, resolution)
    X, Y = np.meshgrid(xs, ys)
    with np.errstate(all="ignore"):
        F = res.value(X, Y)
    finite = np.isfinite(F)
    S = F >= 0.0

    # horizontal edges: coarse nodes (j, i)-(j, i+1); vertical: (j, i)-(j+1, i)
    hs0, hsm, hs1 = S[::2, 0:-1:2], S[::2, 1::2], S[::2, 2::2]
    vs0, vsm, vs1 = S[0:-1:2, ::2], S[1::2, ::2], S[2::2, ::2]
    hfin = finite[::2, 0:-1:2] & finite[::2, 1::2] & finite[::2, 2::2]
    vfin = finite[0:-1:2, ::2] & finite[1::2, ::2] & finite[2::2, ::2]
    hcross = (hs0 != hs1) & hfin
    vcross = (vs0 != vs1) & vfin
    hmulti = (hs0 == hs1) & (hsm != hs0) & hfin
    vmulti = (vs0 == vs1) & (vsm != vs0) & vfin

    # per cell (j, i), j < ny, i < nx: edges B, T, L, R
    cflags = np.stack([hcross[:-1, :], hcross[1:, :], vcross[:, :-1], vcross[:, 1:]], axis=-1)
    bad = (hmulti[:-1, :] | hmulti[1:, :] | vmulti[:, :-1] | vmulti[:, 1:])
    cfin = (finite[0:-1:2, 0:-1:2] & finite[0:-1:2, 2::2] & finite[2::2, 0:-1:2]
            & finite[2::2, 2::2] & finite[1::2, 1::2])
    bad &= cfin
    if bad.any():
        cells = [tuple(int(v) for v in c) for c in np.argwhere(bad)]
        if on_coarse == "raise":
            raise ResolutionTooCoarse(
                f"{len(cells)} cells hold more than one branch; increase the resolution", cells)
        if on_coarse != "skip":
            raise ValueError("on_coarse must be 'raise' or 'skip'")
    use = cfin & ~bad & cflags.any(axis=-1)

    nh = (ny + 1) * nx
    jj, ii = np.nonzero(use)
    ids = np.stack([jj * nx + ii, (jj + 1) * nx + ii,
                    nh + jj * (nx + 1) + ii, nh + jj * (nx + 1) + ii + 1], axis=-1)
    flags = cflags[jj, ii]
    count = flags.sum(axis=-1)
    two = count == 2
    srt = np.sort(np.where(flags[two], ids[two], np.iinfo(np.int64).max), axis=-1)
    segs = [srt[:, :2]]
    four = count == 4
    if four.any():
        j4, i4, id4 = jj[four], ii[four], ids[four]
        s00 = S[2 * j4, 2 * i4]
        sc = S[2 * j4 + 1, 2 * i4 + 1]
        joined = sc == s00
        B, T, L, R = id4[:, 0], id4[:, 1], id4[:, 2], id4[:, 3]
        segs.append(np.stack([B, np.where(joined, R, L)], axis=-1))
        segs.append(np.stack([np.where(joined, L, R), T], axis=-1))
    segs = np.concatenate(segs, axis=0) if segs else np.zeros((0, 2), dtype=np.int64)

    # crossing vertices, bracketed by the half edge holding the sign change
    verts = np.unique(segs)
    is_h = verts < nh
    hv, vv = verts[is_h], verts[~is_h] - nh
    hj, hi = hv // nx, hv % nx
    vj, vi = vv // (nx + 1), vv % (nx + 1)
    a = np.empty(verts.size, dtype=complex)
    b = np.empty(verts.size, dtype=complex)
    sa = np.empty(verts.size, dtype=bool)
    first = S[2 * hj, 2 * hi] != S[2 * hj, 2 * hi + 1]
    ci = 2 * hi + np.where(first, 0, 1)
    a[is_h] = xs[ci] + 1j * ys[2 * hj]
    b[is_h] = xs[ci + 1] + 1j * ys[2 * hj]
    sa[is_h] = S[2 * hj, ci]
    first = S[2 * vj, 2 * vi] != S[2 * vj + 1, 2 * vi]
    cj = 2 * vj + np.where(first, 0, 1)
    a[~is_h] = xs[2 * vi] + 1j * ys[cj]
    b[~is_h] = xs[2 * vi] + 1j * ys[cj + 1]
    sa[~is_h] = S[cj, 2 * vi]
    with np.errstate(all="ignore"):
        pts = _bisect(res, a, b, sa)
        ok = res.valid(pts.real, pts.imag)
    index = {int(v): k for k, v in enumerate(verts)}
    keep = ok[np.searchsorted(verts, segs[:, 0])] & ok[np.searchsorted(verts, segs[:, 1])]
    return _stitch(segs[keep], index, pts, res, kind)


def _stitch(segs, index, pts, res, kind):
    adj = {}
    for a, b in segs.tolist():
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    chains = []

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [v for v in adj[cur] if v != prev and v not in seen]
            if not nxt:
                closed = len(chain) > 2 and start in adj[cur] and prev is not None
                return chain, closed
            prev, cur = cur, min(nxt)
            chain.append(cur)
            seen.add(cur)

    ends = sorted(v for v, nb in adj.items() if len(nb) == 1)
    for v in ends + sorted(adj):
        if v not in seen:
            chains.append(walk(v))
    out = []
    for chain, closed in chains:
        p = pts[[index[v] for v in chain]]
        with np.errstate(all="ignore"):
            err = res.error(p.real, p.imag)
        out.append(CurvePolyline(p, kind, None, err, closed))
    return out


# -- public tracers ------------------------------------------------------------------


def _check_window_avoids_zero(window, resolution):
    x0, x1, y0, y1 = window
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    dx, dy = (x1 - x0) / nx, (y1 - y0) / ny
    if x0 - dx < 0 < x1 + dx and y0 - dy < 0 < y1 + dy:
        raise DomainError("window must avoid z = 0 by at least one cell")


def preimage_branch(params, z):
    """Index k with arg f(z) = -2 pi k along the branch through z."""
    phi, _ = phase_np(params, np.real(z), np.imag(z))
    return int(np.round(-np.median(phi) / (2 * math.pi)))


def trace_preimage_rplus(params: MapParams, window, resolution, on_coarse="raise"):
    """Curves where f is real and positive.

    Branches carry the index k = -arg f / (2 pi) along them; near 0 an
    upper-half-plane branch k lies between the circles A_{2k} and A_{2k+1}.
    """
    _check_window_avoids_zero(window, resolution)
    res = _PreimageResidual(params)
    lines = _march(res, window, resolution, PREIMAGE_RPLUS, on_coarse)
    for ln in lines:
        ln.branch = preimage_branch(params, ln.points)
    return lines


def barrier_branch(points):
    """n with theta + n pi = -r sin(theta) along a barrier curve."""
    th = np.arctan2(points.imag, points.real)
    return int(np.round(-np.median(th + points.imag) / math.pi))


def polar_residual(points, n):
    """|theta + n pi + r sin theta|, modulo 2 pi since atan2 jumps on the
    negative axis."""
    th = np.arctan2(points.imag, points.real)
    v = th + n * math.pi + np.abs(points) * np.sin(th)
    return np.abs(v - 2 * math.pi * np.round(v / (2 * math.pi)))


def trace_barrier(window, resolution, on_coarse="raise"):
    """Curves x sin y + y cos y = 0."""
    lines = _march(_BarrierResidual(), window, resolution, BARRIER, on_coarse)
    for ln in lines:
        ln.branch = barrier_branch(ln.points)
    return lines


def barrier_y_at(x, m, tol=1e-14):
    """The barrier point near y = m pi on the vertical line Re z = x < -1."""
    if m == 0:
        return 0.0
    g = lambda y: x * math.sin(y) + y * math.cos(y)  # noqa: E731
    lo, hi = m * math.pi - 0.49 * math.pi, m * math.pi + 0.49 * math.pi
    return brentq(g, min(lo, hi), max(lo, hi), xtol=tol)


@dataclass(frozen=True)
class ChannelId:
    tag: str  # PLUS, MINUS or HORIZ
    n: Optional[int]
    R: float


def channel_membership(z, R) -> Optional[ChannelId]:
    if R < 1:
        raise ValueError("channels need R >= 1")
    z = complex(z)
    x, y = z.real, z.imag
    if abs(z) < 1.0 / R and abs(y) < EPS0 * abs(x):
        if x > 0:
            return ChannelId("PLUS", None, R)
        if x < 0:
            return ChannelId("MINUS", None, R)
    n = round(y / math.pi)
    if abs(y - n * math.pi) < EPS0 and x < -R * (abs(n) + 1):
        return ChannelId("HORIZ", int(n), R)
    return None


def approx_A_n(n, points=721) -> CurvePolyline:
    """The circle through 0 with center i p, p = 1/(2 n pi)."""
    if n == 0:
        raise ValueError("n must be nonzero")
    p = 1.0 / (2 * n * math.pi)
    t = np.linspace(0.0, 2 * math.pi, points)
    pts = 1j * p + abs(p) * np.exp(1j * t)
    return CurvePolyline(pts, A_N_CIRCLE, int(n), None, True)


def approx_A_n_prime(n, window, resolution, on_coarse="raise") -> CurvePolyline:
    """The longest traced piece of sin(y + atan(y/x)) = e^x |z| n pi in a
    left-half-plane window."""
    if n == 0:
        raise ValueError("n must be nonzero")
    if window[1] >= 0:
        raise DomainError("the window must lie in the left half-plane")
    lines = _march(_TongueResidual(n), window, resolution, A_N_PRIME, on_coarse)
    if not lines:
        raise ResolutionTooCoarse("no tongue found in the window")
    best = max(lines, key=len)
    best.branch = int(n)
    return best


def rightmost(line: CurvePolyline):
    k = int(np.argmax(line.x))
    return complex(line.points[k])


def tongue_tip(n, m=0):
    """Rightmost point of the tongue between y = m pi and (m + 1) pi, by
    maximizing x over the implicit curve (independent of the tracer)."""
    res = _TongueResidual(n)
    hi = -1e-9

    def x_of(y):
        g = lambda x: float(res.value(np.float64(x), np.float64(y)))  # noqa: E731
        lo = -60.0
        if g(lo) * g(hi) > 0:
            return -math.inf
        return brentq(g, lo, hi, xtol=1e-13)

    out = minimize_scalar(lambda y: -x_of(y), bounds=(m * math.pi + 0.05, (m + 1) * math.pi - 0.05),
                          method="bounded", options={"xatol": 1e-10})
    return complex(x_of(out.x), out.x)


def hausdorff_to_circle(line_points, center, radius):
    """One-sided Hausdorff distance from points to a circle, over the radius."""
    d = np.abs(np.abs(np.asarray(line_points) - center) - radius)
    return float(d.max() / radius)


def a_n_distance(params, n, resolution=2049):
    """Relative distance from the traced branch bracketed by A_n to A_n.

    The traced branch k = n // 2 lies between A_{2k} and A_{2k+1}. The
    window is scaled with p = 1/(2 n pi) and excludes a disc of radius p/2
    about 0, where neighbouring branches accumulate.
    """
    p = 1.0 / (2 * n * math.pi)
    window = (-1.5 * p, 1.5 * p, 0.01 * p, 2.5 * p)
    k = n // 2
    lines = trace_preimage_rplus(params, window, resolution, on_coarse="skip")
    pts = np.concatenate([ln.points for ln in lines if ln.branch == k] or [np.zeros(0, complex)])
    pts = pts[np.abs(pts) >= 0.5 * p]
    if pts.size == 0:
        raise ResolutionTooCoarse(f"branch {k} not found near A_{n}")
    return hausdorff_to_circle(pts, 1j * p, p)


def unit_circle_gap(samples=100_000):
    """min over theta in (0, pi) of the distance of
    theta - exp(-cos theta) sin(sin theta + theta) to the nearest multiple of pi."""
    th = np.linspace(0.0, math.pi, samples + 2)[1:-1]
    v = th - np.exp(-np.cos(th)) * np.sin(np.sin(th) + th)
    gap = np.abs(v - math.pi * np.round(v / math.pi))
    k = int(np.argmin(gap))
    return float(gap[k]), float(th[k])


def curves_rows(lines):
    for ln in lines:
        res = ln.residuals if ln.residuals is not None else np.zeros(len(ln))
        br = "" if ln.branch is None else ln.branch
        for z, r in zip(ln.points, res):
            yield (ln.kind, br, float(z.real), float(z.imag), float(r))


def segment_cells(lines, window, resolution):
    """Set of (row, col) cells visited by the polylines' vertices."""
    x0, x1, y0, y1 = window
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    out = set()
    for ln in lines:
        c = np.clip(((ln.x - x0) / (x1 - x0) * nx).astype(int), 0, nx - 1)
        r = np.clip(((ln.y - y0) / (y1 - y0) * ny).astype(int), 0, ny - 1)
        out.update(zip(r.tolist(), c.tolist()))
    return out
