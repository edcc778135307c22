"""Sampling checks of the growth, half-line and channel estimates, and a
subdivision search for orbits that follow a chain of boxes.

Every check returns a ``MarginReport`` whose ``worst_margin`` is
non-negative exactly when the checked inequality held at every sample.
Samples are evaluated in a fixed order, so reports are reproducible bit for
bit.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .complex_map import MapParams, log_modulus_np, re_im_np, re_im_parts
from .errors import EmptyChannelSample, NoPointFound

EPS0 = 0.25


@dataclass
class MarginReport:
    lemma: str
    samples: int
    worst_margin: float
    worst_location: complex
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.worst_margin >= 0.0)

    def to_dict(self):
        return {
            "lemma": self.lemma,
            "params": self.params,
            "samples": self.samples,
            "worst_margin": self.worst_margin,
            "worst_location": [self.worst_location.real, self.worst_location.imag],
            "pass": self.passed,
            "details": self.details,
        }


def _worst(margins, points):
    k = int(np.argmin(margins))
    return float(margins.flat[k]), complex(points.flat[k])


# -- growth in the right half-plane -----------------------------------------------


def verify_growth(params: MapParams, x_max=60.0, y_max=60.0, samples=1_000_000):
    """min of Re f(z) / (lam Re z) - 0.7 over Re z in [2, x_max] (log-spaced)
    and |Im z| <= y_max (uniform)."""
    params.require(2.0, "the growth check")
    side = max(2, int(round(math.sqrt(samples))))
    x = np.geomspace(2.0, x_max, side)
    y = np.linspace(-y_max, y_max, side)
    X, Y = np.meshgrid(x, y)
    re, _ = re_im_np(params, X, Y)
    margin = re / (params.lam * X) - 0.7
    worst, where = _worst(margin, X + 1j * Y)
    return MarginReport("growth", int(X.size), worst, where,
                        {"lambda": params.lam, "x_max": x_max, "y_max": y_max})


# -- horizontal half-lines y = 2 n pi -----------------------------------------------


def halfline_crossing(params, y, x_lo, x_hi=10.0, points=20001):
    """First zero of Im f on the line Im z = y scanning from the right where
    Re f > 0, refined by bisection."""
    x = np.linspace(x_lo, x_hi, points)
    re, im = re_im_np(params, x, np.full_like(x, y))
    s = np.sign(im)
    change = np.nonzero((s[:-1] != s[1:]) & (re[:-1] > 0) & (re[1:] > 0))[0]
    if change.size == 0:
        return None
    i = change[-1]

    def g(t):
        return re_im_parts(params, complex(t, y))[1]

    return brentq(g, x[i], x[i + 1], xtol=1e-14)


def verify_halfline(params: MapParams, n_range=range(5, 51), points=20001, band=0.5):
    """For each y = 2 n pi: Re f - 2 on x in [-(ln y + ln 2), 10], and the
    distance of the positive-preimage crossing from -(ln y + ln(pi/2)),
    as ``band - |offset|``."""
    per_n = {}
    worst, where = math.inf, 0j
    for n in n_range:
        y = 2 * n * math.pi
        lo = -(math.log(y) + math.log(2.0))
        x = np.linspace(lo, 10.0, points)
        re, _ = re_im_np(params, x, np.full_like(x, y))
        m1, w1 = _worst(re - 2.0, x + 1j * y)
        target = -(math.log(y) + math.log(math.pi / 2))
        xc = halfline_crossing(params, y, lo, 10.0, points)
        if xc is None:
            m2, offset = -math.inf, None
        else:
            offset = xc - target
            m2 = band - abs(offset)
        per_n[n] = {"min_re_minus_2": m1, "crossing": xc, "target": target,
                    "offset": offset, "crossing_margin": m2}
        m = min(m1, m2)
        if m < worst:
            worst, where = m, (w1 if m1 <= m2 else complex(target, y))
    return MarginReport("halfline", len(per_n) * points, float(worst), where,
                        {"lambda": params.lam, "n": [min(n_range), max(n_range)], "band": band},
                        {"per_n": per_n})


def first_passing_n(params, candidates=range(1, 5), **kw):
    for n in candidates:
        if verify_halfline(params, [n], **kw).passed:
            return n
    return None


# -- channels -----------------------------------------------------------------------

AS_WRITTEN = "as_written"
SHIFTED = "shifted"
AUTO = "auto"


def channel_samples(kind, R, n=0, samples=10_000):
    """Deterministic sample of a channel: log-spaced radii (or |x|) times
    uniform transverse offsets, strictly inside the open channel."""
    side = max(2, int(round(math.sqrt(samples))))
    t = (np.arange(side) + 0.5) / side
    if kind in ("C+", "C-"):
        r = np.geomspace(1e-6 / R, 1.0 / R, side + 1)[:-1]
        a = math.atan(EPS0) * (2 * t - 1)
        if kind == "C-":
            a = math.pi + a
        Rr, A = np.meshgrid(r, a, indexing="ij")
        return Rr * np.exp(1j * A)
    lo = R * (abs(n) + 1)
    hi = min(8 * lo, 700.0)
    if hi <= lo:
        raise EmptyChannelSample(f"channel C_{n}({R}) lies beyond the sampled range")
    x = -np.geomspace(lo, hi, side + 1)[1:]
    y = n * math.pi + EPS0 * (2 * t - 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X + 1j * Y


def _pair_margin(z, lf, K, outer_over_inner):
    """min over pairs |z1| >= K |z0| of +-(log|f(z1)| - log|f(z0)|).

    With ``outer_over_inner`` the quantity is log|f(z1)/f(z0)|, otherwise
    log|f(z0)/f(z1)|. Exact over all pairs via sorting and suffix extrema.
    """
    r = np.abs(z).ravel()
    lf = lf.ravel()
    order = np.argsort(r, kind="stable")
    r, lf, zz = r[order], lf[order], z.ravel()[order]
    if outer_over_inner:
        ext = np.minimum.accumulate(lf[::-1])[::-1]
    else:
        ext = np.maximum.accumulate(lf[::-1])[::-1]
    j = np.searchsorted(r, K * r, side="left")
    ok = j < r.size
    if not ok.any():
        raise EmptyChannelSample("no sample pair with |z1/z0| >= K")
    i0 = np.nonzero(ok)[0]
    e1 = ext[j[ok]]
    vals = (e1 - lf[i0]) if outer_over_inner else (lf[i0] - e1)
    k = int(np.argmin(vals))
    return float(vals[k]), complex(zz[i0[k]])


def _channel_case(params, case, zs, blow_up, L, K):
    """Pointwise and pair margins for one channel sample.

    Blow-up channels near 0 (C+) must satisfy |f| >= L/|z|; far-left blow-up
    channels |f| >= L|z|. Collapse channels: C- needs |f| <= |z|/L, far-left
    ones |f| <= 1/(L|z|).
    """
    lz = np.log(np.abs(zs))
    lf = log_modulus_np(params, zs.real, zs.imag)
    logL = math.log(L)
    near_zero = case in ("C+", "C-")
    if blow_up:
        bound = (logL - lz) if near_zero else (logL + lz)
        point = lf - bound
    else:
        bound = (lz - logL) if near_zero else (-logL - lz)
        point = bound - lf
    # near 0 the inner point z0 has the larger image in C+ and the smaller in C-;
    # on the far left the outer point z1 has the larger image in blow-up channels
    outer_larger = (not blow_up) if near_zero else blow_up
    pm, pw = _worst(point, zs)
    qm, qw = _pair_margin(zs, lf, K, outer_larger)
    qm -= math.log(L * K)
    return pm, pw, qm, qw


def channel_parity(params, R=8.0):
    """SHIFTED when C_0 collapses (f tiny near y = 0 on the far left)."""
    x = -R * 2.0
    lf = log_modulus_np(params, np.array([x]), np.array([0.0]))[0]
    return SHIFTED if lf < math.log(abs(x)) else AS_WRITTEN


def verify_channels(params: MapParams, R, L=2.0, K=4.0, samples=10_000, n_range=range(-4, 5),
                    parity=AUTO):
    """One report per case: C+, C-, C_even, C_odd.

    With ``parity=AS_WRITTEN`` even-indexed far-left channels are checked as
    blow-up channels and odd ones as collapse channels; ``SHIFTED`` swaps
    them; ``AUTO`` picks whichever matches the sign of the map on C_0.
    """
    params.require(32.0, "the channel check")
    if R < 1 or L <= 1 or K <= 1:
        raise ValueError("need R >= 1, L > 1, K > 1")
    used = channel_parity(params, R) if parity == AUTO else parity
    if used not in (AS_WRITTEN, SHIFTED):
        raise ValueError(f"unknown parity {parity!r}")
    even_blows = used == AS_WRITTEN
    base = {"lambda": params.lam, "R": R, "L": L, "K": K, "parity": used}
    reports = []
    for case, blow in (("C+", True), ("C-", False)):
        zs = channel_samples(case, R, samples=samples)
        pm, pw, qm, qw = _channel_case(params, case, zs, blow, L, K)
        worst, where = (pm, pw) if pm <= qm else (qm, qw)
        reports.append(MarginReport(case, int(zs.size), worst, where, dict(base),
                                    {"pointwise": pm, "pair": qm}))
    for case, parity_bit in (("C_even", 0), ("C_odd", 1)):
        blow = even_blows == (parity_bit == 0)
        worst, where, count, per = math.inf, 0j, 0, {}
        for n in n_range:
            if n % 2 != parity_bit:
                continue
            zs = channel_samples("C_n", R, n, samples)
            pm, pw, qm, qw = _channel_case(params, case, zs, blow, L, K)
            per[n] = {"pointwise": pm, "pair": qm}
            count += zs.size
            for m, w in ((pm, pw), (qm, qw)):
                if m < worst:
                    worst, where = m, w
        if not per:
            raise EmptyChannelSample(f"no {case} channel in n range")
        reports.append(MarginReport(case, int(count), float(worst), where,
                                    dict(base, blow_up=blow), {"per_n": per}))
    return reports


def find_channel_radius(params, L=2.0, K=4.0, samples=10_000, start=2.0, limit=4096.0,
                        parity=AUTO):
    """Double R from ``start`` until every case passes.

    Returns (R, reports). When no R passes before the channels leave the
    sampled range, the reports of the last R tried are returned (and fail).
    """
    R, last = start, None
    while R <= limit:
        try:
            reports = verify_channels(params, R, L, K, samples, parity=parity)
        except EmptyChannelSample:
            break
        last = (R, reports)
        if all(r.passed for r in reports):
            return last
        R *= 2
    if last is None:
        raise NoPointFound("no channel radius could be sampled")
    return last


# -- shadowing ------------------------------------------------------------------------


@dataclass(frozen=True)
class LogBox:
    """{exp(rho + i theta): rho0 <= rho <= rho1, th0 <= theta <= th1}; the
    angle range may extend past +-pi."""

    rho0: float
    rho1: float
    th0: float
    th1: float

    @classmethod
    def around(cls, z, log_radius):
        z = complex(z)
        rho, th = math.log(abs(z)), math.atan2(z.imag, z.real)
        return cls(rho - log_radius, rho + log_radius, th - log_radius, th + log_radius)

    @property
    def center(self):
        return 0.5 * (self.rho0 + self.rho1), 0.5 * (self.th0 + self.th1)

    def distance(self, rho, th):
        """Sup-norm distance in log coordinates (0 inside)."""
        cr, ct = self.center
        dr = max(self.rho0 - rho, rho - self.rho1, 0.0)
        t = math.remainder(th - ct, 2 * math.pi)
        dt = max(abs(t) - 0.5 * (self.th1 - self.th0), 0.0)
        return max(dr, dt)

    def split(self):
        cr, ct = self.center
        return [LogBox(r0, r1, t0, t1)
                for r0, r1 in ((self.rho0, cr), (cr, self.rho1))
                for t0, t1 in ((self.th0, ct), (ct, self.th1))]

    def corners(self):
        return [(r, t) for r in (self.rho0, self.rho1) for t in (self.th0, self.th1)]

    def point(self, rho, th):
        return complex(math.exp(rho) * math.cos(th), math.exp(rho) * math.sin(th))

    def boundary(self, per_side=64):
        s = np.linspace(0.0, 1.0, per_side, endpoint=False)
        r0, r1, t0, t1 = self.rho0, self.rho1, self.th0, self.th1
        rho = np.concatenate([r0 + (r1 - r0) * s, np.full_like(s, r1), r1 - (r1 - r0) * s,
                              np.full_like(s, r0)])
        th = np.concatenate([np.full_like(s, t0), t0 + (t1 - t0) * s, np.full_like(s, t1),
                             t1 - (t1 - t0) * s])
        return np.exp(rho) * np.exp(1j * th)

    def to_dict(self):
        return {"rho": [self.rho0, self.rho1], "theta": [self.th0, self.th1]}


@dataclass
class BoxChain:
    boxes: list
    declared_covering: bool = False

    def __len__(self):
        return len(self.boxes)


def constant_chain(z, log_radius, n):
    return BoxChain([LogBox.around(z, log_radius)] * (n + 1))


def orbit_chain(params, z, n, log_radius=0.2):
    boxes = []
    rho, th = math.log(abs(z)), math.atan2(complex(z).imag, complex(z).real)
    for k in range(n + 1):
        boxes.append(LogBox(rho - log_radius, rho + log_radius, th - log_radius, th + log_radius))
        rho, th, status = kernels.lift_step(rho, th, params.log_lam)
        if status != kernels.OK and k < n:
            raise NoPointFound("the orbit leaves double range before the chain ends")
    return BoxChain(boxes, declared_covering=True)


def _orbit(params, rho, th, steps):
    out = [(rho, th)]
    for _ in range(steps):
        rho, th, status = kernels.lift_step(rho, th, params.log_lam)
        if status != kernels.OK:
            out.extend([(math.inf, 0.0)] * (steps + 1 - len(out)))
            break
        out.append((rho, th))
    return out


def _winding(curve, p):
    v = curve - p
    ang = np.angle(np.append(v[1:], v[:1]) / v)
    return int(round(ang.sum() / (2 * math.pi)))


def check_covering(params, chain: BoxChain, per_side=256):
    """For each k, whether the image of E_k's boundary winds around every
    corner of E_{k+1} (a sampled stand-in for f(E_k) containing E_{k+1})."""
    out = []
    for a, b in zip(chain.boxes[:-1], chain.boxes[1:]):
        z = a.boundary(per_side)
        re, im = re_im_np(params, z.real, z.imag)
        img = re + 1j * im
        if not np.all(np.isfinite(img)):
            out.append(False)
            continue
        out.append(all(_winding(img, b.point(r, t)) != 0 for r, t in b.corners()))
    return out


def shadow_orbit(params: MapParams, chain: BoxChain, depth=60, tol=1e-8):
    """A point z of E_0 with f^k(z) in E_k (inflated by ``tol`` in log
    coordinates) for k = 0..N, by depth-first subdivision of E_0.

    Children are visited in a fixed order and pruned when the orbit of their
    center misses some E_k by more than twice the spread of the child's
    corner orbits, so the result is deterministic.
    """
    boxes = chain.boxes
    n = len(boxes) - 1

    def fits(orbit, slack):
        return all(boxes[k].distance(*orbit[k]) <= slack[k] + tol for k in range(n + 1))

    stack = [(boxes[0], 0)]
    while stack:
        box, d = stack.pop()
        c = box.center
        orb = _orbit(params, c[0], c[1], n)
        if fits(orb, [0.0] * (n + 1)):
            return box.point(*c)
        if d >= depth:
            continue
        kids = []
        for child in box.split():
            cc = child.center
            corb = _orbit(params, cc[0], cc[1], n)
            corner_orbits = [_orbit(params, r, t, n) for r, t in child.corners()]
            slack = []
            for k in range(n + 1):
                r0, t0 = corb[k]
                s = 0.0
                for co in corner_orbits:
                    r, t = co[k]
                    s = max(s, abs(r - r0), abs(math.remainder(t - t0, 2 * math.pi)))
                slack.append(2.0 * s)
            if fits(corb, slack):
                kids.append(child)
        stack.extend((k, d + 1) for k in reversed(kids))
    raise NoPointFound(f"subdivision to depth {depth} found no shadowing point")


def verify_shadow(params, chain, z, tol=1e-8):
    """Post-hoc check of a shadowing point by direct iteration."""
    rho, th = math.log(abs(z)), math.atan2(z.imag, z.real)
    orb = _orbit(params, rho, th, len(chain) - 1)
    return all(b.distance(*o) <= tol for b, o in zip(chain.boxes, orb))
