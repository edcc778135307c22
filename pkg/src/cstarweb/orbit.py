"""Orbit classification, H-entry times and classification rasters."""
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from ._accel import default_backend, thread_count
from .complex_map import MapParams, ZExpFixture, _check_point
from .grids import GridSpec, RasterSet

H_ENTRY_TIME = "h-entry"
I_COMPLEMENT = "i-complement"
LAYERS = (H_ENTRY_TIME, I_COMPLEMENT)

DEFAULT_BUDGET = 64
DEFAULT_HORIZON = 12


class Cond(enum.Flag):
    NONE = 0
    BIG = kernels.BIG
    SMALL = kernels.SMALL
    H2 = kernels.H2
    SAT = kernels.SAT


class Classification(str, enum.Enum):
    ABSORBED = "ABSORBED"
    IN_I_HORIZON = "IN_I_HORIZON"
    ESCAPING_UNCLASSIFIED = "ESCAPING_UNCLASSIFIED"
    BOUNDED_OR_UNKNOWN = "BOUNDED_OR_UNKNOWN"


@dataclass
class OrbitRecord:
    """Per-step log-modulus and satisfied conditions for n = 0..budget_used.

    ``steps[n] = (log|f^n(z)|, Cond)``. Saturated steps carry +-1e300 and the
    SAT flag; BIG/SMALL are set on them according to the sign.
    """

    steps: list = field(repr=False)
    first_h_entry: Optional[int]
    classification: Classification
    budget_used: int
    horizon: int
    in_i_horizon: bool

    def to_dict(self):
        return {
            "steps": [[lm, int(c.value)] for lm, c in self.steps],
            "first_h_entry": self.first_h_entry,
            "classification": self.classification.value,
            "budget_used": self.budget_used,
            "horizon": self.horizon,
            "in_i_horizon": self.in_i_horizon,
        }


def _fixture_step(g):
    """Log-coordinate step for a map given only through its lift."""

    def step(rho, th, _log_lam):
        try:
            w = g.lift(complex(rho, th))
        except OverflowError:
            return kernels.LOG_SAT, th, kernels.SAT_BIG
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return kernels.LOG_SAT, th, kernels.SAT_BIG
        if abs(w.real) > kernels.LOG_SAT:
            return math.copysign(kernels.LOG_SAT, w.real), th, (
                kernels.SAT_BIG if w.real > 0 else kernels.SAT_SMALL)
        return w.real, math.remainder(w.imag, 2 * math.pi), kernels.OK

    return step


def _stepper(params):
    if isinstance(params, ZExpFixture):
        return _fixture_step(params), 0.0
    params.require(2.0, "orbit classification")
    return kernels.lift_step, params.log_lam


def _orbit_states(params, z, budget, stop):
    """Yield (k, rho, theta, saturated) for k = 0.. until ``stop`` says so."""
    z = _check_point(z)
    step, log_lam = _stepper(params)
    rho, th = math.log(abs(z)), math.atan2(z.imag, z.real)
    sat = False
    for k in range(budget + 1):
        if k > 0 and not sat:
            rho, th, status = step(rho, th, log_lam)
            sat = status != kernels.OK
        yield k, rho, th, sat
        if stop(k, rho, th, sat):
            return


def classify_orbit(params, z, budget=DEFAULT_BUDGET, horizon=DEFAULT_HORIZON) -> OrbitRecord:
    if budget < horizon + 2:
        raise ValueError("budget must be at least horizon + 2")
    entry = None
    left_h = False
    states = []

    def stop(k, rho, th, sat):
        return k >= horizon + 2 and (sat or (entry is not None and k >= entry + horizon))

    for k, rho, th, sat in _orbit_states(params, z, budget, stop):
        hit = (not sat) and kernels.in_h(rho, th)
        if hit and entry is None:
            entry = k
        elif entry is not None and not hit:
            left_h = True
        states.append((rho, sat, hit))

    used = len(states) - 1
    steps = []
    for n, (rho, sat, _) in enumerate(states):
        c = Cond.NONE
        if sat:
            c |= Cond.SAT
        if n >= 1:
            if rho >= math.log(n / 2.0):
                c |= Cond.BIG
            if rho <= math.log(2.0 / n):
                c |= Cond.SMALL
        if n + 2 <= used and states[n + 2][2]:
            c |= Cond.H2
        steps.append((float(rho), c))

    in_i = all(steps[n][1] & (Cond.BIG | Cond.SMALL | Cond.H2) for n in range(1, horizon + 1))
    saturated = states[-1][1]
    if entry is not None and not left_h:
        cls = Classification.ABSORBED
    elif saturated:
        cls = Classification.ESCAPING_UNCLASSIFIED
    elif in_i:
        cls = Classification.IN_I_HORIZON
    else:
        cls = Classification.BOUNDED_OR_UNKNOWN
    return OrbitRecord(steps, entry, cls, used, horizon, in_i)


def first_entry_time(params, z, budget=DEFAULT_BUDGET) -> Optional[int]:
    """Least n <= budget with Re f^n(z) >= 2, or None."""
    for k, rho, th, sat in _orbit_states(params, z, budget, lambda k, r, t, s: s):
        if not sat and kernels.in_h(rho, th):
            return k
    return None


# -- rasters ---------------------------------------------------------------

GRAY = (160, 160, 160)
SENTINEL = (0, 0, 255)
I_COLOR = (40, 40, 40)
COMPLEMENT_COLOR = (255, 255, 255)


def entry_palette():
    """16 shades of red, darkest for n = 0 mod 16."""
    k = np.arange(16)
    return np.stack([150 + 7 * k, 13 * k, 13 * k], axis=1).astype(np.uint8)


@dataclass
class OrbitGrid:
    """Per-pixel kernel output for a grid."""

    grid: GridSpec
    entry: np.ndarray
    in_i: np.ndarray
    saturated: np.ndarray
    invalid: np.ndarray
    budget: int
    horizon: int


def compute_grid(params: MapParams, grid: GridSpec, budget=DEFAULT_BUDGET, horizon=DEFAULT_HORIZON,
                 threads=None, backend=None, tile_rows=64) -> OrbitGrid:
    """Evaluate the orbit kernel at every pixel center, tile by tile.

    Tiles are disjoint row bands and every pixel is independent, so the
    result does not depend on the tile size or the number of threads.
    """
    params.require(2.0, "rendering")
    backend = backend or default_backend()
    h, w = grid.shape
    entry = np.empty((h, w), dtype=np.int32)
    in_i = np.empty((h, w), dtype=bool)
    sat = np.empty((h, w), dtype=bool)
    invalid = np.zeros((h, w), dtype=bool)

    def run(r0):
        rows = slice(r0, min(r0 + tile_rows, h))
        rho, th = grid.log_coords(rows)
        bad = ~np.isfinite(rho)
        rho = np.where(bad, 0.0, rho)
        e, a, s = kernels.orbit_tile(rho, th, params.log_lam, budget, horizon, backend)
        entry[rows], in_i[rows], sat[rows] = e, a & ~bad, s
        invalid[rows] = bad

    starts = range(0, h, tile_rows)
    n = thread_count(threads)
    if n == 1:
        for r0 in starts:
            run(r0)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            list(pool.map(run, starts))
    return OrbitGrid(grid, entry, in_i, sat, invalid, budget, horizon)


def entry_image(og: OrbitGrid):
    pal = entry_palette()
    img = np.empty(og.entry.shape + (3,), dtype=np.uint8)
    img[...] = GRAY
    has = og.entry >= 0
    img[has] = pal[og.entry[has] % 16]
    img[og.invalid] = SENTINEL
    return img


def complement_raster(og: OrbitGrid) -> RasterSet:
    """Pixels NOT in I_horizon."""
    return RasterSet(og.grid, ~og.in_i)


def raster_image(mask, on=I_COLOR, off=COMPLEMENT_COLOR):
    img = np.empty(mask.shape + (3,), dtype=np.uint8)
    img[...] = off
    img[mask] = on
    return img


def render(params: MapParams, grid: GridSpec, budget=DEFAULT_BUDGET, horizon=DEFAULT_HORIZON,
           layer=H_ENTRY_TIME, threads=None, backend=None):
    """H_ENTRY_TIME gives an (H, W, 3) uint8 image; I_COMPLEMENT a RasterSet."""
    og = compute_grid(params, grid, budget, horizon, threads=threads, backend=backend)
    if layer == H_ENTRY_TIME:
        return entry_image(og)
    if layer == I_COMPLEMENT:
        return complement_raster(og)
    raise ValueError(f"unknown layer {layer!r}; expected one of {LAYERS}")
