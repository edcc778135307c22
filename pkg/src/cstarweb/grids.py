"""Sampling grids and boolean rasters.

Conventions
-----------
CARTESIAN: ``window = (x0, x1, y0, y1)``; column 0 is the left edge, row 0 is
the *top* row (largest y). Pixel centers are placed symmetrically so that a
window symmetric about y = 0 gives rows that are exact negatives of each
other.

LOGPOLAR: ``window = (log10 r_min, log10 r_max)``; row i samples
log|z| increasing with i (row 0 is the inner ring, a proxy for 0; the last
row is the outer ring, a proxy for infinity). Column j samples the angle
theta_j = pi (2j + 1) / width, reduced to (-pi, pi]; theta is periodic.
"""
import math
from dataclasses import dataclass, field

import numpy as np

CARTESIAN = "cartesian"
LOGPOLAR = "logpolar"
LN10 = math.log(10.0)


@dataclass(frozen=True)
class GridSpec:
    mode: str
    window: tuple
    width: int
    height: int

    def __post_init__(self):
        mode = self.mode.lower()
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "window", tuple(float(v) for v in self.window))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid needs positive width and height")
        if mode == CARTESIAN:
            x0, x1, y0, y1 = self.window
            if not (x1 > x0 and y1 > y0):
                raise ValueError(f"empty cartesian window {self.window}")
        elif mode == LOGPOLAR:
            lo, hi = self.window
            if not hi > lo:
                raise ValueError(f"empty log-polar window {self.window}")
        else:
            raise ValueError(f"unknown grid mode {self.mode!r}")

    @property
    def shape(self):
        return (self.height, self.width)

    @classmethod
    def logpolar(cls, log10_min, log10_max, width, height=None):
        return cls(LOGPOLAR, (log10_min, log10_max), width, height or width)

    @classmethod
    def cartesian(cls, x0, x1, y0, y1, width, height=None):
        return cls(CARTESIAN, (x0, x1, y0, y1), width, height or width)

    # -- coordinates -------------------------------------------------------

    def xs(self):
        x0, x1 = self.window[0], self.window[1]
        c, h = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
        k = 2.0 * np.arange(self.width) + 1.0 - self.width
        return c + h * (k / self.width)

    def ys(self):
        y0, y1 = self.window[2], self.window[3]
        c, h = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
        k = self.height - 1.0 - 2.0 * np.arange(self.height)
        return c + h * (k / self.height)

    def rhos(self):
        """Natural log |z| of each row (LOGPOLAR)."""
        lo, hi = self.window
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        k = 2.0 * np.arange(self.height) + 1.0 - self.height
        return LN10 * (c + h * (k / self.height))

    def thetas(self):
        """Angle of each column (LOGPOLAR), in (-pi, pi]."""
        k = 2 * np.arange(self.width) + 1
        k = np.where(k <= self.width, k, k - 2 * self.width)
        return (math.pi / self.width) * k

    def log_coords(self, rows=slice(None)):
        """(rho, theta) arrays of pixel centers for the given row slice."""
        if self.mode == LOGPOLAR:
            rho = self.rhos()[rows]
            th = self.thetas()
            return np.meshgrid(rho, th, indexing="ij")
        x = self.xs()
        y = self.ys()[rows]
        X, Y = np.meshgrid(x, y)
        with np.errstate(divide="ignore"):
            rho = np.log(np.hypot(X, Y))
        return rho, np.arctan2(Y, X)

    def cell_of(self, z):
        """(row, col) of the cell containing the point z."""
        z = complex(z)
        if self.mode == LOGPOLAR:
            lo, hi = self.window
            t = (math.log10(abs(z)) - lo) / (hi - lo)
            row = min(max(int(math.floor(t * self.height)), 0), self.height - 1)
            ang = math.atan2(z.imag, z.real) % (2 * math.pi)
            col = int(math.floor(ang / (2 * math.pi) * self.width)) % self.width
            return row, col
        x0, x1, y0, y1 = self.window
        col = int(math.floor((z.real - x0) / (x1 - x0) * self.width))
        row = int(math.floor((y1 - z.imag) / (y1 - y0) * self.height))
        return min(max(row, 0), self.height - 1), min(max(col, 0), self.width - 1)

    def to_dict(self):
        return {"mode": self.mode, "window": list(self.window), "width": self.width,
                "height": self.height}


@dataclass
class RasterSet:
    """Boolean mask over a grid; ``mask[row, col]``."""

    grid: GridSpec
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {self.mask.shape} does not match grid {self.grid.shape}")

    @classmethod
    def empty(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    def copy(self):
        return RasterSet(self.grid, self.mask.copy())

    def __eq__(self, other):
        return (isinstance(other, RasterSet) and self.grid == other.grid
                and np.array_equal(self.mask, other.mask))

    def __contains__(self, cell):
        return bool(self.mask[cell])
