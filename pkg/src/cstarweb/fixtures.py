"""Named raster fixtures and random masks for topology tests."""

import numpy as np

from .errors import UnknownFixture
from .grids import LN10, GridSpec, RasterSet
from .topology import components, strip_grid


def _polar(size, height=None, window=(-2.0, 2.0)):
    return GridSpec.logpolar(window[0], window[1], size, height or size)


def circle_rows(height, n):
    """n rows spread evenly from the inner ring to the outer ring."""
    return np.unique(np.round(np.linspace(0, height - 1, n)).astype(int))


def circles(n=5, size=64, spoke=False):
    grid = _polar(size)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[circle_rows(size, n)] = True
    if spoke:
        mask[:, 0] = True
    return RasterSet(grid, mask)


def single_circle(size=64):
    grid = _polar(size)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[size // 2] = True
    return RasterSet(grid, mask)


def plane_squares_web(radii=(7.0, 9.5, 12.0), columns=193, theta_cells=128, copies=5):
    """Nested square boundaries |Re w| = R or |Im w| = R joined by a segment on Im w = 0.

    The strip spans Re w in [-R_max, R_max] with the outermost square's
    vertical sides on the first and last column; every R exceeds 2 pi so each
    vertical side covers a full period of the angle.
    """
    rmax = max(radii)
    dx = 2 * rmax / (columns - 1)
    lo = -(rmax + dx / 2) / LN10
    polar = GridSpec.logpolar(lo, -lo, theta_cells, columns)
    strip = strip_grid(polar, copies)
    x, y = strip.xs(), strip.ys()
    mask = np.zeros(strip.shape, dtype=bool)
    for R in radii:
        c0, c1 = np.argmin(np.abs(x + R)), np.argmin(np.abs(x - R))
        r0, r1 = np.argmin(np.abs(y - R)), np.argmin(np.abs(y + R))
        mask[r0:r1 + 1, c0] = True
        mask[r0:r1 + 1, c1] = True
        mask[r0, c0:c1 + 1] = True
        mask[r1, c0:c1 + 1] = True
    mask[np.argmin(np.abs(y)), :] = True
    return RasterSet(strip, mask)


def random_mask(grid, rng, density=0.5):
    return RasterSet(grid, rng.random(grid.shape) < density)


def random_web_candidate(rng, size=48):
    """Random connected mix of (possibly broken) circles, spokes and blobs.

    One spoke always runs from ring to ring and only the largest component is
    kept, so every fixture is connected. Ring rows are included most of the
    time so that roughly half of the fixtures are webs; gaps in circles and
    missing rings produce failures.
    """
    grid = _polar(size)
    mask = np.zeros(grid.shape, dtype=bool)
    rows = set(rng.choice(np.arange(1, size - 1), size=rng.integers(1, 6), replace=False).tolist())
    if rng.random() < 0.8:
        rows |= {0, size - 1}
    for r in sorted(rows):
        mask[r] = True
        if rng.random() < 0.2:
            start = rng.integers(0, size)
            mask[r, start:start + rng.integers(1, 6)] = False
    mask[:, rng.integers(0, size)] = True
    for _ in range(rng.integers(0, 3)):
        c = rng.integers(0, size)
        r0, r1 = sorted(rng.integers(0, size, size=2))
        mask[r0:r1 + 1, c] = True
    for _ in range(rng.integers(0, 4)):
        r, c = rng.integers(0, size, size=2)
        mask[max(r - 2, 0):r + 3, max(c - 2, 0):c + 3] = True
    r = RasterSet(grid, mask)
    lab = components(r)
    if lab.count > 1:
        sizes = np.bincount(lab.labels.ravel())[1:]
        r = RasterSet(grid, lab.labels == 1 + int(np.argmax(sizes)))
    return r


FIXTURES = {
    "circles-with-spoke": lambda n=5, size=64, **_: circles(n, size, spoke=True),
    "circles": lambda n=5, size=64, **_: circles(n, size, spoke=False),
    "single-circle": lambda size=64, **_: single_circle(size),
    "plane-squares-web": lambda **_: plane_squares_web(),
}


def fixture(name, seed=0, **params):
    """Build a named fixture; ``random-web`` and ``random-mask`` use ``seed``."""
    rng = np.random.default_rng(seed)
    if name == "random-web":
        return random_web_candidate(rng, params.get("size") or 48)
    if name == "random-mask":
        size = params.get("size") or 64
        return random_mask(_polar(size), rng)
    try:
        build = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(name) from None
    return build(**{k: v for k, v in params.items() if v is not None})


def fixture_names():
    return sorted(FIXTURES) + ["random-mask", "random-web"]
