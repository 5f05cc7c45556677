"""Scene grids and synthetic ground-truth reflectivity fields.

Pixels are vectorised row-major everywhere in the package: index
``n = row * nx + col`` where ``row`` runs along y and ``col`` along x.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBoundsError


@dataclass(frozen=True)
class SceneGrid:
    nx: int
    ny: int
    extent: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.nx}x{self.ny}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")

    @property
    def N(self):
        return self.nx * self.ny

    @property
    def dx(self):
        return 2.0 * self.extent / self.nx

    @property
    def dy(self):
        return 2.0 * self.extent / self.ny

    @property
    def x_axis(self):
        return -self.extent + self.dx * (np.arange(self.nx) + 0.5)

    @property
    def y_axis(self):
        return -self.extent + self.dy * (np.arange(self.ny) + 0.5)

    @property
    def centers(self):
        """(N, 2) array of cell-centre coordinates ``(x_n, y_n)``, row-major."""
        xx, yy = np.meshgrid(self.x_axis, self.y_axis)
        return np.column_stack([xx.ravel(), yy.ravel()])

    @property
    def shape(self):
        return (self.ny, self.nx)

    def index(self, row, col):
        return np.asarray(row) * self.nx + np.asarray(col)

    def rowcol(self, n):
        return np.divmod(np.asarray(n), self.nx)

    def contains(self, x, y):
        return abs(x) <= self.extent and abs(y) <= self.extent

    def nearest(self, x, y):
        """Index of the cell whose centre is nearest to ``(x, y)``."""
        if not self.contains(x, y):
            raise OutOfBoundsError(f"point ({x}, {y}) outside extent {self.extent}")
        # ties go to the lower index
        col = int(np.argmin(np.abs(self.x_axis - x)))
        row = int(np.argmin(np.abs(self.y_axis - y)))
        return int(self.index(row, col))

    def to_image(self, v):
        return np.asarray(v).reshape(self.ny, self.nx)


def make_grid(nx, ny, extent):
    return SceneGrid(int(nx), int(ny), float(extent))


@dataclass
class GroundTruth:
    """Complex reflectivity per sub-aperture.

    ``values`` has shape ``(L, N)``. A single row is taken to be isotropic
    and is returned for every sub-aperture index.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=complex))

    @property
    def N(self):
        return self.values.shape[1]

    @property
    def isotropic(self):
        return self.values.shape[0] == 1

    def at(self, l):
        if self.isotropic:
            return self.values[0]
        return self.values[l]

    def support(self):
        return np.flatnonzero(np.any(self.values != 0, axis=0))

    def intensity(self):
        """Per-cell peak intensity over sub-apertures, the fusion target."""
        return np.max(np.abs(self.values) ** 2, axis=0)


def make_point_targets(grid, points):
    """Snap ``(x, y, amplitude)`` triples to their nearest cells.

    Amplitudes landing on the same cell are summed.
    """
    values = np.zeros(grid.N, dtype=complex)
    for x, y, amp in points:
        values[grid.nearest(x, y)] += amp
    return GroundTruth(values)


def _shape_mask(grid, shape, box, thickness):
    xmin, ymin, xmax, ymax = box
    if xmin > xmax or ymin > ymax:
        raise ValueError(f"degenerate box {box}")
    if min(xmin, ymin) < -grid.extent or max(xmax, ymax) > grid.extent:
        raise OutOfBoundsError(f"shape box {box} exceeds extent {grid.extent}")
    x, y = grid.centers.T
    inside = (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
    if shape == "rectangle":
        return inside
    if shape == "L-shape":
        if thickness is None or thickness <= 0:
            raise ValueError("L-shape needs a positive arm thickness")
        arms = (x <= xmin + thickness) | (y <= ymin + thickness)
        return inside & arms
    raise ValueError(f"unknown shape {shape!r}")


def make_extended_target(grid, shape, amplitude_law="constant", seed=0,
                         box=None, thickness=None, amplitude=1.0):
    """Rasterise a contiguous extended target.

    Parameters
    ----------
    shape : {"rectangle", "L-shape"}
        The L-shape keeps the left and bottom arms of ``box``, each
        ``thickness`` metres wide.
    amplitude_law : {"constant", "per-cell-random-phase"}
        Random phases are uniform on [0, 2pi) and drawn from ``seed``.
    box : (xmin, ymin, xmax, ymax) in metres
        Defaults to the central half of the scene.
    """
    if box is None:
        h = grid.extent / 2
        box = (-h, -h, h, h)
    mask = _shape_mask(grid, shape, box, thickness)
    if not mask.any():
        raise ValueError(f"shape {shape!r} in box {box} covers no cell centre")
    values = np.zeros(grid.N, dtype=complex)
    if amplitude_law == "constant":
        values[mask] = amplitude
    elif amplitude_law == "per-cell-random-phase":
        rng = np.random.default_rng(seed)
        phase = rng.uniform(0.0, 2 * np.pi, size=int(mask.sum()))
        values[mask] = abs(amplitude) * np.exp(1j * phase)
    else:
        raise ValueError(f"unknown amplitude law {amplitude_law!r}")
    return GroundTruth(values)


def make_anisotropic(truth, L, seed=0, min_gain=0.5):
    """Give each cell an independent magnitude gain in [min_gain, 1] per sub-aperture."""
    if not 0 <= min_gain <= 1:
        raise ValueError("min_gain must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    gains = rng.uniform(min_gain, 1.0, size=(L, truth.N))
    return GroundTruth(gains * truth.at(0)[None, :])
