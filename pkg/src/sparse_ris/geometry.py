"""Deployment geometry: positions, planar arrays, tile grids and visibility.

All coordinates live in a global right-handed frame. The reflecting surface
sits in a vertical plane; its element rows run along the vertical axis
(default +z) and its columns along the horizontal axis (default +y), so the
panel broadside normal is +x for the default axes. Angles follow the physics
convention: elevation measured from the +z axis, azimuth measured in the
xy plane from +x toward +y.

Everything here is deterministic and immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when a direction or distance is requested between coincident points."""


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateGeometryError("zero-length axis vector")
    return v / n


@dataclass(frozen=True)
class Position3:
    """A point in the global frame, in metres."""

    x: float
    y: float
    z: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a) -> "Position3":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class DirectionAngles:
    """Elevation from +z and azimuth from +x toward +y, in radians."""

    elevation: float
    azimuth: float


def distance(a: Position3, b: Position3) -> float:
    """Euclidean distance between two points in metres."""
    return float(np.linalg.norm(a.array - b.array))


def direction_angles(frm: Position3, to: Position3) -> DirectionAngles:
    """Angles of the line of sight from ``frm`` toward ``to``.

    Raises DegenerateGeometryError if the points coincide. At the poles the
    azimuth is reported as 0 (the atan2 convention).
    """
    d = to.array - frm.array
    r = np.linalg.norm(d)
    if r == 0.0:
        raise DegenerateGeometryError("direction undefined between coincident points")
    elevation = float(np.arccos(np.clip(d[2] / r, -1.0, 1.0)))
    azimuth = float(np.arctan2(d[1], d[0]))
    return DirectionAngles(elevation, azimuth)


def spatial_frequencies(angles: DirectionAngles, spacing_v: float,
                        spacing_h: float, wavelength: float) -> tuple[float, float]:
    """Vertical and horizontal phase increments per element for a plane wave.

    For element pitch ``spacing_v`` along the vertical axis the per-row phase
    step is (2 pi spacing_v / wavelength) * cos(elevation); the per-column step
    uses sin(elevation) * sin(azimuth). Half-wavelength pitch maps the full
    angle range onto (-pi, pi].
    """
    k = 2.0 * np.pi / wavelength
    freq_v = k * spacing_v * np.cos(angles.elevation)
    freq_h = k * spacing_h * np.sin(angles.elevation) * np.sin(angles.azimuth)
    return float(freq_v), float(freq_h)


_EZ = np.array([0.0, 0.0, 1.0])
_EY = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class PlanarArraySpec:
    """A rectangular grid of antenna elements in a vertical plane.

    Elements are indexed 1..n in vertical-major row-major order: index x sits
    in row ceil(x / n_h) and column x - (row - 1) * n_h, rows counted upward
    from the bottom, columns along the horizontal axis. This matches the
    Kronecker ordering of the planar steering vectors.
    """

    n_v: int
    n_h: int
    spacing_v: float
    spacing_h: float
    vertical_axis: np.ndarray = field(default_factory=lambda: _EZ.copy())
    horizontal_axis: np.ndarray = field(default_factory=lambda: _EY.copy())

    def __post_init__(self):
        if self.n_v < 1 or self.n_h < 1:
            raise ValueError("element counts must be at least 1")
        if self.spacing_v <= 0.0 or self.spacing_h <= 0.0:
            raise ValueError("element spacings must be positive")
        object.__setattr__(self, "vertical_axis", _unit(np.asarray(self.vertical_axis, float)))
        object.__setattr__(self, "horizontal_axis", _unit(np.asarray(self.horizontal_axis, float)))
        if abs(float(self.vertical_axis @ self.horizontal_axis)) > 1e-9:
            raise ValueError("array axes must be orthogonal")

    @property
    def n(self) -> int:
        return self.n_v * self.n_h

    @property
    def normal(self) -> np.ndarray:
        """Broadside unit normal (horizontal x vertical, +x for default axes)."""
        return np.cross(self.horizontal_axis, self.vertical_axis)

    def element_offsets(self) -> np.ndarray:
        """(n, 3) element positions relative to the array centre, index order as above."""
        idx = np.arange(self.n)
        row = idx // self.n_h
        col = idx % self.n_h
        v = (row - (self.n_v - 1) / 2.0) * self.spacing_v
        h = (col - (self.n_h - 1) / 2.0) * self.spacing_h
        return v[:, None] * self.vertical_axis[None, :] + h[:, None] * self.horizontal_axis[None, :]


@dataclass(frozen=True)
class TileLayout:
    """A sparse grid of identical reflecting tiles centred on ``center``.

    Tile centres form a tiles_v x tiles_h rectangular grid in the panel plane;
    adjacent centres differ by exactly pitch_v (vertically) and pitch_h
    (horizontally). Pitch 0 is allowed and stacks the centres, which models a
    tight single-panel baseline. Tiles are indexed 1..n_tiles in the same
    vertical-major row-major order as elements.

    ``vr_half_angle`` is the azimuth half-width of each tile's visible region
    (see :class:`VisibleRegion`); the default quarter-pi gives a 90 degree
    front sector.
    """

    tiles_v: int
    tiles_h: int
    pitch_v: float
    pitch_h: float
    tile: PlanarArraySpec
    center: Position3
    vr_half_angle: float = np.pi / 4.0

    def __post_init__(self):
        if self.tiles_v < 1 or self.tiles_h < 1:
            raise ValueError("tile counts must be at least 1")
        if self.pitch_v < 0.0 or self.pitch_h < 0.0:
            raise ValueError("tile pitches must be nonnegative")
        if not 0.0 < self.vr_half_angle <= np.pi:
            raise ValueError("vr_half_angle must be in (0, pi]")

    @property
    def n_tiles(self) -> int:
        return self.tiles_v * self.tiles_h

    @property
    def normal(self) -> np.ndarray:
        return self.tile.normal

    def tile_centers(self) -> np.ndarray:
        """(n_tiles, 3) tile centre positions in index order."""
        idx = np.arange(self.n_tiles)
        row = idx // self.tiles_h
        col = idx % self.tiles_h
        v = (row - (self.tiles_v - 1) / 2.0) * self.pitch_v
        h = (col - (self.tiles_h - 1) / 2.0) * self.pitch_h
        off = (v[:, None] * self.tile.vertical_axis[None, :]
               + h[:, None] * self.tile.horizontal_axis[None, :])
        return self.center.array[None, :] + off

    def tile_center(self, tile_index: int) -> Position3:
        """Centre of 1-based ``tile_index``."""
        self._check_tile(tile_index)
        return Position3.from_array(self.tile_centers()[tile_index - 1])

    def _check_tile(self, tile_index: int):
        if not 1 <= tile_index <= self.n_tiles:
            raise IndexError(f"tile index {tile_index} outside 1..{self.n_tiles}")


def element_positions(layout: TileLayout, tile_index: int) -> np.ndarray:
    """(n, 3) element positions of one tile, 1-based tile index, element index order."""
    layout._check_tile(tile_index)
    c = layout.tile_centers()[tile_index - 1]
    return c[None, :] + layout.tile.element_offsets()


def element_distance(layout: TileLayout, tile_index: int, element_index: int,
                     point: Position3) -> float:
    """Exact distance from one element (1-based) to an arbitrary point."""
    if not 1 <= element_index <= layout.tile.n:
        raise IndexError(f"element index {element_index} outside 1..{layout.tile.n}")
    pos = element_positions(layout, tile_index)[element_index - 1]
    r = float(np.linalg.norm(point.array - pos))
    if r == 0.0:
        raise DegenerateGeometryError("point coincides with an element")
    return r


@dataclass(frozen=True)
class VisibleRegion:
    """Azimuthal visibility sector of a tile.

    A point is visible when the horizontal projection of (point - apex) lies
    within ``half_angle`` of the horizontal ``axis``; the vertical coordinate
    is ignored (the sector is omnidirectional in elevation). The boundary
    counts as inside. A point with zero horizontal offset (directly above or
    below the apex) is treated as inside.
    """

    apex: Position3
    axis: np.ndarray
    half_angle: float
    vertical_axis: np.ndarray = field(default_factory=lambda: _EZ.copy())

    def __post_init__(self):
        object.__setattr__(self, "axis", _unit(np.asarray(self.axis, float)))
        object.__setattr__(self, "vertical_axis", _unit(np.asarray(self.vertical_axis, float)))
        if not 0.0 < self.half_angle <= np.pi:
            raise ValueError("half_angle must be in (0, pi]")

    def contains(self, point: Position3) -> bool:
        d = point.array - self.apex.array
        horiz = d - (d @ self.vertical_axis) * self.vertical_axis
        n = np.linalg.norm(horiz)
        if n == 0.0:
            return True
        cos_az = float(horiz @ self.axis) / n
        # closed boundary; the epsilon keeps exact 45-degree geometry inside
        return cos_az >= np.cos(self.half_angle) - 1e-12


def vr_for_tile(layout: TileLayout, tile_index: int) -> VisibleRegion:
    """Visible region of one tile: apex at the tile centre, axis along the panel normal."""
    return VisibleRegion(apex=layout.tile_center(tile_index),
                         axis=layout.normal,
                         half_angle=layout.vr_half_angle,
                         vertical_axis=layout.tile.vertical_axis)


def in_visible_region(region: VisibleRegion, point: Position3) -> bool:
    """True when ``point`` falls inside ``region`` (boundary inclusive)."""
    return region.contains(point)
