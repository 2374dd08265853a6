"""Marker families, their physical layout on a finite display, and sizing rules.

A displayed configuration is always a board of one or more square cells that
share a single coordinate frame centered on the screen; a plain marker is the
one-cell case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class FamilyKind(str, Enum):
    """The two detection roles a displayed pattern can play."""

    LONG_RANGE_POSITION_ONLY = "long_range_position_only"
    SHORT_RANGE_FULL_POSE = "short_range_full_pose"


@dataclass(frozen=True)
class NoiseProfile:
    """Position/angle noise that scales with distance: sigma(h) = s1 * h**exp."""

    sigma_at_1m: float
    range_exponent: float

    def __post_init__(self):
        if self.sigma_at_1m < 0:
            raise ValueError(f"sigma_at_1m must be >= 0, got {self.sigma_at_1m}")
        if self.range_exponent < 0:
            raise ValueError(f"range_exponent must be >= 0, got {self.range_exponent}")

    def sigma_at(self, distance: float) -> float:
        if distance < 0:
            raise ValueError(f"distance must be >= 0, got {distance}")
        return self.sigma_at_1m * distance**self.range_exponent


@dataclass(frozen=True)
class MarkerFamily:
    """Detection characteristics of one marker family.

    Family parameters are data, not code. The defaults below mirror two
    widely used systems: a full-pose square-tag family (Aruco-style, accuracy
    degrading with distance) and a long-range circular family (Whycon-style,
    nearly constant accuracy but no yaw observability).
    """

    kind: FamilyKind
    max_detection_range: float
    min_pixel_footprint: float
    yields_yaw: bool
    position_noise: NoiseProfile
    yaw_noise: NoiseProfile | None = None

    def __post_init__(self):
        if self.max_detection_range <= 0:
            raise ValueError(f"max_detection_range must be > 0, got {self.max_detection_range}")
        if self.min_pixel_footprint < 1:
            raise ValueError(f"min_pixel_footprint must be >= 1, got {self.min_pixel_footprint}")
        if not self.yields_yaw and self.yaw_noise is not None:
            raise ValueError("yaw_noise must be absent when the family yields no yaw")

    @classmethod
    def full_pose_default(cls, sigma_at_1m: float = 0.02, yaw_sigma_at_1m: float = 0.03) -> "MarkerFamily":
        return cls(
            kind=FamilyKind.SHORT_RANGE_FULL_POSE,
            max_detection_range=4.4,
            min_pixel_footprint=20.0,
            yields_yaw=True,
            position_noise=NoiseProfile(sigma_at_1m, 1.0),
            yaw_noise=NoiseProfile(yaw_sigma_at_1m, 1.0),
        )

    @classmethod
    def long_range_default(cls, sigma: float = 0.02) -> "MarkerFamily":
        return cls(
            kind=FamilyKind.LONG_RANGE_POSITION_ONLY,
            max_detection_range=13.181,
            min_pixel_footprint=20.0,
            yields_yaw=False,
            position_noise=NoiseProfile(sigma, 0.0),
            yaw_noise=None,
        )


@dataclass(frozen=True)
class Screen:
    """Physical display surface; refresh_delay feeds the display latency."""

    width: float
    height: float
    refresh_delay: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"screen dimensions must be positive, got {self.width}x{self.height}")
        if self.refresh_delay < 0:
            raise ValueError(f"refresh_delay must be >= 0, got {self.refresh_delay}")

    @property
    def min_dim(self) -> float:
        return min(self.width, self.height)


@dataclass(frozen=True)
class BoardCell:
    """One square cell: center offset in screen coordinates plus edge length."""

    center_x: float
    center_y: float
    size: float


def _cells_overlap(a: BoardCell, b: BoardCell) -> bool:
    half = (a.size + b.size) / 2.0
    return abs(a.center_x - b.center_x) < half - 1e-12 and abs(a.center_y - b.center_y) < half - 1e-12


@dataclass(frozen=True)
class MarkerConfig:
    """One displayable marker configuration (the 3D-model side of the
    detector parametrization).

    ``config_id`` increases by one with every issued update so that stale
    detector state is identifiable.
    """

    config_id: int
    family: MarkerFamily
    marker_size: float
    board: tuple[BoardCell, ...]
    screen_limit: float

    def __post_init__(self):
        if self.config_id < 0:
            raise ValueError(f"config_id must be >= 0, got {self.config_id}")
        if not (0.0 < self.marker_size <= self.screen_limit + 1e-12):
            raise ValueError(
                f"marker_size must lie in (0, {self.screen_limit}], got {self.marker_size}"
            )
        if not self.board:
            raise ValueError("board must contain at least one cell")
        cells = list(self.board)
        for i, a in enumerate(cells):
            for b in cells[i + 1 :]:
                if _cells_overlap(a, b):
                    raise ValueError(
                        f"board cells overlap: ({a.center_x}, {a.center_y}) and "
                        f"({b.center_x}, {b.center_y}) with sizes {a.size}, {b.size}"
                    )
        object.__setattr__(self, "board", tuple(cells))

    @classmethod
    def single(
        cls, config_id: int, family: MarkerFamily, marker_size: float, screen_limit: float
    ) -> "MarkerConfig":
        return cls(
            config_id=config_id,
            family=family,
            marker_size=marker_size,
            board=(BoardCell(0.0, 0.0, marker_size),),
            screen_limit=screen_limit,
        )

    @property
    def n_cells(self) -> int:
        return len(self.board)


def optimal_marker_size(
    fov: float, distance: float, scale_fraction: float, variant: str = "consistent"
) -> float:
    """Marker edge length that occupies ``scale_fraction`` of the field of view.

    ``fov`` is the full camera vision angle. The default "consistent" rule,
    2*h*tan(s*fov/2), makes scale_fraction = 1 exactly fill the field of view
    (camera_freedom_angle == 0). The "verbatim" rule 2*h*tan(fov*s) is kept
    selectable; it grows past the FOV for s near 1 and hits a tangent pole at
    fov*s = pi/2.
    """
    if not (0.0 < scale_fraction <= 1.0):
        raise ValueError(f"scale_fraction must lie in (0, 1], got {scale_fraction}")
    if not (0.0 < fov < math.pi):
        raise ValueError(f"fov must lie in (0, pi), got {fov}")
    if distance < 0:
        raise ValueError(f"distance must be >= 0, got {distance}")
    if variant == "consistent":
        return 2.0 * distance * math.tan(scale_fraction * fov / 2.0)
    if variant == "verbatim":
        arg = fov * scale_fraction
        if arg >= math.pi / 2.0:
            raise ValueError(
                f"verbatim size rule hits the tangent pole: fov*scale_fraction = {arg:.4f} >= pi/2"
            )
        return 2.0 * distance * math.tan(arg)
    raise ValueError(f"unknown size rule variant '{variant}'")


def camera_freedom_angle(fov: float, marker_size: float, distance: float) -> float:
    """Angular margin left for camera motion once the marker is sized.

    fov/2 - atan(size / (2 h)); negative means the marker overflows the half
    field of view and callers must treat it as "no freedom".
    """
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return fov / 2.0 - math.atan(marker_size / (2.0 * distance))


def clamp_to_screen(desired_size: float, screen: Screen, fill_factor: float = 1.0) -> float:
    """Cap a desired marker size at the largest square the display can show."""
    if desired_size < 0:
        raise ValueError(f"desired_size must be >= 0, got {desired_size}")
    if not (0.0 < fill_factor <= 1.0):
        raise ValueError(f"fill_factor must lie in (0, 1], got {fill_factor}")
    return min(desired_size, screen.min_dim * fill_factor)


def board_layout(screen: Screen, cell_size: float, gap_fraction: float = 0.1) -> tuple[BoardCell, ...]:
    """Regular centered grid of cells filling the screen.

    floor(dim / (cell_size * (1 + gap_fraction))) cells per axis, at least one.
    All cells share the screen-centered coordinate frame.
    """
    if cell_size <= 0 or cell_size > screen.min_dim:
        raise ValueError(
            f"cell_size must lie in (0, {screen.min_dim}] for a {screen.width}x{screen.height} "
            f"screen, got {cell_size}"
        )
    if not (0.0 <= gap_fraction < 1.0):
        raise ValueError(f"gap_fraction must lie in [0, 1), got {gap_fraction}")
    pitch = cell_size * (1.0 + gap_fraction)
    # Epsilon guards the floor against float artifacts (0.15/0.05 < 3.0).
    nx = max(1, int(math.floor(screen.width / pitch + 1e-9)))
    ny = max(1, int(math.floor(screen.height / pitch + 1e-9)))
    cells = []
    for j in range(ny):
        for i in range(nx):
            cells.append(
                BoardCell(
                    center_x=(i - (nx - 1) / 2.0) * pitch,
                    center_y=(j - (ny - 1) / 2.0) * pitch,
                    size=cell_size,
                )
            )
    return tuple(cells)
