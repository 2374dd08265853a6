"""Closed-loop controller for the displayed marker: pick the family and scale
that best serve the current estimate, and apply confirmed updates to the
detector.

Family choice is distance-gated with hysteresis (a single switch point would
chatter under measurement noise), size follows the field-of-view scale rule,
and small full-pose markers are replicated into a screen-filling board.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics, fov_half_angle
from .marker import (
    BoardCell,
    FamilyKind,
    MarkerConfig,
    MarkerFamily,
    Screen,
    board_layout,
    clamp_to_screen,
    optimal_marker_size,
)
from .perception import DetectorParams, PoseEstimate


@dataclass(frozen=True)
class SwitchPolicy:
    """Family switch thresholds (with hysteresis band), scale fraction for the
    size rule, and the relative size deadband that limits update traffic."""

    switch_to_full_pose_below: float = 1.2
    switch_to_long_range_above: float = 1.4
    scale_fraction: float = 0.5
    rescale_deadband: float = 0.15

    def __post_init__(self):
        if not (self.switch_to_full_pose_below < self.switch_to_long_range_above):
            raise ValueError(
                f"hysteresis band is inverted: down-switch {self.switch_to_full_pose_below} "
                f"must lie below up-switch {self.switch_to_long_range_above}"
            )
        if not (0.0 < self.scale_fraction <= 1.0):
            raise ValueError(f"scale_fraction must lie in (0, 1], got {self.scale_fraction}")
        if self.rescale_deadband < 0:
            raise ValueError(f"rescale_deadband must be >= 0, got {self.rescale_deadband}")


@dataclass(frozen=True)
class MarkerCommand:
    """Request to put a new configuration on the screen, stamped at issue time."""

    new_config: MarkerConfig
    issued_at: float


def bootstrap_config(
    long_range: MarkerFamily, screen: Screen, fill_factor: float = 1.0, config_id: int = 0
) -> MarkerConfig:
    """Initial configuration: long-range family at maximum screen size, so the
    very first detection succeeds from as far as possible."""
    return MarkerConfig.single(
        config_id=config_id,
        family=long_range,
        marker_size=screen.min_dim * fill_factor,
        screen_limit=screen.min_dim * fill_factor,
    )


def select_marker(
    estimate: PoseEstimate | None,
    policy: SwitchPolicy,
    intrinsics: CameraIntrinsics,
    screen: Screen,
    current: MarkerConfig | None,
    long_range: MarkerFamily,
    full_pose: MarkerFamily,
    now: float = 0.0,
    size_variant: str = "consistent",
    gap_fraction: float = 0.1,
    fill_factor: float = 1.0,
) -> MarkerCommand | None:
    """Decide the next marker configuration, or None for no change.

    Distance is the Euclidean camera-to-marker distance from the last valid
    estimate. Ties at the thresholds keep the current family (strict
    inequalities). A full-pose marker that leaves at least two extra cell
    widths of screen becomes a board sharing one coordinate frame.
    """
    next_id = 0 if current is None else current.config_id + 1
    if estimate is None:
        if current is None:
            return MarkerCommand(bootstrap_config(long_range, screen, fill_factor), now)
        return None

    h = float(np.linalg.norm(estimate.relative_pose.translation))
    if h <= 0.0:
        return None

    if h < policy.switch_to_full_pose_below:
        kind = FamilyKind.SHORT_RANGE_FULL_POSE
    elif h > policy.switch_to_long_range_above:
        kind = FamilyKind.LONG_RANGE_POSITION_ONLY
    elif current is not None:
        kind = current.family.kind
    else:
        kind = FamilyKind.LONG_RANGE_POSITION_ONLY
    family = full_pose if kind is FamilyKind.SHORT_RANGE_FULL_POSE else long_range

    full_fov = 2.0 * fov_half_angle(intrinsics)
    size = clamp_to_screen(
        optimal_marker_size(full_fov, h, policy.scale_fraction, size_variant),
        screen,
        fill_factor,
    )
    if size <= 0.0:
        return None

    if (
        current is not None
        and current.family.kind is kind
        and abs(size - current.marker_size) / current.marker_size < policy.rescale_deadband
    ):
        return None

    screen_limit = screen.min_dim * fill_factor
    if kind is FamilyKind.SHORT_RANGE_FULL_POSE and screen_limit - size >= 2.0 * size:
        board = board_layout(screen, size, gap_fraction)
    else:
        board = (BoardCell(0.0, 0.0, size),)
    return MarkerCommand(
        MarkerConfig(
            config_id=next_id,
            family=family,
            marker_size=size,
            board=board,
            screen_limit=screen_limit,
        ),
        now,
    )


def apply_update(detector: DetectorParams, cmd: MarkerCommand) -> DetectorParams:
    """Install a confirmed marker update into the detector.

    Updates must arrive in order, one config_id at a time; anything else is a
    protocol violation (the ordering is owned by the timing protocol).
    """
    expected = detector.believed_config.config_id + 1
    got = cmd.new_config.config_id
    if got != expected:
        raise ValueError(
            f"marker update protocol violation: expected config_id {expected}, got {got}"
        )
    return DetectorParams(believed_config=cmd.new_config, intrinsics=detector.intrinsics)
