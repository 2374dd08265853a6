"""
Field-of-view based marker scaling
==================================

An on-screen marker should be as large as possible for detection range, but
small enough that the camera can move without losing it. This demo sweeps the
scale rule over camera-to-marker distance and shows the angular freedom each
size leaves, plus what happens when the physical screen clamps the size.
"""

import math

import numpy as np

from markersim import (
    CameraIntrinsics,
    Screen,
    board_layout,
    camera_freedom_angle,
    clamp_to_screen,
    fov_half_angle,
    optimal_marker_size,
)

camera = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0,
                          width=640, height=480, frame_period=1 / 30)
screen = Screen(width=0.15, height=0.15)

full_fov = 2.0 * fov_half_angle(camera)
print(f"camera field of view: {math.degrees(full_fov):.1f} deg "
      f"(half angle {fov_half_angle(camera):.4f} rad)\n")

# The "consistent" rule sizes the marker to a fraction of the field of view;
# at scale_fraction = 1 the marker exactly fills it and the camera has zero
# angular freedom left.
print("scale_fraction = 1.0 fills the FOV exactly:")
for h in (0.5, 1.0, 2.0):
    size = optimal_marker_size(full_fov, h, 1.0)
    freedom = camera_freedom_angle(full_fov, size, h)
    print(f"  h = {h:.1f} m  size = {size:.3f} m  freedom = {freedom:+.2e} rad")

print("\nscale_fraction = 0.5 leaves room to move (ideal size vs clamped):")
print(f"{'h [m]':>7} {'ideal [m]':>10} {'on screen [m]':>14} {'freedom [deg]':>14}")
for h in (3.0, 2.0, 1.0, 0.5, 0.3, 0.15, 0.08):
    ideal = optimal_marker_size(full_fov, h, 0.5)
    shown = clamp_to_screen(ideal, screen)
    freedom = camera_freedom_angle(full_fov, shown, h)
    note = "  <- screen-limited" if shown < ideal else ""
    print(f"{h:7.2f} {ideal:10.3f} {shown:14.3f} {math.degrees(freedom):14.1f}{note}")

# Close in, the marker gets small enough that the rest of the screen can be
# filled with more cells sharing one coordinate frame, which averages down
# the position noise.
print("\nboard fill-in once the cell is small enough:")
for h in (0.30, 0.15, 0.08):
    size = clamp_to_screen(optimal_marker_size(full_fov, h, 0.5), screen)
    cells = board_layout(screen, size, gap_fraction=0.1)
    print(f"  h = {h:.2f} m  cell = {size * 100:.1f} cm  -> {len(cells)} cells "
          f"(noise / sqrt({len(cells)}))")

# The "verbatim" variant of the rule grows much faster and overflows the FOV
# well before scale_fraction reaches 1.
print("\nvariant comparison at h = 1 m:")
print(f"{'s':>5} {'consistent [m]':>15} {'verbatim [m]':>13}")
for s in np.linspace(0.2, 1.0, 5):
    consistent = optimal_marker_size(full_fov, 1.0, float(s), "consistent")
    verbatim = optimal_marker_size(full_fov, 1.0, float(s), "verbatim")
    print(f"{s:5.2f} {consistent:15.3f} {verbatim:13.3f}")
