"""
The stale-parameter race
========================

The detector computes poses against its own copy of the marker description.
Change the screen without updating the detector and every pose is
systematically wrong: shrink the marker to half size and the detector reports
the camera at twice the height. This demo shows the effect directly, then
replays the camera frames around one marker update to show which poses go
wrong and how the validity stamping catches them.
"""

import math

import numpy as np

from markersim import (
    CameraIntrinsics,
    DetectorParams,
    MarkerConfig,
    MarkerFamily,
    NoiseProfile,
    Pose,
    simulate_detection,
)
from markersim.geometry import rot_x
from markersim.timing import DelaySample, replay_update_frames, schedule_update
from dataclasses import replace

camera = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0,
                          width=640, height=480, frame_period=1 / 30)
family = replace(MarkerFamily.full_pose_default(),
                 position_noise=NoiseProfile(0.0, 0.0),
                 yaw_noise=NoiseProfile(0.0, 0.0))
rng = np.random.default_rng(0)

# --- the virtual-height effect -------------------------------------------

believed = MarkerConfig.single(0, family, 0.15, 0.15)
true_pose = Pose(rot_x(math.pi), [0.0, 0.0, 1.0], "marker", "camera")

print("camera truly 1.00 m above the marker:")
for displayed_size in (0.15, 0.075, 0.30):
    displayed = MarkerConfig.single(1, family, displayed_size, 0.45)
    est = simulate_detection(true_pose, displayed, DetectorParams(believed, camera), rng)
    print(f"  displayed {displayed_size * 100:5.1f} cm, detector believes 15.0 cm "
          f"-> estimated height {est.relative_pose.translation[2]:.2f} m")
print("a controller holding altitude would climb or dive to 'correct' this;\n"
      "the display alone can steer the vehicle.\n")

# --- one update, frame by frame -------------------------------------------

sample = DelaySample(detector_update=0.005, display=0.030, display_confirm=0.050,
                     video=0.005, pose=0.002)
timeline = schedule_update(0.405, sample, frame_period=1 / 30)
print(f"marker update issued at t0 = {timeline.issued_at:.3f} s:")
print(f"  on screen at        {timeline.display_at:.3f} s")
print(f"  confirmation at     {timeline.confirm_at:.3f} s")
print(f"  first new pose by   {timeline.pose_ready_at:.3f} s")

for scheme in ("safe", "optimized"):
    print(f"\n{scheme} scheme, frames around the update "
          f"(config 0 -> 1, camera at 30 Hz):")
    print(f"{'captured':>9} {'pose out':>9} {'on screen':>10} {'detector':>9} {'stamp':>20}")
    for o in replay_update_frames(timeline, scheme, frame_phase=0.0):
        print(f"{o.capture_time:9.3f} {o.ready_time:9.3f} {o.displayed_config:>10} "
              f"{o.believed_config:>9} {o.stamp.reason:>20}")
    lost = sum(not o.stamp.valid for o in replay_update_frames(timeline, scheme, 0.0))
    print(f"  -> {lost} frame(s) lost to this update")
