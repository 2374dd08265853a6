"""
A complete landing, narrated
============================

The full closed loop: the vehicle tracks the marker from 2.5 m using the
long-range pattern, the landing is triggered once laterally converged, the
display switches to the full-pose family at 1.2 m (yaw correction starts
there), the marker shrinks with altitude and splits into a board, and the
vehicle touches down centimeters from the center. Static-marker strategies
run on the same seed for contrast.
"""

import math
from dataclasses import replace

from markersim import collect_metrics, nominal_landing_scenario, run_scenario

config = nominal_landing_scenario()
trace = run_scenario(config)

print(f"start: {config.initial_position} m, yaw {math.degrees(config.initial_yaw):.0f} deg, "
      f"tracking height {config.desired_height} m")
print(f"timing scheme: {trace.scheme_effective}\n")

# milestones out of the trace
landing_started = next(r for r in trace.records if r.landing)
switch = next(r for r in trace.records if r.displayed_family == "full_pose")
board = next((r for r in trace.records if r.displayed_cells > 1), None)
print(f"{landing_started.time:6.2f} s  landing triggered "
      f"(lateral error {math.hypot(landing_started.x, landing_started.y) * 100:.1f} cm)")
print(f"{switch.time:6.2f} s  family switch long-range -> full-pose at h = {switch.z:.2f} m, "
      f"yaw error still {math.degrees(abs(switch.yaw)):.1f} deg")
if board:
    print(f"{board.time:6.2f} s  screen fills with a {board.displayed_cells}-cell board "
          f"(cell {board.displayed_size * 100:.1f} cm) at h = {board.z:.2f} m")
print(f"{trace.touchdown_time:6.2f} s  touchdown")

m = collect_metrics(trace)
print(f"\nlanded {m['final_lateral_error'] * 100:.2f} cm from the marker center, "
      f"final yaw error {math.degrees(m['final_yaw_error']):.2f} deg")
print(f"marker updates: {m['marker_update_count']}, "
      f"frames invalidated by updates: {m['invalid_count']}, dropouts: {m['dropout_count']}")

print("\nsame scenario, static markers instead:")
for strategy in ("static-full-pose", "static-long-range"):
    st = run_scenario(replace(config, strategy=strategy, duration=25.0))
    sm = collect_metrics(st)
    if st.status == "landed":
        print(f"  {strategy}: landed, lateral {sm['final_lateral_error'] * 100:.1f} cm, "
              f"yaw error left {math.degrees(sm['final_yaw_error']):.1f} deg "
              f"of {math.degrees(sm['initial_yaw_error']):.1f} deg")
    else:
        print(f"  {strategy}: {st.status}, {sm['detection_count']} detections "
              f"in {sm['dropout_count'] + sm['detection_count']} frames "
              f"(marker not detectable from {config.desired_height} m)")
