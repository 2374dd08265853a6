"""Deterministic closed-loop simulation: a velocity-commanded kinematic camera
body, a fixed-rate capture pipeline with transport delays, the servo loop, the
marker control loop, and the update-synchronization protocol, all advanced by
one event queue.

Events carry exact timestamps (delay windows shorter than a tick are
honored); the vehicle integrates between events in steps no larger than the
tick, and one trace record is emitted per tick. Two runs with the same
configuration and seed produce byte-identical traces.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, invert, orthonormalize, rot_x, rot_z
from .marker import FamilyKind, MarkerConfig
from .marker_control import MarkerCommand, apply_update, bootstrap_config, select_marker
from .pbvs import VelocityCommand, clamp_command, control_law, error_and_rotation, with_descent
from .perception import (
    DetectorParams,
    NoDetection,
    PoseEstimate,
    camera_position_in_marker,
    relative_yaw,
    simulate_detection,
)
from .scenario import ScenarioConfig
from .timing import (
    detector_switch_time,
    evaluate_optimized_conditions,
    schedule_update,
    stamp_validity,
    update_complete_time,
    wait_window,
)

# Event ordering at equal timestamps: display < confirmation < capture <
# detector-update; completion bookkeeping and externals come after.
_PRIO_DISPLAY = 0
_PRIO_CONFIRM = 1
_PRIO_GRAB = 2
_PRIO_POSE_READY = 3
_PRIO_DETECTOR_UPDATE = 4
_PRIO_UPDATE_COMPLETE = 5
_PRIO_LANDING = 6
_PRIO_END = 9

_TIME_EPS = 1e-12


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(math.remainder(a, 2.0 * math.pi))


def camera_pose_in_marker(x: float, y: float, z: float, yaw: float, frame: str = "camera") -> Pose:
    """Pose of a downward-facing camera hovering over the marker plane.

    The camera optical axis points at the marker (camera z down), so the
    rotation is a yaw composed with a flip about x.
    """
    return Pose(rot_z(yaw) @ rot_x(math.pi), np.array([x, y, z]), frame, "marker")


def _vehicle_yaw(pose: Pose) -> float:
    """Heading of a camera-to-marker pose; equals relative_yaw of its inverse."""
    r = pose.rotation
    return math.atan2(r[1, 0], r[0, 0])


@dataclass(frozen=True)
class VehicleState:
    """Kinematic body (camera) pose in the marker/world frame plus sim time."""

    pose: Pose
    time: float


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vehicle_step(state: VehicleState, cmd: VelocityCommand, dt: float) -> VehicleState:
    """First-order (Euler) integration of a body-frame twist.

    The rotation is re-orthonormalized every step so drift never accumulates.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not cmd.is_finite:
        raise ValueError("velocity command has non-finite components")
    r = state.pose.rotation
    if not np.any(cmd.linear) and not np.any(cmd.angular):
        return VehicleState(state.pose, state.time + dt)
    t_new = state.pose.translation + r @ cmd.linear * dt
    r_new = orthonormalize(r + r @ _skew(cmd.angular) * dt)
    return VehicleState(
        Pose(r_new, t_new, state.pose.from_frame, state.pose.to_frame), state.time + dt
    )


@dataclass(frozen=True)
class TickRecord:
    """One trace row; est_* fields are the camera position in the marker frame
    according to the last estimate in this tick (None when there was none)."""

    time: float
    x: float
    y: float
    z: float
    yaw: float
    distance: float
    detect_status: str
    validity: str
    est_x: float | None
    est_y: float | None
    est_z: float | None
    est_yaw: float | None
    displayed_config: int
    displayed_family: str
    displayed_size: float
    displayed_cells: int
    believed_config: int
    cmd_vx: float
    cmd_vy: float
    cmd_vz: float
    cmd_wz: float
    landing: int


@dataclass(frozen=True)
class EventRecord:
    """Marker-update-path event for the exportable protocol log."""

    time: float
    kind: str  # command | display | confirmation | detector-update | update-complete
    config_id: int


@dataclass
class SimTrace:
    """Full record of one run plus the counters the metrics derive from.

    ``stamps`` is the validity audit: one (capture_time, displayed_config_id,
    computed_against_id, reason) tuple per successful detection.
    """

    records: list
    events: list
    stamps: list
    status: str  # landed | timeout | diverged
    touchdown_time: float | None
    final_state: tuple
    detection_count: int
    dropout_count: int
    invalid_count: int
    marker_update_count: int
    family_switch_count: int
    max_detection_distance: float | None
    desired_yaw: float
    seed: int
    strategy: str
    scheme_requested: str
    scheme_effective: str
    size_rule: str


TRACE_COLUMNS = (
    "time",
    "x",
    "y",
    "z",
    "yaw",
    "distance",
    "detect_status",
    "validity",
    "est_x",
    "est_y",
    "est_z",
    "est_yaw",
    "displayed_config",
    "displayed_family",
    "displayed_size",
    "displayed_cells",
    "believed_config",
    "cmd_vx",
    "cmd_vy",
    "cmd_vz",
    "cmd_wz",
    "landing",
)


class _Engine:
    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.rng = np.random.default_rng(config.seed)
        x, y, z = config.initial_position
        self.state = VehicleState(camera_pose_in_marker(x, y, z, config.initial_yaw), 0.0)
        self.desired = invert(
            camera_pose_in_marker(0.0, 0.0, config.desired_height, config.desired_yaw, "camera_desired")
        )

        initial = self._initial_config()
        self.displayed = initial
        self.detector = DetectorParams(believed_config=initial, intrinsics=config.intrinsics)
        self.commanded = initial

        self.scheme_requested = config.timing_scheme
        if config.timing_scheme == "optimized" and not evaluate_optimized_conditions(
            config.delays
        ).all_hold:
            self.scheme = "safe"
        else:
            self.scheme = config.timing_scheme

        self.cmd = VelocityCommand.zero()
        self._applied_cmd = self.cmd
        self.v_applied = np.zeros(3)
        self.w_applied = np.zeros(3)
        self.landing = False
        self.last_valid: PoseEstimate | None = None
        self.in_flight = None  # (timeline, MarkerCommand)
        self.pending: MarkerCommand | None = None
        self.timelines = []  # recent update timelines, newest last

        self.records: list[TickRecord] = []
        self.events: list[EventRecord] = []
        self.stamp_audit: list[tuple] = []
        self.detections = 0
        self.dropouts = 0
        self.invalid = 0
        self.updates = 0
        self.family_switches = 0
        self.max_detect_dist: float | None = None

        self.status = "running"
        self.touchdown_time: float | None = None
        self._note_detect = ""
        self._note_valid = ""
        self._note_est = (None, None, None, None)
        self._next_record = 0.0
        self._heap = []
        self._seq = 0

    # -- setup -----------------------------------------------------------

    def _initial_config(self) -> MarkerConfig:
        cfg = self.cfg
        if cfg.strategy == "static-full-pose":
            return MarkerConfig.single(
                0, cfg.full_pose_family, cfg.screen.min_dim * cfg.fill_factor,
                cfg.screen.min_dim * cfg.fill_factor,
            )
        # dynamic and static-long-range both start from the long-range
        # bootstrap so the first detection succeeds from far away
        return bootstrap_config(cfg.long_range_family, cfg.screen, cfg.fill_factor)

    def _push(self, time: float, prio: int, kind: str, payload=None):
        heapq.heappush(self._heap, (time, prio, self._seq, kind, payload))
        self._seq += 1

    # -- integration and recording ----------------------------------------

    def _set_command(self, cmd: VelocityCommand):
        self.cmd = cmd
        if self.cfg.command_lag <= 0:
            self.v_applied = cmd.linear
            self.w_applied = cmd.angular
            self._applied_cmd = cmd

    def _integrate(self, dt: float):
        if self.cfg.command_lag > 0:
            alpha = 1.0 - math.exp(-dt / self.cfg.command_lag)
            self.v_applied = self.v_applied + (self.cmd.linear - self.v_applied) * alpha
            self.w_applied = self.w_applied + (self.cmd.angular - self.w_applied) * alpha
            self._applied_cmd = VelocityCommand(self.v_applied, self.w_applied)
        self.state = vehicle_step(self.state, self._applied_cmd, dt)

    def _check_termination(self) -> bool:
        t = self.state.pose.translation
        if self.landing and t[2] <= self.cfg.touchdown_height:
            self.status = "landed"
            self.touchdown_time = self.state.time
            return True
        if (
            math.hypot(t[0], t[1]) > self.cfg.bounds_radius
            or t[2] > self.cfg.bounds_height
            or t[2] < -0.05
        ):
            self.status = "diverged"
            return True
        return False

    def _advance_to(self, target: float) -> bool:
        """Integrate up to ``target``, recording at tick boundaries.

        Returns False when the run terminated during the advance.
        """
        while self.state.time < target - _TIME_EPS:
            bound = min(self._next_record, target)
            dt = bound - self.state.time
            if dt > _TIME_EPS:
                self._integrate(dt)
                if self._check_termination():
                    self._record()
                    return False
            if self._next_record <= self.state.time + _TIME_EPS:
                self._record()
                self._next_record += self.cfg.tick_step
        return True

    def _record(self):
        t = self.state.pose.translation
        yaw = _vehicle_yaw(self.state.pose)
        est = self._note_est
        self.records.append(
            TickRecord(
                time=self.state.time,
                x=float(t[0]),
                y=float(t[1]),
                z=float(t[2]),
                yaw=yaw,
                distance=float(np.linalg.norm(t)),
                detect_status=self._note_detect,
                validity=self._note_valid,
                est_x=est[0],
                est_y=est[1],
                est_z=est[2],
                est_yaw=est[3],
                displayed_config=self.displayed.config_id,
                displayed_family="full_pose"
                if self.displayed.family.kind is FamilyKind.SHORT_RANGE_FULL_POSE
                else "long_range",
                displayed_size=self.displayed.marker_size,
                displayed_cells=self.displayed.n_cells,
                believed_config=self.detector.believed_config.config_id,
                cmd_vx=float(self.cmd.linear[0]),
                cmd_vy=float(self.cmd.linear[1]),
                cmd_vz=float(self.cmd.linear[2]),
                cmd_wz=float(self.cmd.angular[2]),
                landing=int(self.landing),
            )
        )
        self._note_detect = ""
        self._note_valid = ""
        self._note_est = (None, None, None, None)

    # -- event handlers ----------------------------------------------------

    def _timeline_for(self, capture_time: float):
        for timeline in reversed(self.timelines):
            lo, hi = wait_window(timeline, self.scheme)
            if capture_time >= lo:
                return timeline if capture_time < hi else None
        return None

    def _on_grab(self, now: float):
        true_rel = invert(self.state.pose)  # marker -> camera
        transport = self.cfg.delays.video.sample(self.rng) + self.cfg.delays.pose.sample(self.rng)
        self._push(now + transport, _PRIO_POSE_READY, "pose_ready", (now, true_rel, self.displayed))
        self._push(now + self.cfg.intrinsics.frame_period, _PRIO_GRAB, "grab")

    def _on_pose_ready(self, now: float, capture_time, true_rel, displayed_at_capture):
        result = simulate_detection(
            true_rel, displayed_at_capture, self.detector, self.rng, capture_time=capture_time
        )
        if isinstance(result, NoDetection):
            self.dropouts += 1
            self._note_detect = f"no-detection:{result.reason}"
            return
        self.detections += 1
        true_dist = float(np.linalg.norm(true_rel.translation))
        if self.max_detect_dist is None or true_dist > self.max_detect_dist:
            self.max_detect_dist = true_dist
        stamp = stamp_validity(
            capture_time,
            displayed_at_capture.config_id,
            result.computed_against,
            self._timeline_for(capture_time),
            self.scheme,
        )
        self.stamp_audit.append(
            (capture_time, displayed_at_capture.config_id, result.computed_against, stamp.reason)
        )
        self._note_detect = "detected"
        self._note_valid = stamp.reason
        cam = camera_position_in_marker(result)
        self._note_est = (float(cam[0]), float(cam[1]), float(cam[2]), result.yaw)
        if not stamp.valid:
            self.invalid += 1
            return

        self.last_valid = result
        error, rotation = error_and_rotation(result, self.desired)
        cmd = clamp_command(
            control_law(error, self.cfg.gain, rotation, stamp=now),
            self.cfg.max_linear_speed,
            self.cfg.max_angular_speed,
        )
        if (
            not self.landing
            and self.cfg.landing_error_threshold is not None
            and math.hypot(cam[0], cam[1]) < self.cfg.landing_error_threshold
            # only arm once the vehicle is tracking near the desired height
            and abs(cam[2] - self.cfg.desired_height) < 2.0 * self.cfg.landing_error_threshold
        ):
            self.landing = True
        if self.landing:
            cmd = with_descent(cmd, self.cfg.descent_rate)
        self._set_command(cmd)

        if self.cfg.strategy == "dynamic":
            proposal = select_marker(
                result,
                self.cfg.policy,
                self.cfg.intrinsics,
                self.cfg.screen,
                self.commanded,
                self.cfg.long_range_family,
                self.cfg.full_pose_family,
                now=now,
                size_variant=self.cfg.size_rule,
                gap_fraction=self.cfg.gap_fraction,
                fill_factor=self.cfg.fill_factor,
            )
            if proposal is not None:
                if self.in_flight is not None:
                    self.pending = proposal  # coalesce: only the latest survives
                else:
                    self._start_update(proposal, now)

    def _start_update(self, command: MarkerCommand, now: float):
        sample = self.cfg.delays.sample(self.rng)
        timeline = schedule_update(
            now, sample, self.cfg.intrinsics.frame_period, self.cfg.delays.effective_safety_margin
        )
        new_id = command.new_config.config_id
        if command.new_config.family.kind is not self.commanded.family.kind:
            self.family_switches += 1
        self.commanded = command.new_config
        self.in_flight = (timeline, command)
        self.timelines.append(timeline)
        if len(self.timelines) > 8:
            self.timelines.pop(0)
        self.updates += 1
        self.events.append(EventRecord(now, "command", new_id))
        self._push(timeline.display_at, _PRIO_DISPLAY, "display", command)
        self._push(timeline.confirm_at, _PRIO_CONFIRM, "confirmation", command)
        self._push(
            detector_switch_time(timeline, self.scheme), _PRIO_DETECTOR_UPDATE, "detector_update", command
        )
        self._push(
            update_complete_time(timeline, self.scheme), _PRIO_UPDATE_COMPLETE, "update_complete", command
        )

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimTrace:
        cfg = self.cfg
        self._push(0.0, _PRIO_GRAB, "grab")
        if cfg.landing_trigger_time is not None:
            self._push(cfg.landing_trigger_time, _PRIO_LANDING, "landing_trigger")
        self._push(cfg.duration, _PRIO_END, "end")

        while self._heap:
            time, _, _, kind, payload = heapq.heappop(self._heap)
            if not self._advance_to(time):
                break
            if kind == "end":
                self.status = "timeout"
                break
            if kind == "grab":
                self._on_grab(time)
            elif kind == "pose_ready":
                self._on_pose_ready(time, *payload)
            elif kind == "display":
                self.displayed = payload.new_config
                self.events.append(EventRecord(time, "display", payload.new_config.config_id))
            elif kind == "confirmation":
                self.events.append(EventRecord(time, "confirmation", payload.new_config.config_id))
            elif kind == "detector_update":
                self.detector = apply_update(self.detector, payload)
                self.events.append(EventRecord(time, "detector-update", payload.new_config.config_id))
            elif kind == "update_complete":
                self.events.append(EventRecord(time, "update-complete", payload.new_config.config_id))
                self.in_flight = None
                if self.pending is not None:
                    proposal, self.pending = self.pending, None
                    self._start_update(proposal, time)
            elif kind == "landing_trigger":
                self.landing = True
                self._set_command(with_descent(self.cmd, cfg.descent_rate))

        if not self.records or self.records[-1].time < self.state.time - _TIME_EPS:
            self._record()
        t = self.state.pose.translation
        final_yaw = _vehicle_yaw(self.state.pose)
        return SimTrace(
            records=self.records,
            events=self.events,
            stamps=self.stamp_audit,
            status=self.status,
            touchdown_time=self.touchdown_time,
            final_state=(float(t[0]), float(t[1]), float(t[2]), final_yaw),
            detection_count=self.detections,
            dropout_count=self.dropouts,
            invalid_count=self.invalid,
            marker_update_count=self.updates,
            family_switch_count=self.family_switches,
            max_detection_distance=self.max_detect_dist,
            desired_yaw=cfg.desired_yaw,
            seed=cfg.seed,
            strategy=cfg.strategy,
            scheme_requested=self.scheme_requested,
            scheme_effective=self.scheme,
            size_rule=cfg.size_rule,
        )


def run_scenario(config: ScenarioConfig) -> SimTrace:
    """Run one scenario to touchdown, divergence, or the configured duration."""
    return _Engine(config).run()


def collect_metrics(trace: SimTrace) -> dict:
    """Summary record of a completed trace (the landing error is the
    horizontal distance from the marker center at touchdown)."""
    if not trace.records:
        raise ValueError("cannot summarize an empty trace")
    x, y, _, yaw = trace.final_state
    landed = trace.status == "landed"
    return {
        "status": trace.status,
        "landed": landed,
        "time_to_land": trace.touchdown_time if landed else None,
        "final_lateral_error": math.hypot(x, y),
        "final_yaw_error": abs(wrap_angle(yaw - trace.desired_yaw)),
        "initial_yaw_error": abs(wrap_angle(trace.records[0].yaw - trace.desired_yaw)),
        "touchdown_x": x if landed else None,
        "touchdown_y": y if landed else None,
        "detection_count": trace.detection_count,
        "dropout_count": trace.dropout_count,
        "invalid_count": trace.invalid_count,
        "marker_update_count": trace.marker_update_count,
        "family_switch_count": trace.family_switch_count,
        "max_detection_distance": trace.max_detection_distance,
        "seed": trace.seed,
        "strategy": trace.strategy,
        "timing_scheme": trace.scheme_effective,
        "size_rule": trace.size_rule,
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_to_csv(trace: SimTrace, path):
    """Write the per-tick records; one row per record, columns as documented
    in the README (SI units, radians)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace.records:
            writer.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])


def events_to_csv(trace: SimTrace, path):
    """Write the marker-update protocol event log."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("time", "event", "config_id"))
        for e in trace.events:
            writer.writerow([_fmt(e.time), e.kind, e.config_id])
