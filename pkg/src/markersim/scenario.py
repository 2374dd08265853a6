"""Scenario configuration: everything a simulation run needs, with a strict
JSON loader (unknown keys are rejected so typos fail fast, all quantities SI,
angles in radians).

An empty JSON document gives the bundled landing scenario: a 30 Hz VGA camera
over a 15 cm display, long-range marker bootstrap, family switch at 1.2 m
with hysteresis, tracking height 2.5 m, constant-rate descent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import CameraIntrinsics
from .marker import MarkerFamily, NoiseProfile, Screen
from .marker_control import SwitchPolicy
from .timing import DelayModel, DelaySpec

STRATEGIES = ("dynamic", "static-full-pose", "static-long-range")
TIMING_SCHEMES = ("safe", "optimized")
SIZE_RULES = ("consistent", "verbatim")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete parameter set for one run; defaults are the bundled landing
    scenario."""

    intrinsics: CameraIntrinsics = CameraIntrinsics(
        fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480, frame_period=1.0 / 30.0
    )
    screen: Screen = Screen(width=0.15, height=0.15, refresh_delay=0.0)
    long_range_family: MarkerFamily = MarkerFamily.long_range_default()
    full_pose_family: MarkerFamily = field(
        default_factory=lambda: replace(MarkerFamily.full_pose_default(), max_detection_range=1.5)
    )
    policy: SwitchPolicy = SwitchPolicy()
    delays: DelayModel = DelayModel(
        detector_update=DelaySpec.constant(0.005),
        display=DelaySpec.constant(0.030),
        display_confirm=DelaySpec.uniform(0.035, 0.060),
        video=DelaySpec.constant(0.005),
        pose=DelaySpec.constant(0.002),
        frame_period=1.0 / 30.0,
        safety_margin=None,
    )
    gain: float = 0.8
    max_linear_speed: float = 1.0
    max_angular_speed: float = 1.0
    descent_rate: float = 0.3
    command_lag: float = 0.0
    initial_position: tuple[float, float, float] = (0.4, -0.3, 2.5)
    initial_yaw: float = math.radians(30.0)
    desired_height: float = 2.5
    desired_yaw: float = 0.0
    landing_trigger_time: float | None = None
    landing_error_threshold: float | None = 0.10
    duration: float = 60.0
    tick_step: float = 0.01
    timing_scheme: str = "optimized"
    size_rule: str = "consistent"
    strategy: str = "dynamic"
    touchdown_height: float = 0.02
    bounds_radius: float = 10.0
    bounds_height: float = 30.0
    batch_offset_radius: float = 0.5
    batch_yaw_half_range: float = math.radians(45.0)
    gap_fraction: float = 0.1
    fill_factor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if not (0 < self.tick_step <= self.intrinsics.frame_period / 2.0):
            raise ValueError(
                f"tick_step must lie in (0, frame_period/2] = "
                f"(0, {self.intrinsics.frame_period / 2.0:.6g}], got {self.tick_step}"
            )
        if self.timing_scheme not in TIMING_SCHEMES:
            raise ValueError(f"timing_scheme must be one of {TIMING_SCHEMES}, got '{self.timing_scheme}'")
        if self.size_rule not in SIZE_RULES:
            raise ValueError(f"size_rule must be one of {SIZE_RULES}, got '{self.size_rule}'")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got '{self.strategy}'")
        if self.descent_rate <= 0:
            raise ValueError(f"descent_rate must be > 0, got {self.descent_rate}")
        if self.gain <= 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if self.delays.frame_period != self.intrinsics.frame_period:
            raise ValueError(
                "delay model frame_period must equal the camera frame_period "
                f"({self.delays.frame_period} != {self.intrinsics.frame_period})"
            )


def nominal_landing_scenario(**overrides) -> ScenarioConfig:
    """The bundled landing scenario, optionally with field overrides."""
    return replace(ScenarioConfig(), **overrides) if overrides else ScenarioConfig()


# --- strict JSON parsing ----------------------------------------------------


def _check_keys(section: dict, allowed: tuple, path: str):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ValueError(f"unknown config key(s) {unknown} in '{path}' (allowed: {sorted(allowed)})")


def _number(section: dict, key: str, default, path: str):
    value = section.get(key, default)
    if value is None:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError(f"'{path}.{key}' must be a number, got {value!r}")
    return float(value)


def _delay_spec(value, path: str) -> DelaySpec:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return DelaySpec.constant(float(value))
    if isinstance(value, dict):
        _check_keys(value, ("constant", "uniform"), path)
        if "constant" in value and "uniform" in value:
            raise ValueError(f"'{path}' must give either 'constant' or 'uniform', not both")
        if "constant" in value:
            return DelaySpec.constant(float(value["constant"]))
        if "uniform" in value:
            lo, hi = value["uniform"]
            return DelaySpec.uniform(float(lo), float(hi))
    raise ValueError(f"'{path}' must be a number, {{'constant': x}} or {{'uniform': [lo, hi]}}")


def _noise_profile(section, default: NoiseProfile, path: str) -> NoiseProfile:
    if section is None:
        return default
    _check_keys(section, ("sigma_at_1m", "range_exponent"), path)
    return NoiseProfile(
        sigma_at_1m=_number(section, "sigma_at_1m", default.sigma_at_1m, path),
        range_exponent=_number(section, "range_exponent", default.range_exponent, path),
    )


def _family(section, default: MarkerFamily, path: str) -> MarkerFamily:
    if section is None:
        return default
    allowed = (
        "max_detection_range",
        "min_pixel_footprint",
        "yields_yaw",
        "position_noise",
        "yaw_noise",
    )
    _check_keys(section, allowed, path)
    yields_yaw = section.get("yields_yaw", default.yields_yaw)
    if not isinstance(yields_yaw, bool):
        raise ValueError(f"'{path}.yields_yaw' must be a boolean, got {yields_yaw!r}")
    if yields_yaw:
        yaw_default = default.yaw_noise if default.yaw_noise is not None else NoiseProfile(0.0, 0.0)
        yaw_noise = _noise_profile(section.get("yaw_noise"), yaw_default, f"{path}.yaw_noise")
    else:
        if section.get("yaw_noise") is not None:
            raise ValueError(f"'{path}.yaw_noise' must be null when yields_yaw is false")
        yaw_noise = None
    return MarkerFamily(
        kind=default.kind,
        max_detection_range=_number(section, "max_detection_range", default.max_detection_range, path),
        min_pixel_footprint=_number(section, "min_pixel_footprint", default.min_pixel_footprint, path),
        yields_yaw=yields_yaw,
        position_noise=_noise_profile(
            section.get("position_noise"), default.position_noise, f"{path}.position_noise"
        ),
        yaw_noise=yaw_noise,
    )


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed JSON document.

    Every section and key is optional (defaults are the bundled scenario),
    but unknown keys anywhere raise a ValueError naming the offending field.
    """
    if not isinstance(doc, dict):
        raise ValueError(f"config document must be a JSON object, got {type(doc).__name__}")
    base = ScenarioConfig()
    sections = (
        "camera",
        "screen",
        "families",
        "policy",
        "delays",
        "controller",
        "landing",
        "initial",
        "desired",
        "run",
        "batch",
        "marker",
    )
    _check_keys(doc, sections, "config")

    cam = doc.get("camera", {})
    _check_keys(cam, ("fx", "fy", "cx", "cy", "width", "height", "frame_period"), "camera")
    intr = base.intrinsics
    intrinsics = CameraIntrinsics(
        fx=_number(cam, "fx", intr.fx, "camera"),
        fy=_number(cam, "fy", intr.fy, "camera"),
        cx=_number(cam, "cx", intr.cx, "camera"),
        cy=_number(cam, "cy", intr.cy, "camera"),
        width=int(_number(cam, "width", intr.width, "camera")),
        height=int(_number(cam, "height", intr.height, "camera")),
        frame_period=_number(cam, "frame_period", intr.frame_period, "camera"),
    )

    scr = doc.get("screen", {})
    _check_keys(scr, ("width", "height", "refresh_delay"), "screen")
    screen = Screen(
        width=_number(scr, "width", base.screen.width, "screen"),
        height=_number(scr, "height", base.screen.height, "screen"),
        refresh_delay=_number(scr, "refresh_delay", base.screen.refresh_delay, "screen"),
    )

    fams = doc.get("families", {})
    _check_keys(fams, ("long_range", "full_pose"), "families")
    long_range = _family(fams.get("long_range"), base.long_range_family, "families.long_range")
    full_pose = _family(fams.get("full_pose"), base.full_pose_family, "families.full_pose")

    pol = doc.get("policy", {})
    _check_keys(
        pol,
        (
            "switch_to_full_pose_below",
            "switch_to_long_range_above",
            "scale_fraction",
            "rescale_deadband",
        ),
        "policy",
    )
    policy = SwitchPolicy(
        switch_to_full_pose_below=_number(
            pol, "switch_to_full_pose_below", base.policy.switch_to_full_pose_below, "policy"
        ),
        switch_to_long_range_above=_number(
            pol, "switch_to_long_range_above", base.policy.switch_to_long_range_above, "policy"
        ),
        scale_fraction=_number(pol, "scale_fraction", base.policy.scale_fraction, "policy"),
        rescale_deadband=_number(pol, "rescale_deadband", base.policy.rescale_deadband, "policy"),
    )

    dly = doc.get("delays", {})
    _check_keys(
        dly,
        ("detector_update", "display", "display_confirm", "video", "pose", "safety_margin"),
        "delays",
    )
    base_d = base.delays

    def spec_or(key: str, default: DelaySpec) -> DelaySpec:
        return _delay_spec(dly[key], f"delays.{key}") if key in dly else default

    display = spec_or("display", base_d.display)
    if screen.refresh_delay > 0:
        # The display path includes the physical refresh of the screen.
        display = DelaySpec(
            display.low + screen.refresh_delay,
            None if display.high is None else display.high + screen.refresh_delay,
        )
    delays = DelayModel(
        detector_update=spec_or("detector_update", base_d.detector_update),
        display=display,
        display_confirm=spec_or("display_confirm", base_d.display_confirm),
        video=spec_or("video", base_d.video),
        pose=spec_or("pose", base_d.pose),
        frame_period=intrinsics.frame_period,
        safety_margin=_number(dly, "safety_margin", None, "delays"),
    )

    ctl = doc.get("controller", {})
    _check_keys(
        ctl,
        ("gain", "max_linear_speed", "max_angular_speed", "descent_rate", "command_lag"),
        "controller",
    )

    lnd = doc.get("landing", {})
    _check_keys(lnd, ("trigger_time", "error_threshold"), "landing")
    trigger_time = _number(lnd, "trigger_time", base.landing_trigger_time, "landing")
    error_threshold = _number(lnd, "error_threshold", base.landing_error_threshold, "landing")

    ini = doc.get("initial", {})
    _check_keys(ini, ("position", "yaw"), "initial")
    position = ini.get("position", list(base.initial_position))
    if not (isinstance(position, (list, tuple)) and len(position) == 3):
        raise ValueError(f"'initial.position' must be a 3-element list, got {position!r}")

    des = doc.get("desired", {})
    _check_keys(des, ("height", "yaw"), "desired")

    run = doc.get("run", {})
    _check_keys(
        run,
        (
            "duration",
            "tick_step",
            "timing_scheme",
            "size_rule",
            "strategy",
            "touchdown_height",
            "bounds_radius",
            "bounds_height",
            "seed",
        ),
        "run",
    )
    for key, choices in (
        ("timing_scheme", TIMING_SCHEMES),
        ("size_rule", SIZE_RULES),
        ("strategy", STRATEGIES),
    ):
        if key in run and run[key] not in choices:
            raise ValueError(f"'run.{key}' must be one of {choices}, got {run[key]!r}")

    bat = doc.get("batch", {})
    _check_keys(bat, ("offset_radius", "yaw_half_range"), "batch")

    mrk = doc.get("marker", {})
    _check_keys(mrk, ("gap_fraction", "fill_factor"), "marker")

    return ScenarioConfig(
        intrinsics=intrinsics,
        screen=screen,
        long_range_family=long_range,
        full_pose_family=full_pose,
        policy=policy,
        delays=delays,
        gain=_number(ctl, "gain", base.gain, "controller"),
        max_linear_speed=_number(ctl, "max_linear_speed", base.max_linear_speed, "controller"),
        max_angular_speed=_number(ctl, "max_angular_speed", base.max_angular_speed, "controller"),
        descent_rate=_number(ctl, "descent_rate", base.descent_rate, "controller"),
        command_lag=_number(ctl, "command_lag", base.command_lag, "controller"),
        initial_position=tuple(float(v) for v in position),
        initial_yaw=_number(ini, "yaw", base.initial_yaw, "initial"),
        desired_height=_number(des, "height", base.desired_height, "desired"),
        desired_yaw=_number(des, "yaw", base.desired_yaw, "desired"),
        landing_trigger_time=trigger_time,
        landing_error_threshold=error_threshold,
        duration=_number(run, "duration", base.duration, "run"),
        tick_step=_number(run, "tick_step", base.tick_step, "run"),
        timing_scheme=run.get("timing_scheme", base.timing_scheme),
        size_rule=run.get("size_rule", base.size_rule),
        strategy=run.get("strategy", base.strategy),
        touchdown_height=_number(run, "touchdown_height", base.touchdown_height, "run"),
        bounds_radius=_number(run, "bounds_radius", base.bounds_radius, "run"),
        bounds_height=_number(run, "bounds_height", base.bounds_height, "run"),
        batch_offset_radius=_number(bat, "offset_radius", base.batch_offset_radius, "batch"),
        batch_yaw_half_range=_number(bat, "yaw_half_range", base.batch_yaw_half_range, "batch"),
        gap_fraction=_number(mrk, "gap_fraction", base.gap_fraction, "marker"),
        fill_factor=_number(mrk, "fill_factor", base.fill_factor, "marker"),
        seed=int(run.get("seed", base.seed)),
    )


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def randomized_initial_conditions(
    config: ScenarioConfig, seed_base: int, index: int
) -> ScenarioConfig:
    """Per-run initial conditions for batch experiments.

    Lateral offset uniform over a disc of ``batch_offset_radius`` and yaw
    uniform in +-``batch_yaw_half_range``; the run seed becomes
    ``seed_base + index``.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed_base, index)))
    radius = config.batch_offset_radius * math.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    yaw = rng.uniform(-config.batch_yaw_half_range, config.batch_yaw_half_range)
    return replace(
        config,
        initial_position=(
            radius * math.cos(angle),
            radius * math.sin(angle),
            config.initial_position[2],
        ),
        initial_yaw=yaw,
        seed=seed_base + index,
    )
