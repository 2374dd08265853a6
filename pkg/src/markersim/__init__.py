"""markersim: closed-loop simulator for screen-displayed adaptive fiducial
markers, camera-guided landing, and the update-synchronization protocol
between display and detector."""

__version__ = "0.1.0"

from .geometry import (
    AngleAxis,
    CameraIntrinsics,
    OutOfView,
    Pose,
    angle_axis_to_rotation,
    compose,
    fov_half_angle,
    invert,
    project_point,
    rotation_to_angle_axis,
)
from .marker import (
    BoardCell,
    FamilyKind,
    MarkerConfig,
    MarkerFamily,
    NoiseProfile,
    Screen,
    board_layout,
    camera_freedom_angle,
    clamp_to_screen,
    optimal_marker_size,
)
from .marker_control import (
    MarkerCommand,
    SwitchPolicy,
    apply_update,
    bootstrap_config,
    select_marker,
)
from .pbvs import (
    FeatureVector,
    VelocityCommand,
    clamp_command,
    compute_error,
    control_law,
    error_and_rotation,
)
from .perception import (
    DetectorParams,
    NoDetection,
    PoseEstimate,
    pixel_footprint,
    simulate_detection,
)
from .scenario import (
    ScenarioConfig,
    load_scenario,
    nominal_landing_scenario,
    scenario_from_dict,
)
from .simulation import (
    SimTrace,
    VehicleState,
    collect_metrics,
    run_scenario,
    trace_to_csv,
    vehicle_step,
)
from .timing import (
    DelayModel,
    DelaySample,
    DelaySpec,
    UpdateTimeline,
    ValidityStamp,
    compute_optimized_wait,
    compute_safe_wait,
    evaluate_optimized_conditions,
    replay_update_frames,
    schedule_update,
    stamp_validity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
