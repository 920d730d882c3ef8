"""Gaze-tracked foveated Gaussian-splat renderer."""

from _a3fr import (
    Camera,
    ClockMode,
    ConfigError,
    ExitModel,
    FormatError,
    FoveationConfig,
    FoveationProfile,
    FrameResult,
    FrameSchedule,
    FrameState,
    LatencyBreakdown,
    Mode,
    Scene,
    foveal_radius_px,
    load_scene,
    make_orbit_poses,
    make_synthetic_scene,
    profile_exits,
    psnr,
    render_frame,
    run_benchmark,
    ssim,
)

__all__ = [
    "Camera",
    "ClockMode",
    "ConfigError",
    "ExitModel",
    "FormatError",
    "FoveationConfig",
    "FoveationProfile",
    "FrameResult",
    "FrameSchedule",
    "FrameState",
    "LatencyBreakdown",
    "Mode",
    "Scene",
    "foveal_radius_px",
    "load_scene",
    "make_orbit_poses",
    "make_synthetic_scene",
    "profile_exits",
    "psnr",
    "render_frame",
    "run_benchmark",
    "ssim",
]
