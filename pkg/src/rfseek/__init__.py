"""Doppler-feedback RF source seeking for a constant-speed UAV."""

from .channel import (
    BeaconCapture,
    CfoProcess,
    PathSet,
    build_paths,
    calibrate_gain,
    evolve_cfo,
    rss_at,
    synthesize_beacon,
)
from .estimator import (
    Measurement,
    estimate_frequency,
    measure_abstract,
    measure_bearing,
    quad_interp,
    spectrum,
)
from .harness import (
    ABSTRACT,
    FULL,
    EpisodeLog,
    EpisodeOptions,
    McSummary,
    convergence_trace,
    monte_carlo,
    run_episode,
    summarize,
)
from .seeker import (
    Seeker,
    SeekerConfig,
    error_step,
    lyapunov_decrement,
    next_heading,
    reject_outlier,
    smooth,
    stage1_direction,
    stage2_update,
)
from .world import (
    ConfigError,
    GeometryError,
    Scatterer,
    Scenario,
    UavState,
    advance,
    bearing_to_source,
    load_scenario,
    path_angles,
    place_scatterers,
)

__version__ = "0.1.0"
