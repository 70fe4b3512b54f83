"""Breathing-rate estimation from UWB channel impulse responses by fusing delay bins."""

__version__ = "0.1.0"

from .calib import CalibrationConfig, CirCalibrator, calibrate, calibrate_amplitude, calibrate_delay
from .errors import (
    CalibrationError,
    CirFusionError,
    DegenerateWindowError,
    RecordingFormatError,
    ReferenceNotFoundError,
    ScenarioError,
)
from .formats import parse_recording, read_recording, write_recording
from .fusion import BoIFusion, BoISelection, SnapshotMatrix, build_pair, fuse, select_bin, solve_fusion
from .model import (
    ArtifactSpec,
    CirRecording,
    CirSnapshot,
    EmulatorMotion,
    MultipathChannel,
    PathSpec,
    generate_recording,
    sample_cir,
)
from .pipeline import (
    BreathingEstimate,
    BreathingRateEstimator,
    ScenarioReport,
    WindowConfig,
    compare_methods,
    estimate_window,
    interpolate_uniform,
    run_recording,
)
from .scenario import (
    Scenario,
    load_scenario,
    los_scenario,
    nlos_spread_scenario,
    preset,
    simulate,
    static_scenario,
)
from .spectral import BandOfInterest, DftPlan, confidence_index, detect_peak, psd_on_grid

__all__ = [name for name in dir() if not name.startswith("_")]
