"""Sliding-window breathing-rate estimation over calibrated recordings."""

from dataclasses import asdict, dataclass, field, replace
import math

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_cir_matrix, check_positive
from .calib import CalibrationConfig, calibrate
from .errors import DegenerateWindowError
from .fusion import SnapshotMatrix, fuse, select_bin
from .spectral import (
    BandOfInterest,
    DftPlan,
    band_energy_ratio,
    confidence_index,
    detect_peak,
    psd_on_grid,
)

METHODS = ("selection", "fusion")
# "exclusive": S - N windows for hop 1 (the final alignment is dropped);
# "inclusive": every full alignment, S - N + 1 windows for hop 1.
COUNT_CONVENTIONS = ("exclusive", "inclusive")


@dataclass(frozen=True)
class WindowConfig:
    window_snapshots: int = 800
    hop_snapshots: int = 1
    nominal_rate_hz: float = 19.3
    resolution_hz: float = 0.001
    band: BandOfInterest = BandOfInterest()
    method: str = "fusion"
    rank_tol: float = 1e-10
    noise_floor_factor: float = 1.2
    count_convention: str = "exclusive"
    edge_margin_bins: float = 0.5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.count_convention not in COUNT_CONVENTIONS:
            raise ValueError(f"count_convention must be one of {COUNT_CONVENTIONS}")
        if int(self.window_snapshots) != self.window_snapshots or self.window_snapshots < 2:
            raise ValueError("window_snapshots must be an integer >= 2")
        if int(self.hop_snapshots) != self.hop_snapshots or self.hop_snapshots < 1:
            raise ValueError("hop_snapshots must be an integer >= 1")
        check_positive(self.nominal_rate_hz, "nominal_rate_hz")
        check_positive(self.resolution_hz, "resolution_hz")
        if self.noise_floor_factor < 0:
            raise ValueError("noise_floor_factor must be >= 0")
        if self.edge_margin_bins < 0:
            raise ValueError("edge_margin_bins must be >= 0")
        self.band.check_rate(self.nominal_rate_hz)
        duration = self.window_snapshots / self.nominal_rate_hz
        if duration * self.band.f_low_hz < 2:
            raise ValueError(
                f"a {duration:.1f} s window holds fewer than two periods at {self.band.f_low_hz} Hz"
            )

    def plan(self):
        return DftPlan(self.window_snapshots, self.nominal_rate_hz, self.band, self.edge_margin_bins)

    def to_dict(self):
        d = asdict(self)
        d["band"] = str(self.band)
        return d


@dataclass(frozen=True)
class BreathingEstimate:
    """One window's result. ``rate_hz`` is ``None`` when the window was degenerate."""

    window_start_index: int
    rate_hz: float | None
    confidence: float | None
    method: str
    lam: float | None = None
    band_ratio: float | None = None
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"


@dataclass(frozen=True)
class ScenarioReport:
    estimates: tuple
    ground_truth_hz: float | None
    method: str
    config: dict = field(default_factory=dict)

    @property
    def valid(self):
        return [e for e in self.estimates if e.ok]

    @property
    def n_failed(self):
        return len(self.estimates) - len(self.valid)

    @property
    def abs_errors(self):
        if self.ground_truth_hz is None:
            return np.zeros(0)
        return np.array([abs(e.rate_hz - self.ground_truth_hz) for e in self.valid])

    @property
    def median_abs_error_hz(self):
        errs = self.abs_errors
        return float(np.median(errs)) if errs.size else None

    @property
    def median_confidence(self):
        conf = [e.confidence for e in self.valid]
        return float(np.median(conf)) if conf else None

    def summary(self):
        return {
            "method": self.method,
            "n_windows": len(self.estimates),
            "n_failed": self.n_failed,
            "ground_truth_hz": self.ground_truth_hz,
            "median_abs_error_hz": self.median_abs_error_hz,
            "median_confidence": self.median_confidence,
            "config": self.config,
        }


def interpolate_uniform(window, nominal_rate_hz, timestamps=None):
    """Resample snapshots onto ``t0 + n / nominal_rate_hz``, ``n = 0 .. N-1``.

    ``window`` is a list of ``CirSnapshot`` or, with ``timestamps`` given, an
    ``(N, n_bins)`` array. Each bin is linearly interpolated (real and
    imaginary parts); grid points past the last timestamp take the last
    snapshot's value.
    """
    if timestamps is None:
        window = list(window)
        timestamps = [s.timestamp_s for s in window]
        bins = np.array([np.asarray(s.bins) for s in window], dtype=np.complex128)
    else:
        bins = check_cir_matrix(window, "window")
    ts = np.asarray(timestamps, dtype=float)
    nominal_rate_hz = check_positive(nominal_rate_hz, "nominal_rate_hz")
    if ts.size < 2 or ts.size != bins.shape[0]:
        raise ValueError("need at least two snapshots with one timestamp each")
    if not np.all(np.diff(ts) > 0):
        raise ValueError("timestamps must be strictly increasing")
    n = ts.size
    grid = ts[0] + np.arange(n) / nominal_rate_hz
    idx = np.clip(np.searchsorted(ts, grid, side="right") - 1, 0, n - 2)
    frac = (grid - ts[idx]) / (ts[idx + 1] - ts[idx])
    frac = np.clip(frac, 0.0, 1.0)[:, None]
    out = bins[idx] * (1.0 - frac) + bins[idx + 1] * frac
    # exact node values where the grid hits a timestamp
    hit = frac[:, 0] == 0.0
    out[hit] = bins[idx[hit]]
    hit = frac[:, 0] == 1.0
    out[hit] = bins[idx[hit] + 1]
    return SnapshotMatrix(out, nominal_rate_hz)


def _reduce(h, cfg, plan):
    if cfg.method == "selection":
        _, x = select_bin(h, plan)
        return x, None
    weights, x = fuse(h, plan, cfg.rank_tol, cfg.noise_floor_factor)
    return x, weights.lam


def estimate_window(matrix, cfg=WindowConfig(), window_start_index=0):
    """Reduce one window to a sequence and locate its PSD peak inside the band."""
    h = check_cir_matrix(matrix)
    if h.shape[0] != cfg.window_snapshots:
        raise ValueError(f"window has {h.shape[0]} rows, config expects {cfg.window_snapshots}")
    plan = cfg.plan()
    try:
        x, lam = _reduce(h, cfg, plan)
    except DegenerateWindowError:
        return BreathingEstimate(window_start_index, None, None, cfg.method, status="degenerate")
    spec = psd_on_grid(x, cfg.nominal_rate_hz, cfg.band, cfg.resolution_hz)
    rate, _ = detect_peak(spec)
    return BreathingEstimate(
        window_start_index,
        rate,
        confidence_index(spec),
        cfg.method,
        lam,
        band_energy_ratio(x, plan),
    )


def window_starts(n_snapshots, cfg=WindowConfig()):
    """Start indices of the sliding windows."""
    span = n_snapshots - cfg.window_snapshots
    if span < 0:
        return range(0)
    if cfg.count_convention == "exclusive":
        count = max(math.ceil(span / cfg.hop_snapshots), 1)
    else:
        count = span // cfg.hop_snapshots + 1
    return range(0, count * cfg.hop_snapshots, cfg.hop_snapshots)


def iter_windows(recording, cfg=WindowConfig()):
    """Yield ``(start_index, SnapshotMatrix)`` for every window of a calibrated recording.

    Only the bins listed in ``recording.meta["valid_bins"]`` (set by
    calibration) are kept; zero-filled edge bins would inject spurious
    broadband energy.
    """
    lo, hi = recording.meta.get("valid_bins") or (0, recording.n_bins)
    if hi <= lo:
        raise ValueError("calibration left no valid bins")
    starts = window_starts(len(recording), cfg)
    if len(starts) == 0:
        raise ValueError(
            f"recording has {len(recording)} snapshots, fewer than one "
            f"{cfg.window_snapshots}-snapshot window"
        )
    for s in starts:
        stop = s + cfg.window_snapshots
        yield s, interpolate_uniform(
            recording.bins[s:stop, lo:hi], cfg.nominal_rate_hz, timestamps=recording.timestamps[s:stop]
        )


def _report(estimates, recording, cfg, calib_cfg):
    config = {**cfg.to_dict(), "calibration": asdict(calib_cfg)}
    return ScenarioReport(tuple(estimates), recording.ground_truth_hz, cfg.method, config)


def run_recording(recording, cfg=WindowConfig(), calib_cfg=CalibrationConfig(), calibrated=False):
    """Calibrate a raw recording, estimate every window and aggregate."""
    if not calibrated:
        recording = calibrate(recording, calib_cfg)
    estimates = [estimate_window(m, cfg, s) for s, m in iter_windows(recording, cfg)]
    return _report(estimates, recording, cfg, calib_cfg)


def compare_methods(recording, cfg=WindowConfig(), calib_cfg=CalibrationConfig(), calibrated=False):
    """Selection and fusion reports computed on the very same calibrated windows."""
    if not calibrated:
        recording = calibrate(recording, calib_cfg)
    cfgs = {m: replace(cfg, method=m) for m in METHODS}
    out = {m: [] for m in METHODS}
    for s, matrix in iter_windows(recording, cfg):
        for m in METHODS:
            out[m].append(estimate_window(matrix, cfgs[m], s))
    return tuple(_report(out[m], recording, cfgs[m], calib_cfg) for m in METHODS)


class BreathingRateEstimator(BaseEstimator):
    """Per-window breathing-rate estimator over calibrated snapshot windows.

    Stateless: ``fit`` only validates parameters. ``predict`` accepts one
    ``(N, n_bins)`` window or a stack ``(n_windows, N, n_bins)`` and returns
    one rate per window (NaN for degenerate windows).
    """

    def __init__(self, method="fusion", sample_rate_hz=19.3, f_low_hz=0.1, f_high_hz=0.5,
                 resolution_hz=0.001, rank_tol=1e-10, noise_floor_factor=1.2, edge_margin_bins=0.5):
        self.method = method
        self.sample_rate_hz = sample_rate_hz
        self.f_low_hz = f_low_hz
        self.f_high_hz = f_high_hz
        self.resolution_hz = resolution_hz
        self.rank_tol = rank_tol
        self.noise_floor_factor = noise_floor_factor
        self.edge_margin_bins = edge_margin_bins

    def _config(self, window_len):
        return WindowConfig(
            window_snapshots=window_len,
            nominal_rate_hz=self.sample_rate_hz,
            resolution_hz=self.resolution_hz,
            band=BandOfInterest(self.f_low_hz, self.f_high_hz),
            method=self.method,
            rank_tol=self.rank_tol,
            noise_floor_factor=self.noise_floor_factor,
            edge_margin_bins=self.edge_margin_bins,
        )

    def fit(self, X=None, y=None):
        self._config(800)
        return self

    def estimate(self, window):
        h = check_cir_matrix(window, "window")
        return estimate_window(h, self._config(h.shape[0]))

    def predict(self, X):
        X = np.asarray(getattr(X, "data", X))
        stack = X[None] if X.ndim == 2 else X
        if stack.ndim != 3:
            raise ValueError("expected one window (N, bins) or a stack (n_windows, N, bins)")
        rates = [self.estimate(w).rate_hz for w in stack]
        return np.array([np.nan if r is None else r for r in rates])
