"""Delay-offset and amplitude calibration against a static reference path.

The reference is a path with fixed delay (a cable between transmitter and
receiver) that sits well after the wireless channel in the CIR. Each snapshot
is shifted so the reference peak lands on a common bin, then scaled so the
energy in the peak bin and its neighbours is constant.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_cir_matrix
from .errors import CalibrationError, ReferenceNotFoundError
from .model import CirRecording, shift_bins


@dataclass(frozen=True)
class CalibrationConfig:
    """Calibration settings.

    ``neighbor_radius=2`` uses the peak bin and its four adjacent bins.
    ``target_ref_bin=None`` aligns to the most common peak position of the
    recording (lowest index on ties).
    """

    search_start_bin: int = 75
    neighbor_radius: int = 2
    target_ref_bin: int | None = None
    target_ref_energy: float = 1.0

    def __post_init__(self):
        if self.search_start_bin < 0:
            raise ValueError("search_start_bin must be >= 0")
        if self.neighbor_radius < 0:
            raise ValueError("neighbor_radius must be >= 0")
        if not self.target_ref_energy > 0:
            raise ValueError("target_ref_energy must be > 0")

    def check_bins(self, n_bins):
        if self.search_start_bin + 2 * self.neighbor_radius >= n_bins:
            raise ValueError(
                f"search_start_bin + 2*neighbor_radius must be < n_bins ({n_bins})"
            )
        if self.target_ref_bin is not None:
            lo = self.target_ref_bin - self.neighbor_radius
            hi = self.target_ref_bin + self.neighbor_radius
            if lo < 0 or hi >= n_bins:
                raise ValueError(f"reference window [{lo}, {hi}] exceeds {n_bins} bins")


def _bins_of(snapshot):
    return np.asarray(getattr(snapshot, "bins", snapshot))


def find_reference_peak(snapshot, cfg=CalibrationConfig()):
    """Index of the strongest bin at or after ``cfg.search_start_bin``.

    Ties go to the lowest index.
    """
    bins = _bins_of(snapshot)
    if bins.shape[-1] < cfg.search_start_bin + 2 * cfg.neighbor_radius + 1:
        raise ValueError(
            f"snapshot has {bins.shape[-1]} bins, need at least "
            f"{cfg.search_start_bin + 2 * cfg.neighbor_radius + 1}"
        )
    mag = np.abs(bins[cfg.search_start_bin:])
    if not np.any(mag > 0):
        raise ReferenceNotFoundError("reference not found: search region is all zero")
    return cfg.search_start_bin + int(np.argmax(mag))


def _peaks(bins, cfg):
    return np.array([find_reference_peak(row, cfg) for row in bins], dtype=int)


def resolve_target_bin(recording, cfg=CalibrationConfig()):
    """The bin reference peaks are aligned to."""
    if cfg.target_ref_bin is not None:
        return int(cfg.target_ref_bin)
    bins = recording.bins if isinstance(recording, CirRecording) else np.asarray(recording)
    peaks = _peaks(bins, cfg)
    values, counts = np.unique(peaks, return_counts=True)
    return int(values[np.argmax(counts)])


def _align(bins, cfg, target):
    """Aligned copy of ``bins`` and the bin shift applied to each row."""
    n_bins = bins.shape[1]
    out = np.empty_like(bins)
    shifts = target - _peaks(bins, cfg)
    for i, (row, shift) in enumerate(zip(bins, shifts)):
        if 2 * abs(shift) > n_bins:
            raise CalibrationError(
                f"snapshot {i}: aligning peak {target - shift} to bin {target} would truncate "
                f"more than half of the {n_bins}-bin vector"
            )
        out[i] = shift_bins(row, int(shift))
    return out, shifts


def valid_bin_range(shifts, n_bins, previous=None):
    """Half-open range of bins observed in every snapshot after shifting.

    A positive shift zero-fills the leading bins, a negative one the trailing
    bins; those bins hold no measurement for part of the recording.
    """
    shifts = np.asarray(shifts, dtype=int)
    lo = max(0, int(shifts.max(initial=0)))
    hi = n_bins + min(0, int(shifts.min(initial=0)))
    if previous is not None:
        lo, hi = max(lo, int(previous[0])), min(hi, int(previous[1]))
    return [lo, max(lo, hi)]


def _reference_energy(bins, target, radius):
    window = bins[:, target - radius: target + radius + 1]
    return np.sum(np.abs(window) ** 2, axis=1)


def _normalize(bins, cfg, target):
    energy = _reference_energy(bins, target, cfg.neighbor_radius)
    bad = np.flatnonzero(energy <= 0)
    if bad.size:
        raise CalibrationError(f"snapshot {int(bad[0])}: reference energy is zero")
    return bins * np.sqrt(cfg.target_ref_energy / energy)[:, None]


def calibrate_delay(recording, cfg=CalibrationConfig()):
    """Shift every snapshot so its reference peak sits on the target bin."""
    cfg.check_bins(recording.n_bins)
    target = resolve_target_bin(recording, cfg)
    aligned, shifts = _align(recording.bins, cfg, target)
    valid = valid_bin_range(shifts, recording.n_bins, recording.meta.get("valid_bins"))
    return recording.replace_bins(aligned, reference_bin=target, valid_bins=valid)


def calibrate_amplitude(recording, cfg=CalibrationConfig()):
    """Scale each snapshot by a positive real factor to a fixed reference energy.

    The phase is left untouched; it carries the breathing modulation.
    """
    cfg.check_bins(recording.n_bins)
    target = resolve_target_bin(recording, cfg)
    return recording.replace_bins(_normalize(recording.bins, cfg, target), reference_bin=target)


def calibrate(recording, cfg=CalibrationConfig()):
    """Delay then amplitude calibration.

    ``meta["valid_bins"]`` of the result is the ``[lo, hi)`` range of bins
    not touched by zero fill in any snapshot.

    After alignment every reference peak is on the target bin, so a second
    peak search would return the same index and is skipped.
    """
    cfg.check_bins(recording.n_bins)
    target = resolve_target_bin(recording, cfg)
    aligned, shifts = _align(recording.bins, cfg, target)
    scaled = _normalize(aligned, cfg, target)
    valid = valid_bin_range(shifts, recording.n_bins, recording.meta.get("valid_bins"))
    return recording.replace_bins(scaled, reference_bin=target, valid_bins=valid, calibrated=True)


class CirCalibrator(TransformerMixin, BaseEstimator):
    """Calibrate raw snapshot matrices (rows = snapshots, columns = bins).

    ``fit`` fixes the alignment bin (the most common reference peak of the
    training data unless ``target_ref_bin`` is given); ``transform`` aligns and
    normalizes every row and records the zero-fill-free range in
    ``valid_bins_``.
    """

    def __init__(self, search_start_bin=75, neighbor_radius=2, target_ref_bin=None,
                 target_ref_energy=1.0):
        self.search_start_bin = search_start_bin
        self.neighbor_radius = neighbor_radius
        self.target_ref_bin = target_ref_bin
        self.target_ref_energy = target_ref_energy

    def _config(self, target=None):
        return CalibrationConfig(
            search_start_bin=self.search_start_bin,
            neighbor_radius=self.neighbor_radius,
            target_ref_bin=self.target_ref_bin if target is None else target,
            target_ref_energy=self.target_ref_energy,
        )

    def fit(self, X, y=None):
        X = check_cir_matrix(X, "X")
        cfg = self._config()
        cfg.check_bins(X.shape[1])
        self.target_ref_bin_ = resolve_target_bin(X, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "target_ref_bin_"):
            raise NotFittedError("CirCalibrator is not fitted yet")
        X = check_cir_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} bins, calibrator was fitted on {self.n_features_in_}")
        cfg = self._config(self.target_ref_bin_)
        aligned, shifts = _align(X, cfg, self.target_ref_bin_)
        self.valid_bins_ = valid_bin_range(shifts, X.shape[1])
        return _normalize(aligned, cfg, self.target_ref_bin_)
