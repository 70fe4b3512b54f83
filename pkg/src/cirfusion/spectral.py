"""DFT band machinery, PSD peak detection and the confidence index.

DFTs are unnormalized (``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``) and energies
are reported as ``|X|^2 / N`` so that Parseval reads ``sum |X|^2 / N == sum |x|^2``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from ._validation import check_positive, check_series

_EDGE_RTOL = 1e-9


@dataclass(frozen=True)
class BandOfInterest:
    """Breathing frequency band in Hz (defaults: 0.1 to 0.5 Hz)."""

    f_low_hz: float = 0.1
    f_high_hz: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "f_low_hz", check_positive(self.f_low_hz, "f_low_hz"))
        object.__setattr__(self, "f_high_hz", check_positive(self.f_high_hz, "f_high_hz"))
        if not self.f_high_hz > self.f_low_hz:
            raise ValueError(f"f_high_hz ({self.f_high_hz}) must exceed f_low_hz ({self.f_low_hz})")

    @classmethod
    def parse(cls, text):
        """Parse ``"low:high"``."""
        try:
            low, high = (float(v) for v in str(text).split(":"))
        except ValueError:
            raise ValueError(f"band must look like 'low:high', got {text!r}") from None
        return cls(low, high)

    def __str__(self):
        return f"{self.f_low_hz:g}:{self.f_high_hz:g}"

    def check_rate(self, sample_rate_hz):
        if self.f_high_hz >= sample_rate_hz / 2:
            raise ValueError(
                f"band upper edge {self.f_high_hz} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)"
            )

    def contains(self, f):
        return self.f_low_hz <= f <= self.f_high_hz


def dft_frequencies(n, sample_rate_hz):
    """Frequencies of DFT rows mapped to ``(-rate/2, rate/2]``."""
    k = np.arange(n)
    k = np.where(k > n // 2, k - n, k)
    return k * sample_rate_hz / n


@dataclass(frozen=True)
class DftPlan:
    """Length-N DFT at a given sample rate, with the rows falling inside the band.

    ``edge_margin_bins`` widens the band by that many DFT bins on each side so
    that a tone sitting exactly on a band edge keeps its main lobe in band.
    """

    window_len: int
    sample_rate_hz: float
    band: BandOfInterest = BandOfInterest()
    edge_margin_bins: float = 0.0
    band_rows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.window_len) != self.window_len or self.window_len < 2:
            raise ValueError(f"window_len must be an integer >= 2, got {self.window_len}")
        check_positive(self.sample_rate_hz, "sample_rate_hz")
        self.band.check_rate(self.sample_rate_hz)
        if self.edge_margin_bins < 0:
            raise ValueError("edge_margin_bins must be >= 0")
        f = np.abs(dft_frequencies(self.window_len, self.sample_rate_hz))
        margin = self.edge_margin_bins * self.sample_rate_hz / self.window_len
        lo = max(self.band.f_low_hz - margin, 0.0) * (1 - _EDGE_RTOL)
        hi = (self.band.f_high_hz + margin) * (1 + _EDGE_RTOL)
        rows = np.flatnonzero((f >= lo) & (f <= hi))
        if rows.size == 0:
            raise ValueError(
                f"no DFT row of a {self.window_len}-point window at {self.sample_rate_hz} Hz "
                f"falls inside the {self.band} Hz band"
            )
        rows.setflags(write=False)
        object.__setattr__(self, "band_rows", rows)

    @property
    def frequencies(self):
        return dft_frequencies(self.window_len, self.sample_rate_hz)


def _dft(x, plan):
    return np.fft.fft(check_series(x, length=plan.window_len))


def boi_energy(x, plan):
    """Energy of ``x`` in the band rows of its DFT, ``||F_I x||^2 / N``."""
    X = _dft(x, plan)
    return float(np.sum(np.abs(X[plan.band_rows]) ** 2) / plan.window_len)


def total_energy(x, plan):
    """Full-spectrum energy ``||F x||^2 / N`` (equals ``sum |x|^2``)."""
    X = _dft(x, plan)
    return float(np.sum(np.abs(X) ** 2) / plan.window_len)


def band_energy_ratio(x, plan):
    """Fraction of the energy of ``x`` that lies in the band (0 for a zero signal)."""
    X = _dft(x, plan)
    total = np.sum(np.abs(X) ** 2)
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(X[plan.band_rows]) ** 2) / total)


@dataclass(frozen=True, eq=False)
class PsdSpectrum:
    freqs_hz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if f.ndim != 1 or f.shape != v.shape:
            raise ValueError("freqs_hz and values must be 1-D arrays of equal length")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("freqs_hz must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("PSD values must be finite and non-negative")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def frequency_grid(band, resolution_hz):
    resolution_hz = check_positive(resolution_hz, "resolution_hz")
    span = (band.f_high_hz - band.f_low_hz) / resolution_hz
    count = int(math.floor(span + 1e-9)) + 1
    return band.f_low_hz + resolution_hz * np.arange(count)


@lru_cache(maxsize=32)
def _steering(n, rate_hz, f_low, f_high, resolution_hz):
    grid = frequency_grid(BandOfInterest(f_low, f_high), resolution_hz)
    t = np.arange(n) / rate_hz
    return grid, np.exp(-2j * np.pi * np.outer(grid, t))


def psd_on_grid(x, rate_hz, band=BandOfInterest(), resolution_hz=0.001):
    """Periodogram of the mean-removed sequence on an exact frequency grid.

    The DTFT is evaluated at ``f_low, f_low + res, ..., f_high`` with sample
    times ``n / rate_hz``; values are ``|X(f)|^2 / N``.
    """
    x = check_series(x)
    rate_hz = check_positive(rate_hz, "rate_hz")
    if x.size < 2:
        raise ValueError("need at least two samples")
    grid, steer = _steering(x.size, rate_hz, band.f_low_hz, band.f_high_hz, float(resolution_hz))
    if grid.size == 0:
        raise ValueError("empty frequency grid")
    X = steer @ (x - x.mean())
    return PsdSpectrum(grid.copy(), np.abs(X) ** 2 / x.size)


def detect_peak(spec):
    """Frequency and value of the global maximum (lowest frequency on ties)."""
    if len(spec) == 0:
        raise ValueError("empty spectrum")
    i = int(np.argmax(spec.values))
    return float(spec.freqs_hz[i]), float(spec.values[i])


def local_maxima(values):
    """Indices strictly above their neighbours; an endpoint needs only its one neighbour."""
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return np.array([0])
    left = np.concatenate(([-np.inf], v[:-1]))
    right = np.concatenate((v[1:], [-np.inf]))
    return np.flatnonzero((v > left) & (v > right))


def confidence_index(spec, normalize="sum"):
    """Gap between the largest and second-largest local PSD peaks.

    With ``normalize="sum"`` the PSD is scaled to unit sum over the grid; with
    ``"max"`` the largest value becomes 1. When fewer than two local maxima
    exist, the largest normalized value is returned.
    """
    if len(spec) == 0:
        raise ValueError("empty spectrum")
    v = spec.values
    if normalize == "sum":
        scale = v.sum()
    elif normalize == "max":
        scale = v.max()
    else:
        raise ValueError(f"normalize must be 'sum' or 'max', got {normalize!r}")
    if scale == 0:
        return 0.0
    v = v / scale
    peaks = np.sort(v[local_maxima(v)])[::-1]
    if peaks.size < 2:
        return float(v.max())
    return float(peaks[0] - peaks[1])
