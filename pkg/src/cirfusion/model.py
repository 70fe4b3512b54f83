"""Multipath CIR model, breathing-emulator motion and synthetic recordings.

A sampled CIR is

    h_n = sum_p A_p * g(n*dt - tau_p(d)) * exp(-j*2*pi*f_c*tau_p(d))

with a sinc pulse ``g(tau) = sin(pi*B*tau) / (pi*B*tau)``, bin spacing ``dt``
(``1/B`` unless overridden) and ``tau_p(d) = tau_p + coupling_p * d / c`` for
a reflector displaced by ``d`` metres.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_positive

SPEED_OF_LIGHT = 299_792_458.0

# UWB channel 2 (DW1000-class radios)
UWB_CH2_CARRIER_HZ = 3.9936e9
UWB_CH2_BANDWIDTH_HZ = 499.2e6

WAVEFORMS = ("sinusoid", "triangular")


@dataclass(frozen=True)
class PathSpec:
    """One propagation path.

    ``breathing_coupling`` is the fraction of the emulator displacement that
    lengthens this path: 0 for a static path, 2 for a direct round-trip
    reflection off the plate.
    """

    attenuation: complex
    base_delay_s: float
    breathing_coupling: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "attenuation", complex(self.attenuation))
        object.__setattr__(self, "base_delay_s", float(self.base_delay_s))
        object.__setattr__(self, "breathing_coupling", float(self.breathing_coupling))
        if not math.isfinite(self.base_delay_s) or self.base_delay_s < 0:
            raise ValueError(f"base_delay_s must be >= 0, got {self.base_delay_s}")
        if not 0.0 <= self.breathing_coupling <= 2.0:
            raise ValueError(
                f"breathing_coupling must lie in [0, 2], got {self.breathing_coupling}"
            )
        if not (math.isfinite(self.attenuation.real) and math.isfinite(self.attenuation.imag)):
            raise ValueError("attenuation must be finite")

    @property
    def is_static(self):
        return self.breathing_coupling == 0.0


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple
    bandwidth_hz: float = UWB_CH2_BANDWIDTH_HZ
    carrier_hz: float = UWB_CH2_CARRIER_HZ
    n_bins: int = 96
    reference_bin: int | None = None
    bin_spacing_s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        check_positive(self.bandwidth_hz, "bandwidth_hz")
        check_positive(self.carrier_hz, "carrier_hz")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValueError(f"n_bins must be a positive integer, got {self.n_bins}")
        if self.bin_spacing_s is not None:
            check_positive(self.bin_spacing_s, "bin_spacing_s")
        span = self.n_bins * self.spacing_s
        for i, p in enumerate(self.paths):
            if not isinstance(p, PathSpec):
                raise TypeError(f"paths[{i}] is not a PathSpec")
            if p.base_delay_s >= span:
                raise ValueError(
                    f"paths[{i}] delay {p.base_delay_s:g} s falls outside the "
                    f"{self.n_bins}-bin window ({span:g} s)"
                )
        if self.reference_bin is not None:
            if not 0 <= self.reference_bin < self.n_bins:
                raise ValueError(f"reference_bin {self.reference_bin} outside [0, {self.n_bins})")
            near = [
                p for p in self.paths
                if p.is_static and abs(self.delay_to_bin(p.base_delay_s) - self.reference_bin) <= 0.5
            ]
            if len(near) != 1:
                raise ValueError(
                    f"reference_bin {self.reference_bin} must coincide with exactly one "
                    f"static path (found {len(near)})"
                )

    @property
    def spacing_s(self):
        """Delay between adjacent CIR bins."""
        return self.bin_spacing_s if self.bin_spacing_s is not None else 1.0 / self.bandwidth_hz

    def delay_to_bin(self, delay_s):
        return delay_s / self.spacing_s

    def bin_to_delay(self, bin_index):
        return bin_index * self.spacing_s

    @property
    def breathing_paths(self):
        return tuple(p for p in self.paths if not p.is_static)


@dataclass(frozen=True)
class EmulatorMotion:
    """Reflector motion of the breathing emulator.

    The plate position stays in ``[0, displacement_m]``. The sinusoid is
    ``D/2 * (1 + sin(2*pi*f*t))``; the triangular wave moves at constant speed
    and starts at ``D/2`` moving forward, matching the sinusoid's phase.
    """

    waveform: str
    displacement_m: float
    rate_hz: float

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}, got {self.waveform!r}")
        object.__setattr__(self, "displacement_m", check_positive(self.displacement_m, "displacement_m"))
        object.__setattr__(self, "rate_hz", check_positive(self.rate_hz, "rate_hz"))

    @classmethod
    def from_speed(cls, displacement_m, speed_m_s):
        """Triangular motion at constant plate speed; rate is ``v / (2 D)``."""
        displacement_m = check_positive(displacement_m, "displacement_m")
        speed_m_s = check_positive(speed_m_s, "speed_m_s")
        return cls("triangular", displacement_m, speed_m_s / (2.0 * displacement_m))

    @property
    def speed_m_s(self):
        """Mean plate speed (exact for the triangular waveform)."""
        return 2.0 * self.displacement_m * self.rate_hz

    def displacement(self, t):
        t = np.asarray(t, dtype=float)
        d = self.displacement_m
        if self.waveform == "sinusoid":
            return 0.5 * d * (1.0 + np.sin(2.0 * np.pi * self.rate_hz * t))
        u = np.mod(self.rate_hz * t + 0.25, 1.0)
        return d * (1.0 - np.abs(2.0 * u - 1.0))


@dataclass(frozen=True)
class ArtifactSpec:
    """Receiver artifacts injected into a synthetic recording.

    gain_magnitude: (low, high) range of the per-snapshot AGC gain magnitude.
    gain_phase_rad: per-snapshot gain phase drawn from [-value, value].
    max_shift_bins: per-snapshot integer delay offset drawn from [-value, value].
    jitter_std_s: standard deviation of the sampling-instant jitter.
    noise_std: per-bin complex Gaussian noise std (E|n|^2 = noise_std^2).
    """

    gain_magnitude: tuple = (1.0, 1.0)
    gain_phase_rad: float = 0.0
    max_shift_bins: int = 0
    jitter_std_s: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        lo, hi = (float(v) for v in self.gain_magnitude)
        object.__setattr__(self, "gain_magnitude", (lo, hi))
        if not 0 < lo <= hi or not math.isfinite(hi):
            raise ValueError(f"gain_magnitude must satisfy 0 < low <= high, got {(lo, hi)}")
        if int(self.max_shift_bins) != self.max_shift_bins or self.max_shift_bins < 0:
            raise ValueError("max_shift_bins must be a non-negative integer")
        object.__setattr__(self, "max_shift_bins", int(self.max_shift_bins))
        for name in ("gain_phase_rad", "jitter_std_s", "noise_std"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    @property
    def is_identity(self):
        return (
            self.gain_magnitude == (1.0, 1.0)
            and self.gain_phase_rad == 0.0
            and self.max_shift_bins == 0
            and self.jitter_std_s == 0.0
            and self.noise_std == 0.0
        )


@dataclass(frozen=True)
class CirSnapshot:
    timestamp_s: float
    bins: np.ndarray


@dataclass(frozen=True, eq=False)
class CirRecording:
    """Timestamped CIR snapshots stored as a ``(n_snapshots, n_bins)`` array."""

    timestamps: np.ndarray
    bins: np.ndarray
    nominal_rate_hz: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        b = np.asarray(self.bins, dtype=np.complex128)
        if b.ndim != 2:
            raise ValueError(f"bins must be 2-D (snapshots x bins), got shape {b.shape}")
        if ts.shape != (b.shape[0],):
            raise ValueError("one timestamp per snapshot is required")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        check_positive(self.nominal_rate_hz, "nominal_rate_hz")
        ts.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "bins", b)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_snapshots(cls, snapshots, nominal_rate_hz, meta=None):
        snapshots = list(snapshots)
        ts = np.array([s.timestamp_s for s in snapshots], dtype=float)
        b = np.array([np.asarray(s.bins) for s in snapshots], dtype=np.complex128)
        return cls(ts, b.reshape(len(snapshots), -1), nominal_rate_hz, meta or {})

    def __len__(self):
        return self.bins.shape[0]

    def __getitem__(self, i):
        return CirSnapshot(float(self.timestamps[i]), self.bins[i])

    @property
    def snapshots(self):
        return [self[i] for i in range(len(self))]

    @property
    def n_bins(self):
        return self.bins.shape[1]

    @property
    def ground_truth_hz(self):
        return self.meta.get("ground_truth_hz")

    def replace_bins(self, bins, **meta_updates):
        meta = {**self.meta, **meta_updates}
        return CirRecording(self.timestamps, bins, self.nominal_rate_hz, meta)

    def __eq__(self, other):
        if not isinstance(other, CirRecording):
            return NotImplemented
        return (
            self.nominal_rate_hz == other.nominal_rate_hz
            and self.meta == other.meta
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.bins, other.bins)
        )

    __hash__ = None


def _sample_many(channel, displacements):
    """Sampled CIRs for a vector of displacements, shape ``(len(d), n_bins)``."""
    d = np.atleast_1d(np.asarray(displacements, dtype=float))
    out = np.zeros((d.size, channel.n_bins), dtype=np.complex128)
    if not channel.paths:
        return out
    grid = np.arange(channel.n_bins) * channel.spacing_s
    bw = channel.bandwidth_hz
    for p in channel.paths:
        tau = p.base_delay_s + p.breathing_coupling * d / SPEED_OF_LIGHT
        # np.sinc(x) = sin(pi x)/(pi x) with sinc(0) = 1
        pulse = np.sinc(bw * (grid[None, :] - tau[:, None]))
        out += p.attenuation * pulse * np.exp(-2j * np.pi * channel.carrier_hz * tau)[:, None]
    return out


def sample_cir(channel, displacement_m=0.0):
    """Sampled CIR vector of ``channel`` with the reflector displaced by ``displacement_m``."""
    displacement_m = float(displacement_m)
    if not math.isfinite(displacement_m):
        raise ValueError("displacement must be finite")
    return _sample_many(channel, [displacement_m])[0]


def shift_bins(vector, shift):
    """Shift a CIR by ``shift`` bins (positive = later) with zero fill."""
    v = np.asarray(vector)
    out = np.zeros_like(v)
    n = v.shape[-1]
    if shift == 0:
        out[...] = v
    elif abs(shift) < n:
        if shift > 0:
            out[..., shift:] = v[..., : n - shift]
        else:
            out[..., : n + shift] = v[..., -shift:]
    return out


def snapshot_count(duration_s, nominal_rate_hz):
    # tolerance absorbs binary rounding of e.g. 50 * 19.3
    return int(math.floor(duration_s * nominal_rate_hz + 1e-9))


def generate_recording(channel, motion, artifacts, duration_s, nominal_rate_hz, seed):
    """Synthesize a recording of ``floor(duration_s * nominal_rate_hz)`` snapshots.

    Each snapshot is sampled at its (jittered) acquisition instant and then
    distorted in order by complex gain, zero-fill bin shift and additive noise.
    The recorded timestamp is the true acquisition instant, so interpolation
    onto the nominal grid removes the jitter.
    """
    duration_s = check_positive(duration_s, "duration_s")
    nominal_rate_hz = check_positive(nominal_rate_hz, "nominal_rate_hz")
    if motion.rate_hz >= nominal_rate_hz / 2:
        raise ValueError("breathing rate must be below the Nyquist rate of the recording")
    if channel.reference_bin is not None and artifacts.max_shift_bins:
        lo = channel.reference_bin - artifacts.max_shift_bins
        hi = channel.reference_bin + artifacts.max_shift_bins
        if lo < 0 or hi >= channel.n_bins:
            raise ValueError(
                f"delay offsets up to +/-{artifacts.max_shift_bins} bins can push the "
                f"reference path (bin {channel.reference_bin}) out of the {channel.n_bins}-bin vector"
            )
    n = snapshot_count(duration_s, nominal_rate_hz)
    if n < 1:
        raise ValueError("recording would contain no snapshots")

    rng = np.random.default_rng(seed)
    period = 1.0 / nominal_rate_hz
    t = np.arange(n) * period
    if artifacts.jitter_std_s > 0:
        # clipped so acquisition instants stay strictly increasing
        jitter = np.clip(rng.normal(0.0, artifacts.jitter_std_s, n), -0.45 * period, 0.45 * period)
        t = t + jitter
        t[0] = max(t[0], 0.0)

    h = _sample_many(channel, motion.displacement(t))

    lo, hi = artifacts.gain_magnitude
    if (lo, hi) != (1.0, 1.0) or artifacts.gain_phase_rad > 0:
        mag = rng.uniform(lo, hi, n)
        phase = rng.uniform(-artifacts.gain_phase_rad, artifacts.gain_phase_rad, n)
        h = h * (mag * np.exp(1j * phase))[:, None]
    if artifacts.max_shift_bins:
        shifts = rng.integers(-artifacts.max_shift_bins, artifacts.max_shift_bins + 1, n)
        h = np.array([shift_bins(row, int(s)) for row, s in zip(h, shifts)])
    if artifacts.noise_std > 0:
        scale = artifacts.noise_std / math.sqrt(2.0)
        h = h + scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))

    meta = {
        # a channel without moving paths carries no breathing signal
        "ground_truth_hz": motion.rate_hz if channel.breathing_paths else None,
        "reference_bin": channel.reference_bin,
    }
    return CirRecording(t, h, nominal_rate_hz, meta)
