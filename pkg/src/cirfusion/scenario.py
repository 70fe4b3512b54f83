"""Scenario definitions, named presets and the YAML scenario format.

A scenario file looks like::

    name: los-2mm-0.3hz
    seed: 0
    duration_s: 50.0
    nominal_rate_hz: 19.3
    channel:
      n_bins: 96
      reference_bin: 85
      paths:
        - {attenuation: [4.0, 0.0], delay_bins: 3.0}
        - {attenuation: [0.6, -0.8], delay_bins: 9.35, coupling: 2.0}
        - {attenuation: [10.0, 0.0], delay_bins: 85.0}
    motion: {waveform: sinusoid, displacement_m: 0.002, rate_hz: 0.3}
    artifacts:
      gain_magnitude: [0.5, 2.0]
      max_shift_bins: 5
      jitter_std_s: 0.005
      noise_std: 0.0316

Unknown keys are rejected. Path delays are given as ``delay_s`` or
``delay_bins`` (exactly one); triangular motion may give ``speed_m_s``
instead of ``rate_hz``.
"""

from dataclasses import dataclass, field
import re

import numpy as np
import yaml

from .errors import ScenarioError
from .model import (
    ArtifactSpec,
    EmulatorMotion,
    MultipathChannel,
    PathSpec,
    UWB_CH2_BANDWIDTH_HZ,
    UWB_CH2_CARRIER_HZ,
    generate_recording,
)


@dataclass(frozen=True)
class Scenario:
    channel: MultipathChannel
    motion: EmulatorMotion
    artifacts: ArtifactSpec = field(default_factory=ArtifactSpec)
    duration_s: float = 50.0
    nominal_rate_hz: float = 19.3
    seed: int = 0
    name: str = "custom"


def simulate(scenario):
    """Generate the recording described by ``scenario``."""
    rec = generate_recording(
        scenario.channel, scenario.motion, scenario.artifacts,
        scenario.duration_s, scenario.nominal_rate_hz, scenario.seed,
    )
    rec.meta["preset"] = scenario.name
    return rec


# ---------------------------------------------------------------- presets

N_BINS = 96
REFERENCE_BIN = 85
_STATIC_PATHS = ((3.0, 4.0), (20.0, 1.5), (41.0, 0.8))
NLOS_SPREAD_BINS = (8, 11, 14, 17, 23, 26, 29, 32)
NLOS_COUPLING = 1.5
LOS_BREATHING_BIN = 9.35


def _static_paths(channel_bw=UWB_CH2_BANDWIDTH_HZ, reference_amplitude=10.0):
    paths = [PathSpec(a, b / channel_bw) for b, a in _STATIC_PATHS]
    paths.append(PathSpec(reference_amplitude, REFERENCE_BIN / channel_bw))
    return paths


def _channel(breathing):
    return MultipathChannel(
        paths=tuple(_static_paths() + breathing),
        bandwidth_hz=UWB_CH2_BANDWIDTH_HZ,
        carrier_hz=UWB_CH2_CARRIER_HZ,
        n_bins=N_BINS,
        reference_bin=REFERENCE_BIN,
    )


def _artifacts(noise_std, jitter_std_s=0.005):
    return ArtifactSpec(
        gain_magnitude=(0.5, 2.0),
        max_shift_bins=5,
        jitter_std_s=jitter_std_s,
        noise_std=noise_std,
    )


def los_scenario(displacement_m=0.005, rate_hz=0.3, noise_db=-30.0, seed=0,
                 duration_s=50.0, nominal_rate_hz=19.3, waveform="sinusoid"):
    """One strong direct reflection off the plate (coupling 2).

    ``noise_db`` is the per-bin noise power relative to the breathing path power.
    """
    amp = 1.0
    breathing = [PathSpec(amp * np.exp(0.7j), LOS_BREATHING_BIN / UWB_CH2_BANDWIDTH_HZ, 2.0)]
    noise = amp * 10 ** (noise_db / 20)
    return Scenario(
        _channel(breathing), EmulatorMotion(waveform, displacement_m, rate_hz),
        _artifacts(noise), duration_s, nominal_rate_hz, seed,
        f"los-{displacement_m * 1e3:g}mm-{rate_hz:g}hz",
    )


def nlos_spread_scenario(displacement_m=0.002, rate_hz=0.3, snr_db=0.0, seed=0,
                         duration_s=50.0, nominal_rate_hz=19.3, n_paths=len(NLOS_SPREAD_BINS),
                         coupling=NLOS_COUPLING, waveform="sinusoid"):
    """Breathing energy spread over several weak multi-bounce paths.

    No direct reflection; ``n_paths`` paths of unit amplitude with oblique
    coupling sit on distinct bins. ``snr_db`` is the per-bin ratio of a
    breathing path's power to the noise power. Path phases and sub-bin offsets
    are fixed (not seed dependent) so seeds vary only the artifacts.
    """
    if not 1 <= n_paths <= len(NLOS_SPREAD_BINS):
        raise ValueError(f"n_paths must be in [1, {len(NLOS_SPREAD_BINS)}]")
    layout = np.random.default_rng(20230601)
    phases = layout.uniform(0, 2 * np.pi, len(NLOS_SPREAD_BINS))
    offsets = layout.uniform(-0.2, 0.2, len(NLOS_SPREAD_BINS))
    breathing = [
        PathSpec(np.exp(1j * ph), (b + off) / UWB_CH2_BANDWIDTH_HZ, coupling)
        for b, ph, off in zip(NLOS_SPREAD_BINS[:n_paths], phases, offsets)
    ]
    noise = 10 ** (-snr_db / 20)
    return Scenario(
        _channel(breathing), EmulatorMotion(waveform, displacement_m, rate_hz),
        _artifacts(noise), duration_s, nominal_rate_hz, seed,
        f"nlos-{displacement_m * 1e3:g}mm-{rate_hz:g}hz",
    )


def static_scenario(noise_db=-30.0, seed=0, duration_s=50.0, nominal_rate_hz=19.3):
    """Empty room: only static paths. The motion is nominal and never couples."""
    noise = 10 ** (noise_db / 20)
    return Scenario(
        _channel([]), EmulatorMotion("sinusoid", 0.005, 0.3),
        _artifacts(noise), duration_s, nominal_rate_hz, seed, "static",
    )


_PRESET_RE = re.compile(
    r"^(?P<kind>los|nlos|static)(?:-(?P<mm>\d+(?:\.\d+)?)mm)?(?:-(?P<hz>\d+(?:\.\d+)?)hz)?$"
)


def preset(name, seed=0):
    """Scenario for a preset name such as ``los-2mm-0.3hz``, ``nlos-8mm-0.2hz`` or ``static``."""
    m = _PRESET_RE.match(name.strip().lower())
    if not m:
        raise ScenarioError(
            f"unknown preset {name!r}; expected los|nlos[-<D>mm][-<f>hz] or static"
        )
    kind = m["kind"]
    if kind == "static":
        return static_scenario(seed=seed)
    kwargs = {"seed": seed}
    if m["mm"]:
        kwargs["displacement_m"] = float(m["mm"]) * 1e-3
    if m["hz"]:
        kwargs["rate_hz"] = float(m["hz"])
    builder = los_scenario if kind == "los" else nlos_spread_scenario
    return builder(**kwargs)


# ------------------------------------------------------------ YAML format

_constructor = yaml.SafeLoader("")


def _line(node):
    return node.start_mark.line + 1


def _value(node):
    return _constructor.construct_object(node, deep=True)


def _mapping(node, where, required=(), optional=()):
    if not isinstance(node, yaml.MappingNode):
        raise ScenarioError(f"{where} must be a mapping", _line(node))
    out = {}
    allowed = set(required) | set(optional)
    for key_node, value_node in node.value:
        key = _value(key_node)
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r} in {where}", _line(key_node))
        if key in out:
            raise ScenarioError(f"duplicate key {key!r} in {where}", _line(key_node))
        out[key] = value_node
    for key in required:
        if key not in out:
            raise ScenarioError(f"missing required key {key!r} in {where}", _line(node))
    return out


def _float(node, name):
    value = _value(node)
    try:
        if isinstance(value, bool):
            raise TypeError
        return float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{name} must be a number, got {value!r}", _line(node)) from None


def _int(node, name):
    value = _value(node)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{name} must be an integer, got {value!r}", _line(node))
    return value


def _complex(node, name):
    if isinstance(node, yaml.SequenceNode):
        if len(node.value) != 2:
            raise ScenarioError(f"{name} must be [real, imag]", _line(node))
        return complex(_float(node.value[0], name), _float(node.value[1], name))
    return complex(_float(node, name), 0.0)


def _exactly_one(m, keys, where, node):
    present = [k for k in keys if k in m]
    if len(present) != 1:
        raise ScenarioError(f"{where} needs exactly one of {', '.join(keys)}", _line(node))
    return present[0]


def _build(what, node, fn):
    try:
        return fn()
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid {what}: {exc}", _line(node)) from None


def _parse_channel(node):
    m = _mapping(node, "channel", ("n_bins", "paths"),
                 ("bandwidth_hz", "carrier_hz", "reference_bin", "bin_spacing_s"))
    bw = _float(m["bandwidth_hz"], "bandwidth_hz") if "bandwidth_hz" in m else UWB_CH2_BANDWIDTH_HZ
    spacing = _float(m["bin_spacing_s"], "bin_spacing_s") if "bin_spacing_s" in m else None
    if not isinstance(m["paths"], yaml.SequenceNode):
        raise ScenarioError("channel.paths must be a list", _line(m["paths"]))
    paths = []
    for i, pnode in enumerate(m["paths"].value):
        where = f"channel.paths[{i}]"
        p = _mapping(pnode, where, ("attenuation",), ("delay_s", "delay_bins", "coupling"))
        which = _exactly_one(p, ("delay_s", "delay_bins"), where, pnode)
        delay = _float(p[which], which)
        if which == "delay_bins":
            delay *= spacing if spacing is not None else 1.0 / bw
        coupling = _float(p["coupling"], "coupling") if "coupling" in p else 0.0
        att = _complex(p["attenuation"], "attenuation")
        paths.append(_build(where, pnode, lambda: PathSpec(att, delay, coupling)))
    return _build("channel", node, lambda: MultipathChannel(
        paths=tuple(paths),
        bandwidth_hz=bw,
        carrier_hz=_float(m["carrier_hz"], "carrier_hz") if "carrier_hz" in m else UWB_CH2_CARRIER_HZ,
        n_bins=_int(m["n_bins"], "n_bins"),
        reference_bin=_int(m["reference_bin"], "reference_bin") if "reference_bin" in m else None,
        bin_spacing_s=spacing,
    ))


def _parse_motion(node):
    m = _mapping(node, "motion", ("waveform", "displacement_m"), ("rate_hz", "speed_m_s"))
    waveform = _value(m["waveform"])
    disp = _float(m["displacement_m"], "displacement_m")
    which = _exactly_one(m, ("rate_hz", "speed_m_s"), "motion", node)
    if which == "speed_m_s":
        if waveform != "triangular":
            raise ScenarioError("speed_m_s is only valid for triangular motion", _line(m["speed_m_s"]))
        speed = _float(m["speed_m_s"], "speed_m_s")
        return _build("motion", node, lambda: EmulatorMotion.from_speed(disp, speed))
    rate = _float(m["rate_hz"], "rate_hz")
    return _build("motion", node, lambda: EmulatorMotion(waveform, disp, rate))


def _parse_artifacts(node):
    keys = ("gain_magnitude", "gain_phase_rad", "max_shift_bins", "jitter_std_s", "noise_std")
    m = _mapping(node, "artifacts", (), keys)
    kwargs = {}
    if "gain_magnitude" in m:
        g = m["gain_magnitude"]
        if not isinstance(g, yaml.SequenceNode) or len(g.value) != 2:
            raise ScenarioError("gain_magnitude must be [low, high]", _line(g))
        kwargs["gain_magnitude"] = tuple(_float(v, "gain_magnitude") for v in g.value)
    if "max_shift_bins" in m:
        kwargs["max_shift_bins"] = _int(m["max_shift_bins"], "max_shift_bins")
    for k in ("gain_phase_rad", "jitter_std_s", "noise_std"):
        if k in m:
            kwargs[k] = _float(m[k], k)
    return _build("artifacts", node, lambda: ArtifactSpec(**kwargs))


def parse_scenario(text):
    """Parse scenario YAML text; errors carry the offending line number."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed YAML: {exc}", mark.line + 1 if mark else None) from None
    if root is None:
        raise ScenarioError("scenario file is empty", 1)
    m = _mapping(root, "scenario", ("seed", "duration_s", "channel", "motion"),
                 ("name", "nominal_rate_hz", "artifacts"))
    channel = _parse_channel(m["channel"])
    motion = _parse_motion(m["motion"])
    artifacts = _parse_artifacts(m["artifacts"]) if "artifacts" in m else ArtifactSpec()
    duration = _float(m["duration_s"], "duration_s")
    rate = _float(m["nominal_rate_hz"], "nominal_rate_hz") if "nominal_rate_hz" in m else 19.3
    for name, value in (("duration_s", duration), ("nominal_rate_hz", rate)):
        if not value > 0:
            raise ScenarioError(f"{name} must be > 0", _line(m[name]))
    name = str(_value(m["name"])) if "name" in m else "custom"
    return Scenario(channel, motion, artifacts, duration, rate, _int(m["seed"], "seed"), name)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(scenario):
    ch = scenario.channel
    channel = {
        "bandwidth_hz": ch.bandwidth_hz,
        "carrier_hz": ch.carrier_hz,
        "n_bins": ch.n_bins,
        "paths": [
            {
                "attenuation": [p.attenuation.real, p.attenuation.imag],
                "delay_s": p.base_delay_s,
                "coupling": p.breathing_coupling,
            }
            for p in ch.paths
        ],
    }
    if ch.reference_bin is not None:
        channel["reference_bin"] = ch.reference_bin
    if ch.bin_spacing_s is not None:
        channel["bin_spacing_s"] = ch.bin_spacing_s
    art = scenario.artifacts
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "duration_s": scenario.duration_s,
        "nominal_rate_hz": scenario.nominal_rate_hz,
        "channel": channel,
        "motion": {
            "waveform": scenario.motion.waveform,
            "displacement_m": scenario.motion.displacement_m,
            "rate_hz": scenario.motion.rate_hz,
        },
        "artifacts": {
            "gain_magnitude": list(art.gain_magnitude),
            "gain_phase_rad": art.gain_phase_rad,
            "max_shift_bins": art.max_shift_bins,
            "jitter_std_s": art.jitter_std_s,
            "noise_std": art.noise_std,
        },
    }


def dump_scenario(scenario):
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False)


@dataclass(frozen=True)
class SweepSpec:
    displacements_mm: tuple
    presets: tuple
    seeds: tuple = (0,)
    rate_hz: float = 0.3
    duration_s: float = 50.0
    hop_snapshots: int = 10


def parse_sweep(text):
    """Sweep file: ``displacements_mm``, ``presets`` (los/nlos) and optional seeds etc."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed YAML: {exc}") from None
    if root is None:
        raise ScenarioError("no cases", 1)
    m = _mapping(root, "sweep", ("displacements_mm", "presets"),
                 ("seeds", "rate_hz", "duration_s", "hop_snapshots"))

    def seq(key, conv):
        node = m[key]
        if not isinstance(node, yaml.SequenceNode):
            raise ScenarioError(f"{key} must be a list", _line(node))
        return tuple(conv(v, key) for v in node.value)

    disps = seq("displacements_mm", _float)
    presets = seq("presets", lambda n, k: str(_value(n)))
    for p, node in zip(presets, m["presets"].value):
        if p not in ("los", "nlos"):
            raise ScenarioError(f"sweep presets must be 'los' or 'nlos', got {p!r}", _line(node))
    if not disps or not presets:
        raise ScenarioError("no cases", _line(root))
    kwargs = {}
    if "seeds" in m:
        kwargs["seeds"] = seq("seeds", _int)
        if not kwargs["seeds"]:
            raise ScenarioError("no cases", _line(m["seeds"]))
    for key in ("rate_hz", "duration_s"):
        if key in m:
            kwargs[key] = _float(m[key], key)
    if "hop_snapshots" in m:
        kwargs["hop_snapshots"] = _int(m["hop_snapshots"], "hop_snapshots")
    return SweepSpec(disps, presets, **kwargs)


def load_sweep(path):
    with open(path, encoding="utf-8") as fh:
        return parse_sweep(fh.read())
