import numpy as np
import pytest

from cirfusion.errors import ScenarioError
from cirfusion.model import UWB_CH2_BANDWIDTH_HZ
from cirfusion.scenario import (
    NLOS_SPREAD_BINS,
    dump_scenario,
    los_scenario,
    nlos_spread_scenario,
    parse_scenario,
    parse_sweep,
    preset,
    simulate,
    static_scenario,
)

GOOD = """\
name: tiny
seed: 3
duration_s: 2.0
nominal_rate_hz: 19.3
channel:
  n_bins: 32
  reference_bin: 25
  paths:
    - {attenuation: [1.0, 0.5], delay_bins: 4.0}
    - {attenuation: 0.8, delay_bins: 7.25, coupling: 2.0}
    - {attenuation: 5.0, delay_s: 5.0080128205128205e-08}
motion: {waveform: triangular, displacement_m: 0.008, speed_m_s: 0.0016}
artifacts:
  gain_magnitude: [0.5, 2.0]
  max_shift_bins: 3
  jitter_std_s: 0.005
  noise_std: 0.01
"""


class TestYaml:
    def test_parse(self):
        sc = parse_scenario(GOOD)
        assert sc.name == "tiny" and sc.seed == 3
        assert sc.channel.paths[0].attenuation == 1.0 + 0.5j
        assert sc.channel.paths[1].base_delay_s == pytest.approx(7.25 / UWB_CH2_BANDWIDTH_HZ)
        assert sc.motion.waveform == "triangular"
        assert sc.motion.rate_hz == pytest.approx(0.1)
        assert sc.artifacts.max_shift_bins == 3

    def test_round_trip(self):
        sc = parse_scenario(GOOD)
        again = parse_scenario(dump_scenario(sc))
        assert again == sc
        assert simulate(again) == simulate(sc)

    def test_unknown_key_with_line(self):
        text = GOOD.replace("  noise_std: 0.01", "  noise_std: 0.01\n  colour: red")
        with pytest.raises(ScenarioError, match=r"line 18: unknown key 'colour'") as info:
            parse_scenario(text)
        assert info.value.line == 18

    def test_missing_key_named(self):
        text = GOOD.replace("duration_s: 2.0\n", "")
        with pytest.raises(ScenarioError, match="missing required key 'duration_s'"):
            parse_scenario(text)

    @pytest.mark.parametrize("old,new,msg", [
        ("delay_bins: 4.0}", "delay_bins: 4.0, delay_s: 1e-9}", "exactly one"),
        ("n_bins: 32", "n_bins: 32.5", "n_bins must be an integer"),
        ("coupling: 2.0", "coupling: 3.0", "coupling"),
        ("seed: 3", "seed: [3]", "seed must be an integer"),
        ("duration_s: 2.0", "duration_s: -2.0", "duration_s must be > 0"),
        ("waveform: triangular", "waveform: sinusoid", "speed_m_s is only valid"),
        ("reference_bin: 25", "reference_bin: 5", "reference_bin"),
        ("gain_magnitude: [0.5, 2.0]", "gain_magnitude: 0.5", "gain_magnitude"),
    ])
    def test_schema_errors(self, old, new, msg):
        with pytest.raises(ScenarioError, match=msg) as info:
            parse_scenario(GOOD.replace(old, new))
        assert info.value.line is not None

    def test_malformed_and_empty(self):
        with pytest.raises(ScenarioError, match="malformed"):
            parse_scenario("seed: [1,\n")
        with pytest.raises(ScenarioError, match="empty"):
            parse_scenario("")


class TestPresets:
    def test_names(self):
        sc = preset("los-2mm-0.3hz", seed=4)
        assert sc.motion.displacement_m == pytest.approx(0.002)
        assert sc.motion.rate_hz == pytest.approx(0.3)
        assert sc.seed == 4 and sc.name == "los-2mm-0.3hz"
        assert preset("NLOS-8mm").motion.displacement_m == pytest.approx(0.008)
        assert preset("static").channel.breathing_paths == ()
        with pytest.raises(ScenarioError, match="unknown preset"):
            preset("outdoor")

    def test_recording_shape(self):
        rec = simulate(preset("los-2mm-0.3hz"))
        assert len(rec) == 965 and rec.n_bins == 96
        assert rec.nominal_rate_hz == 19.3 and rec.ground_truth_hz == 0.3
        assert rec.meta["preset"] == "los-2mm-0.3hz"
        assert simulate(static_scenario()).ground_truth_hz is None

    def test_nlos_layout(self):
        sc = nlos_spread_scenario(n_paths=4)
        assert len(sc.channel.breathing_paths) == 4
        bins = [sc.channel.delay_to_bin(p.base_delay_s) for p in sc.channel.breathing_paths]
        np.testing.assert_allclose(bins, NLOS_SPREAD_BINS[:4], atol=0.2)
        # layout does not depend on the seed
        assert nlos_spread_scenario(seed=1).channel == nlos_spread_scenario(seed=2).channel
        with pytest.raises(ValueError):
            nlos_spread_scenario(n_paths=0)

    def test_los_noise_level(self):
        sc = los_scenario(noise_db=-20)
        assert sc.artifacts.noise_std == pytest.approx(0.1)
        assert sc.artifacts.jitter_std_s == 0.005


class TestSweepSpec:
    def test_parse(self):
        spec = parse_sweep("displacements_mm: [2, 3]\npresets: [los, nlos]\nseeds: [0, 1]\nhop_snapshots: 5\n")
        assert spec.displacements_mm == (2.0, 3.0)
        assert spec.presets == ("los", "nlos") and spec.seeds == (0, 1) and spec.hop_snapshots == 5

    @pytest.mark.parametrize("text", [
        "", "displacements_mm: []\npresets: [los]\n", "displacements_mm: [2]\npresets: []\n",
        "displacements_mm: [2]\npresets: [los]\nseeds: []\n",
    ])
    def test_no_cases(self, text):
        with pytest.raises(ScenarioError, match="no cases"):
            parse_sweep(text)

    def test_bad_preset(self):
        with pytest.raises(ScenarioError, match="line 2"):
            parse_sweep("displacements_mm: [2]\npresets: [indoor]\n")
