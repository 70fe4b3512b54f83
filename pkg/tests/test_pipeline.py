from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone

from cirfusion.calib import CalibrationConfig, calibrate
from cirfusion.model import ArtifactSpec, CirSnapshot
from cirfusion.pipeline import (
    BreathingEstimate,
    BreathingRateEstimator,
    ScenarioReport,
    WindowConfig,
    compare_methods,
    estimate_window,
    interpolate_uniform,
    iter_windows,
    run_recording,
    window_starts,
)
from cirfusion.fusion import select_bin
from cirfusion.scenario import LOS_BREATHING_BIN, REFERENCE_BIN, los_scenario, nlos_spread_scenario, simulate
from cirfusion.spectral import BandOfInterest, detect_peak, psd_on_grid

FAST = WindowConfig(hop_snapshots=40)


def clean_los(rate_hz=0.3, seed=0):
    sc = los_scenario(rate_hz=rate_hz, seed=seed)
    return simulate(replace(sc, artifacts=ArtifactSpec()))


class TestInterpolation:
    def test_uniform_input_unchanged(self, rng):
        bins = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
        ts = 3.0 + np.arange(50) / 19.3
        out = interpolate_uniform(bins, 19.3, timestamps=ts)
        np.testing.assert_array_equal(out.data, bins)

    def test_midpoint(self):
        snaps = [CirSnapshot(0.0, np.array([0.0 + 0j])), CirSnapshot(1.0, np.array([1.0 + 2j]))]
        out = interpolate_uniform(snaps, 2.0)
        np.testing.assert_allclose(out.data[:, 0], [0.0, 0.5 + 1j])

    def test_clamps_past_last_timestamp(self):
        bins = np.array([[1.0], [2.0], [3.0]], dtype=complex)
        out = interpolate_uniform(bins, 1.0, timestamps=[0.0, 0.5, 1.0])
        np.testing.assert_allclose(out.data[:, 0], [1.0, 3.0, 3.0])

    def test_errors(self):
        with pytest.raises(ValueError, match="increasing"):
            interpolate_uniform(np.ones((3, 2)), 10.0, timestamps=[0.0, 0.2, 0.1])
        with pytest.raises(ValueError):
            interpolate_uniform(np.ones((1, 2)), 10.0, timestamps=[0.0])

    def test_removes_jitter(self):
        g = np.random.default_rng(7)
        rate, f0, n = 19.3, 0.3, 800
        ts = np.arange(n) / rate + np.clip(g.normal(0, 0.005, n), -0.02, 0.02)
        x = np.exp(2j * np.pi * f0 * ts)[:, None]
        out = interpolate_uniform(x, rate, timestamps=ts)
        f, _ = detect_peak(psd_on_grid(out.data[:, 0], rate))
        assert abs(f - f0) <= 0.002


class TestConfig:
    def test_defaults(self):
        cfg = WindowConfig()
        assert (cfg.window_snapshots, cfg.hop_snapshots, cfg.nominal_rate_hz, cfg.resolution_hz) == (
            800, 1, 19.3, 0.001)
        assert cfg.band == BandOfInterest(0.1, 0.5)
        assert cfg.to_dict()["band"] == "0.1:0.5"

    def test_window_must_hold_two_periods(self):
        with pytest.raises(ValueError, match="two periods"):
            WindowConfig(window_snapshots=300)

    @pytest.mark.parametrize("kwargs", [
        {"method": "median"}, {"hop_snapshots": 0}, {"count_convention": "other"},
        {"noise_floor_factor": -1.0}, {"edge_margin_bins": -0.5},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            WindowConfig(**kwargs)


class TestWindowAccounting:
    def test_exclusive_count(self):
        assert len(window_starts(965)) == 165
        assert len(window_starts(965, WindowConfig(count_convention="inclusive"))) == 166

    @pytest.mark.parametrize("s", [1600, 1700, 2400, 965])
    def test_non_overlapping(self, s):
        cfg = WindowConfig(hop_snapshots=800, count_convention="inclusive")
        starts = window_starts(s, cfg)
        assert len(starts) == (s - 800) // 800 + 1
        assert all(b - a == 800 for a, b in zip(starts, starts[1:]))

    def test_short_recording(self):
        assert len(window_starts(799)) == 0
        rec = simulate(los_scenario(duration_s=30))
        with pytest.raises(ValueError, match="fewer than one"):
            run_recording(rec)

    def test_windows_use_valid_bins(self):
        rec = calibrate(simulate(los_scenario(duration_s=42)))
        lo, hi = rec.meta["valid_bins"]
        (start, m), = list(iter_windows(rec, FAST))
        assert start == 0 and m.shape == (800, hi - lo)


class TestEstimateWindow:
    @pytest.mark.parametrize("method", ["selection", "fusion"])
    def test_clean_los(self, method):
        rec = calibrate(clean_los())
        cfg = replace(FAST, method=method)
        _, m = next(iter(iter_windows(rec, cfg)))
        est = estimate_window(m, cfg, 0)
        assert est.ok and est.method == method
        assert est.rate_hz == pytest.approx(0.3, abs=0.001)
        assert (est.lam is None) == (method == "selection")

    def test_selection_finds_breathing_bin(self):
        rec = calibrate(simulate(los_scenario(seed=3)))
        lo, _ = rec.meta["valid_bins"]
        _, m = next(iter(iter_windows(rec, FAST)))
        k, _ = select_bin(m, FAST.plan())
        moved = rec.meta["reference_bin"] - REFERENCE_BIN  # alignment moves the whole CIR
        assert k + lo == round(LOS_BREATHING_BIN) + moved

    def test_degenerate_window_is_recorded(self):
        est = estimate_window(np.zeros((800, 5)), WindowConfig(), 17)
        assert est == BreathingEstimate(17, None, None, "fusion", status="degenerate")
        assert not est.ok

    def test_row_count_checked(self):
        with pytest.raises(ValueError):
            estimate_window(np.ones((700, 3)), WindowConfig())


class TestRecording:
    def test_report_and_determinism(self):
        rec = simulate(los_scenario(seed=1))
        a = run_recording(rec, FAST)
        b = run_recording(rec, FAST)
        assert a == b
        assert len(a.estimates) == 5
        assert a.ground_truth_hz == 0.3 and a.n_failed == 0
        assert a.median_abs_error_hz <= 0.005
        assert all(0.1 <= e.rate_hz <= 0.5 for e in a.estimates)
        s = a.summary()
        assert s["n_windows"] == 5 and s["config"]["calibration"]["search_start_bin"] == 75

    def test_compare_uses_identical_windows(self):
        rec = simulate(nlos_spread_scenario(seed=2))
        sel, fus = compare_methods(rec, FAST)
        assert [e.window_start_index for e in sel.estimates] == [e.window_start_index for e in fus.estimates]
        assert sel.method == "selection" and fus.method == "fusion"
        single = run_recording(rec, replace(FAST, method="fusion"))
        assert single.estimates == fus.estimates
        for s, f in zip(sel.estimates, fus.estimates):
            assert f.lam >= s.band_ratio - 1e-9

    def test_calibrated_flag_skips_calibration(self):
        raw = simulate(los_scenario(seed=4))
        cal = calibrate(raw, CalibrationConfig())
        assert run_recording(cal, FAST, calibrated=True) == run_recording(raw, FAST)

    def test_empty_report(self):
        r = ScenarioReport((), None, "fusion")
        assert r.median_abs_error_hz is None and r.median_confidence is None

    def test_nlos_fusion_beats_selection_over_100_windows(self):
        cfg = WindowConfig(hop_snapshots=6)
        errors = {"selection": [], "fusion": []}
        for seed in range(4):
            for r in compare_methods(simulate(nlos_spread_scenario(seed=seed)), cfg):
                errors[r.method] += list(r.abs_errors)
        assert len(errors["fusion"]) >= 100
        assert np.median(errors["fusion"]) < np.median(errors["selection"])

    def test_static_confidence_below_moving(self):
        from cirfusion.scenario import static_scenario
        moving = run_recording(simulate(los_scenario(seed=5)), FAST)
        static = run_recording(simulate(static_scenario(seed=5)), FAST)
        assert static.ground_truth_hz is None
        assert static.median_confidence < moving.median_confidence


class TestEstimator:
    def test_predict(self):
        rec = calibrate(clean_los())
        windows = np.stack([m.data for _, m in iter_windows(rec, WindowConfig(hop_snapshots=80))])
        est = BreathingRateEstimator().fit()
        rates = est.predict(windows)
        assert rates.shape == (len(windows),)
        np.testing.assert_allclose(rates, 0.3, atol=0.001)
        assert est.predict(windows[0]).shape == (1,)
        assert np.isnan(est.predict(np.zeros((800, 3)))[0])
        with pytest.raises(ValueError):
            est.predict(np.zeros(5))

    def test_params(self):
        est = BreathingRateEstimator(method="selection", resolution_hz=0.002)
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        assert twin.get_params()["edge_margin_bins"] == 0.5
        with pytest.raises(ValueError):
            BreathingRateEstimator(method="bogus").fit()
