import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cirfusion.calib import calibrate
from cirfusion.errors import RecordingFormatError
from cirfusion.formats import (
    REPORT_COLUMNS,
    format_recording,
    format_report_csv,
    format_summary,
    parse_recording,
    read_recording,
    write_recording,
)
from cirfusion.model import CirRecording
from cirfusion.pipeline import WindowConfig, compare_methods, run_recording
from cirfusion.scenario import los_scenario, simulate

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestRecordingFile:
    def test_round_trip_exact(self, tmp_path):
        rec = calibrate(simulate(los_scenario(duration_s=3)))
        path = tmp_path / "r.rec"
        write_recording(rec, path)
        back = read_recording(path)
        assert back == rec
        assert back.meta["valid_bins"] == rec.meta["valid_bins"]

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_round_trip_property(self, data):
        n = data.draw(st.integers(1, 6))
        bins = data.draw(st.integers(1, 5))
        re = data.draw(arrays(np.float64, (n, bins), elements=finite))
        im = data.draw(arrays(np.float64, (n, bins), elements=finite))
        steps = data.draw(arrays(np.float64, n, elements=st.floats(1e-3, 1e3)))
        rec = CirRecording(np.cumsum(steps), re + 1j * im, 19.3, {"ground_truth_hz": None})
        assert parse_recording(format_recording(rec)) == rec

    def test_header_and_lines(self):
        rec = simulate(los_scenario(duration_s=1))
        text = format_recording(rec)
        lines = text.splitlines()
        assert lines[0].startswith("#cirfusion-recording v1 {")
        header = json.loads(lines[0].split(" ", 2)[2])
        assert header["n_bins"] == 96 and header["nominal_rate_hz"] == 19.3
        assert header["ground_truth_hz"] == 0.3 and header["preset"] == "los-5mm-0.3hz"
        assert len(lines) == 1 + len(rec)
        assert len(lines[1].split()) == 1 + 2 * 96

    @pytest.mark.parametrize("text,msg", [
        ("", "empty"),
        ("hello\n", "header"),
        ("#cirfusion-recording v9 {}\n", "version"),
        ("#cirfusion-recording v1 {bad\n", "metadata"),
        ('#cirfusion-recording v1 {"n_bins": 1}\n', "nominal_rate_hz"),
        ('#cirfusion-recording v1 {"n_bins": 0, "nominal_rate_hz": 1}\n', "n_bins"),
        ('#cirfusion-recording v1 {"n_bins": 1, "nominal_rate_hz": 1}\n0 1\n', "line 2: expected 3"),
        ('#cirfusion-recording v1 {"n_bins": 1, "nominal_rate_hz": 1}\n0 1 x\n', "line 2: non-numeric"),
        ('#cirfusion-recording v1 {"n_bins": 1, "nominal_rate_hz": 1}\n1 1 1\n0 1 1\n', "increasing"),
    ])
    def test_malformed(self, text, msg):
        with pytest.raises(RecordingFormatError, match=msg):
            parse_recording(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(RecordingFormatError, match="cannot read"):
            read_recording(tmp_path / "nope.rec")


class TestReports:
    def test_csv(self):
        rec = simulate(los_scenario(seed=2))
        sel, fus = compare_methods(rec, WindowConfig(hop_snapshots=80))
        rows = list(csv.DictReader(io.StringIO(format_report_csv(sel, fus))))
        assert tuple(rows[0]) == REPORT_COLUMNS
        assert len(rows) == 2 * len(sel.estimates)
        assert rows[0]["method"] == "selection" and rows[0]["lambda"] == ""
        last = rows[-1]
        assert last["method"] == "fusion" and float(last["lambda"]) > 0
        assert float(last["rate_hz"]) == fus.estimates[-1].rate_hz

    def test_summary(self):
        rec = simulate(los_scenario(seed=2))
        report = run_recording(rec, WindowConfig(hop_snapshots=80))
        doc = json.loads(format_summary(report))
        assert doc["config"]["band"] == "0.1:0.5"
        assert doc["method"] == "fusion" and doc["ground_truth_hz"] == 0.3
        assert doc["median_abs_error_hz"] == report.median_abs_error_hz
        assert doc["methods"]["fusion"]["n_windows"] == 3
        with pytest.raises(ValueError):
            format_summary()
