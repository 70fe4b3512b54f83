"""Text file formats: recordings, per-window report CSV and summary JSON.

A recording file starts with one header line::

    #cirfusion-recording v1 {"n_bins": 96, "nominal_rate_hz": 19.3, ...}

followed by one line per snapshot: the timestamp, then real and imaginary
parts of every bin. Numbers are written with 17 significant digits, so a
write/read cycle reproduces finite values exactly.
"""

import csv
import io
import json

import numpy as np

from .errors import RecordingFormatError
from .model import CirRecording

MAGIC = "#cirfusion-recording"
VERSION = "v1"
REPORT_COLUMNS = ("window_start", "method", "rate_hz", "confidence", "lambda", "band_ratio", "status")


def _header(recording):
    meta = {
        "n_bins": recording.n_bins,
        "nominal_rate_hz": recording.nominal_rate_hz,
        **{k: v for k, v in recording.meta.items() if k not in ("n_bins", "nominal_rate_hz")},
    }
    return f"{MAGIC} {VERSION} {json.dumps(meta, sort_keys=True)}"


def format_recording(recording):
    """Serialize a recording to the text format."""
    n = len(recording)
    table = np.empty((n, 1 + 2 * recording.n_bins))
    table[:, 0] = recording.timestamps
    table[:, 1::2] = recording.bins.real
    table[:, 2::2] = recording.bins.imag
    buf = io.StringIO()
    buf.write(_header(recording) + "\n")
    if n:
        np.savetxt(buf, table, fmt="%.17g")
    return buf.getvalue()


def write_recording(recording, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_recording(recording))


def _parse_header(line):
    parts = line.rstrip("\n").split(" ", 2)
    if len(parts) < 3 or parts[0] != MAGIC:
        raise RecordingFormatError(f"line 1: expected a '{MAGIC} {VERSION} {{...}}' header")
    if parts[1] != VERSION:
        raise RecordingFormatError(f"line 1: unsupported format version {parts[1]!r}")
    try:
        meta = json.loads(parts[2])
    except json.JSONDecodeError as exc:
        raise RecordingFormatError(f"line 1: bad header metadata: {exc.msg}") from None
    if not isinstance(meta, dict):
        raise RecordingFormatError("line 1: header metadata must be a JSON object")
    for key in ("n_bins", "nominal_rate_hz"):
        if key not in meta:
            raise RecordingFormatError(f"line 1: header is missing {key!r}")
    n_bins = meta["n_bins"]
    if not isinstance(n_bins, int) or isinstance(n_bins, bool) or n_bins < 1:
        raise RecordingFormatError("line 1: n_bins must be a positive integer")
    return meta


def parse_recording(text):
    """Inverse of :func:`format_recording`."""
    lines = text.splitlines(keepends=True)
    if not lines:
        raise RecordingFormatError("empty recording file")
    meta = _parse_header(lines[0])
    n_bins = meta.pop("n_bins")
    rate = meta.pop("nominal_rate_hz")
    width = 1 + 2 * n_bins
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            values = np.array(line.split(), dtype=float)
        except ValueError:
            raise RecordingFormatError(f"line {lineno}: non-numeric value") from None
        if values.size != width:
            raise RecordingFormatError(
                f"line {lineno}: expected {width} numbers (timestamp + {n_bins} re/im pairs), "
                f"got {values.size}"
            )
        rows.append(values)
    table = np.array(rows).reshape(len(rows), width)
    bins = table[:, 1::2] + 1j * table[:, 2::2]
    try:
        return CirRecording(table[:, 0], bins, rate, meta)
    except (TypeError, ValueError) as exc:
        raise RecordingFormatError(str(exc)) from None


def read_recording(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RecordingFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_recording(text)


def _cell(value):
    return "" if value is None else repr(value) if isinstance(value, float) else str(value)


def format_report_csv(*reports):
    """One CSV row per window and method, in window order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for report in reports:
        for e in report.estimates:
            writer.writerow([_cell(v) for v in (
                e.window_start_index, e.method, e.rate_hz, e.confidence, e.lam, e.band_ratio, e.status,
            )])
    return buf.getvalue()


def format_summary(*reports):
    """Summary JSON: per-method medians, ground truth and the configuration used."""
    if not reports:
        raise ValueError("no reports to summarize")
    first = reports[0]
    doc = {
        "ground_truth_hz": first.ground_truth_hz,
        "config": {k: v for k, v in first.config.items() if k != "method"},
        "methods": {},
    }
    for r in reports:
        s = r.summary()
        doc["methods"][r.method] = {k: s[k] for k in (
            "n_windows", "n_failed", "median_abs_error_hz", "median_confidence")}
    if len(reports) == 1:
        doc.update(doc["methods"][first.method], method=first.method)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
