import numpy as np
import pytest

from cirfusion.model import (
    ArtifactSpec,
    EmulatorMotion,
    MultipathChannel,
    PathSpec,
    UWB_CH2_BANDWIDTH_HZ,
)

BW = UWB_CH2_BANDWIDTH_HZ


def bins_to_delay(k):
    return k / BW


def small_channel(breathing_bin=10.0, reference_bin=40, n_bins=48, coupling=2.0):
    """Static path at bin 2, one breathing path and a reference path."""
    return MultipathChannel(
        paths=(
            PathSpec(3.0, bins_to_delay(2)),
            PathSpec(0.8 * np.exp(0.4j), bins_to_delay(breathing_bin), coupling),
            PathSpec(8.0, bins_to_delay(reference_bin)),
        ),
        n_bins=n_bins,
        reference_bin=reference_bin,
    )


def random_h(rng, n_rows, n_cols):
    return rng.standard_normal((n_rows, n_cols)) + 1j * rng.standard_normal((n_rows, n_cols))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sinus_motion():
    return EmulatorMotion("sinusoid", 0.005, 0.3)


@pytest.fixture
def no_artifacts():
    return ArtifactSpec()


# ------------------------------------------------------- acceptance report

_ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE[number] = (title, call.excinfo is None, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
