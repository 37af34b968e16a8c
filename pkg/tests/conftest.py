import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trgc.var_core import VarModel, spectral_radius  # noqa: E402

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if call.when == "setup" and call.excinfo is not None:
        _ACCEPTANCE[number] = (title, "FAIL", "setup error")
    elif call.when == "call":
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE[number] = (title, "FAIL" if call.excinfo else "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[number]
        line = f"[{status}] {number:2d}. {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))


def random_stable_var(rng, p, d=2, scale=0.3, max_radius=0.95, lower_triangular=False, diag_sigma=False):
    """Random stable VarModel by rejection; Sigma is a random PD matrix unless ``diag_sigma``."""
    while True:
        coeffs = rng.normal(0.0, scale, size=(p, d, d))
        if lower_triangular:
            coeffs = np.tril(coeffs)
        if spectral_radius(coeffs) < max_radius:
            break
    if diag_sigma:
        sigma = np.diag(rng.uniform(0.2, 2.0, size=d))
    else:
        g = rng.normal(size=(d, d))
        sigma = g @ g.T + 0.1 * np.eye(d)
    return VarModel(coeffs, sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
