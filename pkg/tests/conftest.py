import numpy as np
import pytest

from mediv import _tilt_py

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _backends():
    out = [pytest.param(_tilt_py, id="python")]
    try:
        from mediv import _tilt
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))
    else:
        out.append(pytest.param(_tilt, id="cython"))
    return out


@pytest.fixture(params=_backends())
def kernel(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def counts_file(tmp_path):
    def write(rows, name="counts.csv", header="species,count"):
        path = tmp_path / name
        body = "\n".join(f"{a},{b}" for a, b in rows)
        path.write_text(f"{header}\n{body}\n", encoding="utf-8")
        return path

    return write
