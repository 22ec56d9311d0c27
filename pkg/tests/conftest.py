import pytest

from fewshot_intent._kernels import available_backends
from fewshot_intent.fixtures import make_blob_fixture

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(available_backends()))
def backend_name(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setenv("FSI_BACKEND", request.param)
    return request.param


@pytest.fixture(scope="session")
def blob77(tmp_path_factory):
    """Full-size separable fixture: 77 classes, 512 dims, 40 train + 10 test per class."""
    out = tmp_path_factory.mktemp("blob77")
    return make_blob_fixture(out)


@pytest.fixture(scope="session")
def small_blob(tmp_path_factory):
    """Fast fixture for pipeline tests: 10 classes, 32 dims, k30-capable."""
    out = tmp_path_factory.mktemp("blob-small")
    return make_blob_fixture(
        out, classes=10, dim=32, train_per_class=32, test_per_class=4
    )


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the summary."""

    def check(name: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        _ACCEPTANCE_LINES.append(f"{status}  {name}{suffix}")
        assert passed, f"{name}{suffix}"

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
