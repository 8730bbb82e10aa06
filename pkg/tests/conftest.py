import pytest

from orthoroute.constellation import WalkerParams, build_walker_delta


@pytest.fixture(scope="session")
def small_graph():
    return build_walker_delta(WalkerParams.degrees(6, 4, 53.0))


@pytest.fixture(scope="session")
def mesh_12():
    return build_walker_delta(WalkerParams.degrees(12, 12, 53.0))


@pytest.fixture(scope="session")
def default_graph():
    return build_walker_delta(WalkerParams.degrees(24, 66, 53.0))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Print one PASS/FAIL line per acceptance criterion and keep it for the summary."""

    def emit(label: str, ok: bool, detail: str) -> None:
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        print("\n" + line)
        _ACCEPTANCE_LINES.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
