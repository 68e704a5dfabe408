import pytest

from seqdigraph.state import BOUND_STATS, FAILURE_STATS

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def emit(criterion: int, passed: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return emit


def pytest_collection_modifyitems(config, items):
    # suite-wide checks read process-wide tallies, so they must run last
    last = [it for it in items if it.get_closest_marker("suite_wide")]
    items[:] = [it for it in items if not it.get_closest_marker("suite_wide")] + last


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if ACCEPTANCE_LINES:
        tr.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            tr.write_line(line)
    tr.section("suite-wide tallies")
    tr.write_line(f"bound checks: {BOUND_STATS['states']} states, {BOUND_STATS['violations']} violations")
    tr.write_line(f"failures observed: {FAILURE_STATS['failures']}, "
                  f"gap violations: {FAILURE_STATS['gap_violations']}, "
                  f"max (m-s)/d_max^2: {FAILURE_STATS['max_gap_ratio']:.3f}")
