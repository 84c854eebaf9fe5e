"""Collects the outcome of each acceptance criterion and prints a summary line per criterion."""

import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}
_NOTES: dict[int, list[str]] = {}


@pytest.fixture
def note(request):
    """Attach a measured value to the summary line of the current criterion."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str) -> None:
        if marker is not None:
            _NOTES.setdefault(marker.args[0], []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    if rep.when == "call" or failed:
        prev = _RESULTS.get(n)
        ok = not failed and (prev is None or prev[1])
        detail = str(rep.longrepr).strip().splitlines()[-1] if failed and rep.longrepr else ""
        _RESULTS[n] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok, detail = _RESULTS[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}"
        if _NOTES.get(n):
            line += "  [" + "; ".join(_NOTES[n]) + "]"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
