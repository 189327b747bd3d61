import pytest

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report("C3", ok, "detail")``."""

    def _report(name: str, ok: bool, detail: str) -> bool:
        _CRITERIA[name] = (bool(ok), detail)
        print(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n[1:].split("(")[0].rstrip("abcdefgh"))):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{name:<6} {'PASS' if ok else 'FAIL'}  {detail}")
