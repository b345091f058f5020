"""Collects the acceptance verdicts and prints one line per criterion at the end of the run."""

RESULTS = {}


def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
    prev = RESULTS.get(number)
    ok = bool(passed) and (prev is None or prev[1])
    RESULTS[number] = (title, ok, "; ".join(x for x in ((prev[2] if prev else ""), detail) if x))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, ok, detail = RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}")
