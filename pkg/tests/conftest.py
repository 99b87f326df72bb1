import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    lines = getattr(results, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("AC")[1].split()[0])):
            terminalreporter.write_line(line)
