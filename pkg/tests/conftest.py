import pytest

# Lines recorded by the acceptance suite, printed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def record(criterion, passed, detail):
        line = '[{0}] criterion {1}: {2}'.format('PASS' if passed else 'FAIL', criterion, detail)
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)
