import pytest

from planarvdw import MaterialModel

# criterion label -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def silica():
    return MaterialModel.lorentz([(1.098, 2.033e16)], name="silica")


@pytest.fixture
def water():
    return MaterialModel.lorentz([(0.77, 1.8e16, 1e15)], name="water")


@pytest.fixture
def dielectric():
    return MaterialModel.lorentz([(2.0, 1e16)], name="d2")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def order(label):
        tag = label.split()[0]
        return int(tag.rstrip("ab")), tag

    for label in sorted(ACCEPTANCE, key=order):
        passed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
