import pytest

from dotbayes import DetectorModel, QubitHamiltonian

# reference detector used throughout: delta_i = 1, i0 = 10.5,
# s_i = 2 e i0 = 1 exactly, so gamma_measurement = 1/4 and tau_loc = 2
E_CHARGE = 1.0 / 21.0


@pytest.fixture
def det():
    return DetectorModel(i1=10.0, i2=11.0, s_i=1.0, e_charge=E_CHARGE)


@pytest.fixture
def ham0():
    return QubitHamiltonian(0.0, 0.0)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collector for one pass/fail line per acceptance criterion."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
