import numpy as np
import pytest

from pqclone.circuit import search_figure1_layout

GRID = np.arange(7) * np.pi / 12


@pytest.fixture(scope="session")
def searched_layout():
    """One exhaustive search shared by every test that needs it (~20 s)."""
    return search_figure1_layout()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / abs(np.diag(r)))


ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def report(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
