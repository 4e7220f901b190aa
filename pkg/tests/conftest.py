import numpy as np
import pytest

from trilemma.qobjects import Observable, computational_basis_observable


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


@pytest.fixture
def fixture_obs():
    """The unsharp qubit observable E_0 = diag(0.7, 0.3), E_1 = diag(0.3, 0.7)."""
    return Observable.from_effects([np.diag([0.7, 0.3]), np.diag([0.3, 0.7])])


@pytest.fixture
def z_obs():
    return computational_basis_observable(2)


@pytest.fixture
def ket0():
    return np.diag([1.0, 0.0]).astype(complex)


@pytest.fixture
def ket1():
    return np.diag([0.0, 1.0]).astype(complex)


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def record_criterion():
    """Store ``(passed, detail)`` for an acceptance criterion; printed after the run."""

    def record(number, title, passed, detail):
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} ({detail})")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {number:>2}. {title}: {detail}")
