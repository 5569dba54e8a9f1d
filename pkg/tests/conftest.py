import numpy as np
import pytest

from grmsim import Condition, ItemParams, TestForm

# One line per study-level acceptance check, echoed after the run so the
# verdicts are visible without -s.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def item_3d():
    """A four-category item loading the first of three dimensions."""
    return ItemParams(
        slopes=np.array([1.0, 0.0, 0.0]),
        intercepts=np.array([1.0, 0.0, -1.0]),
        loading_dim=0,
    )


def make_form_1d(slopes, intercepts_rows):
    """Unidimensional form from plain slope/intercept lists."""
    items = [
        ItemParams(np.array([a]), np.asarray(d, dtype=float), 0)
        for a, d in zip(slopes, intercepts_rows)
    ]
    return TestForm(items, n_dims=1, n_categories=len(intercepts_rows[0]) + 1)


def tiny_condition(n_persons=300, n_reps=1, rho=0.0, allocation=(2,)):
    return Condition(
        test_length=sum(allocation),
        rho=rho,
        n_persons=n_persons,
        n_reps=n_reps,
        allocation=allocation,
    )
