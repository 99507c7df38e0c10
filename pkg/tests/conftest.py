import numpy as np
import pytest

from fedsim.data import apply_standardize, fit_standardize, split, synth_evcs_dataset

ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    """Record one acceptance line; printed in the terminal summary."""

    def _record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS.append((number, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")


@pytest.fixture(scope="session")
def small_split():
    """Standardized 600-row synthetic train/test pair."""
    ds = synth_evcs_dataset(600, n_features=8, seed=11)
    train, test = split(ds, 0.8, seed=11)
    sp = fit_standardize(train)
    return apply_standardize(train, sp), apply_standardize(test, sp)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
