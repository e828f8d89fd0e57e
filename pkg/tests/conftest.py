import functools

import pytest

from lsbm.harness import ExperimentConfig, run_experiment

BATCH_REPS = 100
BATCH_SEED = 0


@pytest.fixture(scope="session")
def model_batch():
    """100 seeded repetitions of a built-in model, computed once per session."""

    @functools.lru_cache(maxsize=None)
    def run(model_id):
        cfg = ExperimentConfig.for_model(model_id, BATCH_REPS, BATCH_SEED)
        return run_experiment(cfg)

    return run


_RESULTS = []


def record(name, ok, detail):
    """Remember one acceptance outcome for the terminal summary."""
    _RESULTS.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
