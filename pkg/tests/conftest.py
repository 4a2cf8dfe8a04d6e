import pytest

from fuseprint import backends
from fuseprint.synth import build_dataset

# nodeid -> outcome for the acceptance module, printed as a summary block
_ACCEPTANCE = {}


@pytest.fixture(scope="session", autouse=True)
def _warm_backend():
    # pay any JIT compilation up front so timed tests measure compute only
    backends.warmup()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A 6-subject, 3-sample synthetic dataset shared across test modules."""
    root = tmp_path_factory.mktemp("smallds")
    return build_dataset(subjects=6, samples=3, seed=11, out_dir=str(root))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.fspath.basename == "test_acceptance.py":
        _ACCEPTANCE[item.name] = rep.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(
            f"{name}: {'PASS' if _ACCEPTANCE[name] == 'passed' else 'FAIL'}"
        )
