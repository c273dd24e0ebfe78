import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_gains(rng: np.random.Generator, K: int, M: int, lo: float = 1.0, hi: float = 1e3) -> np.ndarray:
    """Log-uniform positive gains, the spread typical of noise-normalized path gains."""
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=(K, M)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def worked_example():
    """Two UEs, two ANs, L=100, p=1; UE k on AN k gives SINRs 500 and 800/3."""
    return np.array([[10.0, 1.0], [2.0, 8.0]]), 100, 1.0


# acceptance verdicts: one line per criterion in the terminal summary
_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")
    config.stash[_VERDICTS] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or (rep.when == "setup" and rep.failed)):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    verdict = "PASS" if rep.passed else "FAIL"
    item.config.stash[_VERDICTS].append((mark.args[0], mark.args[1], verdict, detail))


def pytest_terminal_summary(terminalreporter, config):
    verdicts = sorted(config.stash.get(_VERDICTS, []))
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in verdicts:
        terminalreporter.write_line(f"criterion {number} [{verdict}] {title}: {detail}")
