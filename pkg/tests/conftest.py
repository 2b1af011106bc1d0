import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ks2d.constants import build_ledger, domain_for_eps_fraction  # noqa: E402
from ks2d.spectral import TWO_PI, Domain  # noqa: E402

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def theorem_setup():
    """Near-critical domain at eps = eps_star / 4 with N = 32, and its ledger."""
    return domain_for_eps_fraction(0.25, 0.1, 32)


@pytest.fixture(scope="session")
def half_setup():
    return domain_for_eps_fraction(0.5, 0.1, 32)


@pytest.fixture(scope="session")
def ledger_1001():
    return build_ledger(Domain.near_critical(1e-3, 1e-3, 32), 0.1)


@pytest.fixture(scope="session")
def wide_domain():
    """Comfortably resolved box with growing modes, where the nonlinearity is visible."""
    return Domain(TWO_PI * 1.2, TWO_PI * 1.15, 16)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.append((mark.args[0], mark.args[1], rep.outcome, rep.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, title, outcome, dur, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {cid:<4} {title} ({dur:.2f} s)"
        if detail:
            line += f" :: {detail}"
        tr.write_line(line)
