import json
from pathlib import Path

import pytest

from sinhgordon import ProblemParams

ORACLES = json.loads((Path(__file__).parent / "oracle_values.json").read_text())


@pytest.fixture
def oracle():
    return ORACLES


@pytest.fixture
def ref():
    """Reference parameter set N=2, R=1, gamma=1, a0=2 at eps=0.01."""
    return ProblemParams(dim=2.0, radius=1.0, gamma=1.0, a0=2.0, eps=0.01)


@pytest.fixture(scope="session")
def ref_sweep():
    from sinhgordon.harness import SweepPlan, run_sweep
    return run_sweep(SweepPlan(ProblemParams(2.0, 1.0, 1.0, 2.0, 0.01)))


@pytest.fixture(scope="session")
def ref_sweep_leading():
    from sinhgordon.harness import SweepPlan, run_sweep
    return run_sweep(SweepPlan(ProblemParams(2.0, 1.0, 1.0, 2.0, 0.01), curvature="leading"))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
