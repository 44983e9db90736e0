import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wavesrc.corpus import ip1_sweep, ip3_planar, narrow_ip1  # noqa: E402
from wavesrc.forward import extract_boundary, solve  # noqa: E402

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def narrow():
    """Narrow tapered Gaussian corpus: scenario, solved field and traces on the unit sphere."""
    scen = narrow_ip1()
    src = scen.source
    fld = solve(src, scen.grid)
    ds = extract_boundary(fld, scen.radius_R, scen.n_theta, scen.n_phi, src.T0)
    return scen, fld, ds


@pytest.fixture(scope="session")
def wide_ds():
    """Traces of the wide Kaiser-Bessel corpus used by the IP1 sweeps."""
    scen = ip1_sweep()
    src = scen.source
    ds = extract_boundary(solve(src, scen.grid), scen.radius_R, scen.n_theta, scen.n_phi, src.T0)
    return scen, ds


@pytest.fixture(scope="session")
def planar_ds():
    scen = ip3_planar()
    src = scen.source
    ds = extract_boundary(solve(src, scen.grid), scen.radius_R, scen.n_theta, scen.n_phi, src.T0)
    return scen, ds


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
