import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from lambda_lab.domain import Annulus, BoundaryCurve, MappedAnnulus, Punctured, UnitDisk, geometry
from lambda_lab.liouville import solve_liouville
from lambda_lab.series import mobius_series

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

MOBIUS = (0.0, -1.0, 2.0)

_CRITERIA = []


def record_criterion(line: str):
    _CRITERIA.append(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def fixture_solve(spec, h_rel=1 / 256, schedule=(0.04, 0.02, 0.01), **kw):
    sc = geometry(spec).scale
    return solve_liouville(spec, sc * h_rel, [sc * e for e in schedule], **kw)


@pytest.fixture(scope="session")
def annulus_solution():
    return fixture_solve(Annulus(0.5))


@pytest.fixture(scope="session")
def disk_solution():
    return fixture_solve(UnitDisk())


@pytest.fixture(scope="session")
def mobius_spec():
    return MappedAnnulus(mobius_series(*MOBIUS, 0.5, 1.0), 0.5)


@pytest.fixture(scope="session")
def mobius_solution(mobius_spec):
    return fixture_solve(mobius_spec)


@pytest.fixture(scope="session")
def punctured_solutions():
    spec = Punctured(BoundaryCurve.circle(0, 1), (0j,))
    return (
        solve_liouville(spec, 1 / 128, init="distance"),
        solve_liouville(spec, 1 / 128, init="barrier"),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
