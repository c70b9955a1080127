"""Shared fixtures and the acceptance verdict reporter."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sarsep.geom import Aperture, LinearTrajectory
from sarsep.presets import preset_scene
from sarsep.scene import Radar, SceneSpec, Target, simulate

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

#: Verdicts recorded by the acceptance tests, printed at the end of the run.
ACCEPTANCE_RECORDS: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> bool:
    """Register one acceptance verdict and echo it immediately."""
    ACCEPTANCE_RECORDS[number] = (bool(ok), detail)
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  [{detail}]")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RECORDS):
        ok, detail = ACCEPTANCE_RECORDS[number]
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gotcha_scene():
    """The single-target desk-scale scene (circular collection geometry)."""
    return preset_scene("single")


@pytest.fixture(scope="session")
def single_trace(gotcha_scene):
    """Simulated traces of the single-target desk-scale scene."""
    return simulate(gotcha_scene)


def flat_scene(targets, n=16, ds=0.015, radar=None):
    """Small broadside scene on a straight track, for fast unit tests."""
    traj = LinearTrajectory(
        center=np.array([1.0e4, 0.0, 0.0]),
        tangent=np.array([0.0, 1.0, 0.0]),
        speed=70.0,
    )
    return SceneSpec(
        traj=traj,
        rho_o=np.zeros(3),
        aperture=Aperture(n=n, ds=ds),
        radar=radar if radar is not None else Radar(),
        targets=tuple(
            t if isinstance(t, Target) else Target(rho=np.asarray(t, dtype=float))
            for t in targets
        ),
    )


@pytest.fixture
def flat_scene_builder():
    return flat_scene
