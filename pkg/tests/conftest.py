"""Shared fixtures: the bundled scenario and small synthetic configurations."""
import importlib.resources

import pytest

from orbitfed import scenario
from orbitfed.constellation import GroundStation
from orbitfed.fedsim import TopologyProvider


@pytest.fixture(scope="session")
def bundled_scenario_text() -> str:
    res = importlib.resources.files("orbitfed") / "scenarios" / "walker_80_4_1.scn"
    return res.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def bundled_scenario(bundled_scenario_text) -> scenario.Scenario:
    return scenario.loads(bundled_scenario_text)


@pytest.fixture(scope="session")
def bundled_provider(bundled_scenario) -> TopologyProvider:
    scn = bundled_scenario
    return TopologyProvider(
        scn.constellation, scn.ground_stations, scn.grid, scn.isl, scn.sgl, scn.gs_ps_rate_bps
    )


@pytest.fixture(scope="session")
def dense_ground_stations() -> list[GroundStation]:
    """Globally spread ground segment giving near-continuous orbit coverage.

    Used where a trend should reflect link rates rather than waiting for
    visibility windows.
    """
    stations = []
    gs_id = 1
    for lat in (0, 30, -30, 60, -60):
        for lon in range(-180, 180, 45):
            stations.append(GroundStation(gs_id, lat, lon, 0.0, 5.0))
            gs_id += 1
    return stations


@pytest.fixture(scope="session")
def dense_provider(bundled_scenario, dense_ground_stations) -> TopologyProvider:
    scn = bundled_scenario
    return TopologyProvider(
        scn.constellation, dense_ground_stations, scn.grid, scn.isl, scn.sgl, scn.gs_ps_rate_bps
    )


TINY_SCENARIO = """\
[scenario]
name = tiny
seed = 7
strategy = proposed
rounds = 1

[constellation]
total_sats = 8
planes = 2
phase_deg = 45
altitude_km = 590
inclination_deg = 90
raan_spread_deg = 180

[time]
epoch_utc = 2020-09-24T16:00:00
step_s = 60
steps = 240

[ground_stations]
gs1 = 0, 0, 0, 0
gs2 = 0, 90, 0, 0
gs3 = 0, 180, 0, 0
gs4 = 0, -90, 0, 0
gs5 = 89, 0, 0, 0
gs6 = -89, 0, 0, 0

[isl]
fixed_rate_bps = 1e10

[sgl]
fixed_rate_bps = 2e8

[workload]
samples_per_satellite = 2
embedding_bits_per_sample = 1e6
feature_bits_per_sample = 32000
head_param_bits = 3.52e7
satellite_flops_per_s = 1e9
"""


@pytest.fixture()
def tiny_scenario_path(tmp_path) -> str:
    path = tmp_path / "tiny.scn"
    path.write_text(TINY_SCENARIO, encoding="utf-8")
    return str(path)


@pytest.fixture()
def tiny_scenario() -> scenario.Scenario:
    return scenario.loads(TINY_SCENARIO)
