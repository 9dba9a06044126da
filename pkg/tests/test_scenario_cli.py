"""Scenario file parsing, serialization round trips, and the CLI commands."""
import csv
import os

import pytest

from orbitfed import cli, scenario
from orbitfed.scenario import ScenarioError, dumps, loads

MINIMAL = """\
[scenario]
seed = 1
"""


# ---------------------------------------------------------------------------
# Scenario loading
# ---------------------------------------------------------------------------


def test_bundled_scenario_values(bundled_scenario):
    scn = bundled_scenario
    c = scn.constellation
    assert (c.total_sats, c.planes, c.phase_deg) == (80, 4, 45.0)
    assert (c.altitude_km, c.inclination_deg) == (590.0, 90.0)
    assert scn.sgl.carrier_frequency_hz == 20e9
    assert scn.sgl.bandwidth_hz == 250e6
    assert scn.sgl.tx_power_w == pytest.approx(100.0)  # 50 dBm
    assert scn.isl.fixed_rate_bps == 1e10
    assert len(scn.ground_stations) == 3
    assert scn.seed == 42


def test_minimal_scenario_gets_documented_defaults():
    scn = loads(MINIMAL)
    assert scn.constellation.total_sats == 80
    assert scn.sgl.rain_rate_mmh == 0.0  # no rain section -> zero-rain default
    assert scn.sgl.multipath == ()  # direct-path-only default
    assert scn.workload.local_epochs == 1
    assert scn.strategy == "proposed"


def test_seed_is_mandatory():
    with pytest.raises(ScenarioError, match="seed"):
        loads("[scenario]\nname = x\n")


def test_rejects_unknown_section_and_key():
    with pytest.raises(ScenarioError, match="unknown section"):
        loads(MINIMAL + "[thrusters]\nfuel = 3\n")
    with pytest.raises(ScenarioError, match="unknown key"):
        loads(MINIMAL + "[workload]\nwarp_factor = 9\n")


def test_rejects_sats_not_multiple_of_planes():
    text = MINIMAL + "[constellation]\ntotal_sats = 81\nplanes = 4\n"
    with pytest.raises(ScenarioError, match="multiple"):
        loads(text)


def test_rejects_mixed_fixed_rate_and_budget():
    with pytest.raises(ScenarioError, match="mutually exclusive"):
        loads(MINIMAL + "[isl]\nfixed_rate_bps = 1e10\ntx_power_w = 5\n")
    with pytest.raises(ScenarioError, match="mutually exclusive"):
        loads(MINIMAL + "[sgl]\nfixed_rate_bps = 2e8\ntx_power_dbm = 50\n")


def test_rejects_non_numeric_value():
    with pytest.raises(ScenarioError, match="number"):
        loads(MINIMAL + "[time]\nstep_s = fast\n")


def test_rejects_unknown_strategy():
    with pytest.raises(ScenarioError, match="strategy"):
        loads("[scenario]\nseed = 1\nstrategy = psychic\n")


def test_ground_station_parsing():
    scn = loads(MINIMAL + "[ground_stations]\ngs1 = 10.5, -20.25, 100, 5\n")
    gs = scn.ground_stations[0]
    assert (gs.latitude_deg, gs.longitude_deg) == (10.5, -20.25)
    assert (gs.altitude_m, gs.min_elevation_deg) == (100.0, 5.0)
    with pytest.raises(ScenarioError, match="lat_deg"):
        loads(MINIMAL + "[ground_stations]\ngs1 = 10.5, -20.25\n")


def test_gain_dbi_conversion():
    scn = loads(MINIMAL + "[isl]\ntx_gain_dbi = 35\nrx_gain_dbi = 35\n")
    assert scn.isl.tx_gain == pytest.approx(3162.2776, rel=1e-6)
    assert scn.isl.rx_gain == pytest.approx(3162.2776, rel=1e-6)


def test_round_trip_identity(bundled_scenario, tiny_scenario):
    for scn in (bundled_scenario, tiny_scenario):
        assert loads(dumps(scn)) == scn
        # serialization is a fixed point after the first pass
        assert dumps(loads(dumps(scn))) == dumps(scn)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_cli_simulate_writes_reports(tiny_scenario_path, tmp_path):
    out = tmp_path / "out"
    code = cli.main(["simulate", "--scenario", tiny_scenario_path, "--out", str(out)])
    assert code == cli.EXIT_OK
    rows = _read_csv(out / "report.csv")
    assert rows[0] == list(cli.REPORT_HEADER)
    assert len(rows) == 2  # header + one round
    totals = _read_csv(out / "totals.csv")
    assert totals[1][0] == "proposed"


def test_cli_strategy_override(tiny_scenario_path, tmp_path):
    out = tmp_path / "out"
    code = cli.main(
        ["simulate", "--scenario", tiny_scenario_path, "--out", str(out), "--strategy", "tos"]
    )
    assert code == cli.EXIT_OK
    totals = _read_csv(out / "totals.csv")
    assert totals[1][0] == "tos"
    assert float(totals[1][5]) == 0.0  # no satellite-ground time for on-board training


def test_cli_missing_scenario_file(tmp_path):
    assert cli.main(["simulate", "--scenario", str(tmp_path / "nope.scn")]) == cli.EXIT_CONFIG


def test_cli_invalid_scenario_exits_config(tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text("[scenario]\nseed = 1\n[constellation]\ntotal_sats = 81\nplanes = 4\n")
    assert cli.main(["simulate", "--scenario", str(bad)]) == cli.EXIT_CONFIG


def test_cli_non_completion_exits_3(tmp_path):
    no_gs = tmp_path / "no_gs.scn"
    no_gs.write_text(
        "[scenario]\nseed = 1\n[constellation]\ntotal_sats = 8\nplanes = 2\n"
        "[time]\nsteps = 10\n[isl]\nfixed_rate_bps = 1e10\n[sgl]\nfixed_rate_bps = 2e8\n"
    )
    code = cli.main(["simulate", "--scenario", str(no_gs), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_INCOMPLETE


def test_cli_validate_ok(tiny_scenario_path, capsys):
    assert cli.main(["validate", "--scenario", tiny_scenario_path]) == cli.EXIT_OK
    assert "OK" in capsys.readouterr().out


def test_cli_validate_detects_broken_ring(tiny_scenario_path, monkeypatch, capsys):
    from orbitfed.fedsim import TopologyProvider

    original = TopologyProvider.__call__

    def broken(self, t):
        snap = original(self, t)
        # drop one ring edge: plane 1 is no longer a single N-cycle
        return type(snap)(
            snap.step, snap.intra_orbit_edges[1:], snap.inter_orbit_edges,
            snap.sgl_edges, snap.gs_ps_rate_bps,
        )

    monkeypatch.setattr(TopologyProvider, "__call__", broken)
    code = cli.main(["validate", "--scenario", tiny_scenario_path])
    assert code == cli.EXIT_VALIDATION
    assert "cycle" in capsys.readouterr().out


def test_cli_windows(tiny_scenario_path, tmp_path):
    out = tmp_path / "w"
    assert cli.main(["windows", "--scenario", tiny_scenario_path, "--out", str(out)]) == 0
    rows = _read_csv(out / "windows.csv")
    assert rows[0] == ["plane", "slot", "gs_id", "start_step", "end_step", "duration_s"]
    assert len(rows) > 1
    stats = _read_csv(out / "window_stats.csv")
    assert stats[0] == ["mean_window_s", "mean_revisit_s"]
    assert float(stats[1][0]) > 0


def test_cli_topology_dump(tiny_scenario_path, tmp_path):
    out = tmp_path / "t"
    code = cli.main(
        ["topology", "--scenario", tiny_scenario_path, "--out", str(out), "--steps", "3"]
    )
    assert code == cli.EXIT_OK
    rows = _read_csv(out / "topology.csv")
    assert rows[0] == ["step", "kind", "from", "to", "rate_bps"]
    steps = {r[0] for r in rows[1:]}
    assert steps == {"0", "1", "2"}


def test_cli_sweep(tiny_scenario_path, tmp_path):
    out = tmp_path / "s"
    code = cli.main(
        [
            "sweep", "--scenario", tiny_scenario_path, "--out", str(out),
            "--axis", "data_volume", "1:3:3",
        ]
    )
    assert code == cli.EXIT_OK
    rows = _read_csv(out / "sweep.csv")
    assert rows[0][0] == "data_volume"
    assert len(rows) == 4  # header + 3 grid points


def test_cli_sweep_requires_axis(tiny_scenario_path, tmp_path):
    code = cli.main(["sweep", "--scenario", tiny_scenario_path, "--out", str(tmp_path / "x")])
    assert code == cli.EXIT_CONFIG


def test_cli_rejects_unknown_axis(tiny_scenario_path, tmp_path):
    code = cli.main(
        [
            "sweep", "--scenario", tiny_scenario_path, "--out", str(tmp_path / "x"),
            "--axis", "warp", "1:2",
        ]
    )
    assert code == cli.EXIT_CONFIG


def test_cli_sweep_svg(tiny_scenario_path, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    code = cli.main(
        [
            "sweep", "--scenario", tiny_scenario_path, "--out", str(out),
            "--axis", "data_volume", "1:2:2", "--format", "svg",
        ]
    )
    assert code == cli.EXIT_OK
    assert (out / "sweep.svg").exists()
