"""Command-line entry point: scenario runs, sweeps, and CSV/SVG artifacts.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 non-completion (a transfer could not finish within the scenario grid).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import commsched, constellation, fedsim, netgraph, scenario
from .fedsim import TopologyProvider, TransferIncompleteError

log = logging.getLogger("orbitfed")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3

REPORT_HEADER = (
    "round", "on_board_s", "terrestrial_s", "intra_orbit_s",
    "inter_orbit_s", "sat_ground_s", "wall_clock_s",
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header: tuple[str, ...], rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    log.info("wrote %s", path)


def _maybe_plot(csv_path: str, svg_path: str, x_col: int, y_cols: list[int]) -> None:
    """Render an SVG from an already-written CSV; plotting never feeds back."""
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    xs = [float(r[x_col]) for r in data]
    fig, ax = plt.subplots()
    for col in y_cols:
        ax.plot(xs, [float(r[col]) for r in data], marker="o", label=header[col])
    ax.set_xlabel(header[x_col])
    ax.set_ylabel("seconds")
    ax.legend()
    fig.savefig(svg_path)
    plt.close(fig)
    log.info("wrote %s", svg_path)


def _provider(scn: scenario.Scenario) -> TopologyProvider:
    return TopologyProvider(
        scn.constellation, scn.ground_stations, scn.grid, scn.isl, scn.sgl, scn.gs_ps_rate_bps
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(scn: scenario.Scenario, args) -> int:
    topo = _provider(scn)
    report = fedsim.run_training(
        topo, scn.workload, scn.rounds, scn.strategy, scn.consensus_factor
    )
    rows = [(i + 1, *rt.as_row()) for i, rt in enumerate(report.rounds)]
    _write_csv(os.path.join(args.out, "report.csv"), REPORT_HEADER, rows)
    totals = report.component_totals()
    _write_csv(
        os.path.join(args.out, "totals.csv"),
        ("strategy", *REPORT_HEADER[1:]),
        [(report.strategy, *totals.as_row())],
    )
    if args.format == "svg":
        _maybe_plot(
            os.path.join(args.out, "report.csv"),
            os.path.join(args.out, "report.svg"),
            0, [1, 2, 3, 4, 5, 6],
        )
    return EXIT_OK


AXIS_NAMES = scenario.SWEEP_AXES


def _apply_axis(scn: scenario.Scenario, axis: str, value: float) -> scenario.Scenario:
    c, w = scn.constellation, scn.workload
    if axis == "data_volume":
        w = replace(w, samples_per_satellite=int(round(value)))
    elif axis == "sgl_rate":
        scn = replace(scn, sgl=replace(scn.sgl, fixed_rate_bps=value))
    elif axis == "isl_rate":
        scn = replace(scn, isl=replace(scn.isl, fixed_rate_bps=value))
    elif axis == "sats_per_plane":
        n = int(round(value))
        scn = replace(scn, constellation=replace(c, total_sats=n * c.planes))
    elif axis == "planes":
        p = int(round(value))
        n = c.sats_per_plane
        scn = replace(scn, constellation=replace(c, planes=p, total_sats=n * p))
    elif axis == "blocks":
        w = replace(w, blocks=int(round(value)))
    else:
        raise scenario.ScenarioError(f"unknown sweep axis {axis!r}")
    return replace(scn, workload=w)


def _axis_values(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) == 2:
        start, stop, count = float(parts[0]), float(parts[1]), 5
    elif len(parts) == 3:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        raise scenario.ScenarioError("axis range must be start:stop[:steps]")
    if count < 2:
        raise scenario.ScenarioError("axis needs at least 2 grid points")
    return [float(v) for v in np.linspace(start, stop, count)]


def _sweep_point(scn: scenario.Scenario, axis: str, value: float):
    point = _apply_axis(scn, axis, value)
    topo = _provider(point)
    report = fedsim.run_training(
        topo, point.workload, point.rounds, point.strategy, point.consensus_factor
    )
    return (value, *report.component_totals().as_row())


def cmd_sweep(scn: scenario.Scenario, args) -> int:
    if not args.axis:
        raise scenario.ScenarioError("sweep requires --axis NAME START:STOP[:STEPS]")
    axis, rng = args.axis
    values = _axis_values(rng)
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, [scn] * len(values), [axis] * len(values), values))
    else:
        rows = [_sweep_point(scn, axis, v) for v in values]
    header = (axis, *REPORT_HEADER[1:])
    _write_csv(os.path.join(args.out, "sweep.csv"), header, rows)
    if args.format == "svg":
        _maybe_plot(
            os.path.join(args.out, "sweep.csv"),
            os.path.join(args.out, "sweep.svg"),
            0, [1, 2, 3, 4, 5, 6],
        )
    return EXIT_OK


def cmd_windows(scn: scenario.Scenario, args) -> int:
    wins = constellation.connection_windows(scn.constellation, scn.ground_stations, scn.grid)
    rows = []
    for sat in scn.constellation.sat_ids():
        for w in wins[sat]:
            rows.append(
                (sat.plane, sat.slot, w.gs_id, w.start, w.end, w.duration_steps() * scn.grid.step_s)
            )
    _write_csv(
        os.path.join(args.out, "windows.csv"),
        ("plane", "slot", "gs_id", "start_step", "end_step", "duration_s"),
        rows,
    )
    mean_dur, mean_gap = constellation.window_statistics(wins, scn.grid)
    _write_csv(
        os.path.join(args.out, "window_stats.csv"),
        ("mean_window_s", "mean_revisit_s"),
        [(mean_dur, mean_gap)],
    )
    return EXIT_OK


def cmd_topology(scn: scenario.Scenario, args) -> int:
    topo = _provider(scn)
    steps = min(args.steps or scn.grid.steps, scn.grid.steps)
    rows = []
    for t in range(steps):
        rows.extend(netgraph.snapshot_to_rows(topo(t)))
    _write_csv(
        os.path.join(args.out, "topology.csv"),
        ("step", "kind", "from", "to", "rate_bps"),
        rows,
    )
    return EXIT_OK


def cmd_validate(scn: scenario.Scenario, args) -> int:
    """Run the structural invariant suite against the loaded scenario."""
    topo = _provider(scn)
    spec = scn.constellation
    failures: list[str] = []

    snap = topo(0)
    for p in range(1, spec.planes + 1):
        ring = [e for e in snap.intra_orbit_edges if e.a.plane == p]
        n = spec.sats_per_plane
        expected = n if n > 2 else (1 if n == 2 else 0)
        degree: dict = {}
        for e in ring:
            degree[e.a] = degree.get(e.a, 0) + 1
            degree[e.b] = degree.get(e.b, 0) + 1
        if len(ring) != expected or (n > 2 and any(d != 2 for d in degree.values())):
            failures.append(f"plane {p} intra-orbit edges do not form a single {n}-cycle")
    if any(
        {e.a.plane, e.b.plane} == {1, spec.planes}
        for e in snap.inter_orbit_edges
    ) and spec.planes > 2:
        failures.append("cross-seam inter-orbit edge present")
    inter_degree: dict = {}
    for e in snap.inter_orbit_edges:
        inter_degree[e.a] = inter_degree.get(e.a, 0) + 1
        inter_degree[e.b] = inter_degree.get(e.b, 0) + 1
    if any(d > 2 for d in inter_degree.values()):
        failures.append("satellite with more than two inter-orbit links")

    pos = constellation.propagate(spec, scn.grid, 0)
    norms = np.linalg.norm(pos.reshape(-1, 3), axis=1)
    if np.max(np.abs(norms - spec.orbit_radius_m)) > 1.0:
        failures.append("propagated positions off the orbital sphere by > 1 m")

    for msg in failures:
        print(f"FAIL {msg}")
    if failures:
        return EXIT_VALIDATION
    print("OK all structural invariants hold")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "windows": cmd_windows,
    "topology": cmd_topology,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitfed",
        description="Satellite-ground collaborative fine-tuning latency simulator",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario", required=True, help="path to a .scn scenario file")
    parser.add_argument("--out", default="out", help="artifact output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--strategy", default=None, choices=fedsim.STRATEGIES)
    parser.add_argument(
        "--axis", nargs=2, metavar=("NAME", "START:STOP[:STEPS]"), default=None,
        help=f"sweep axis, one of {', '.join(AXIS_NAMES)}",
    )
    parser.add_argument("--format", choices=("csv", "svg"), default="csv")
    parser.add_argument("--steps", type=int, default=None, help="limit steps for topology dumps")
    parser.add_argument("--workers", type=int, default=1, help="sweep worker processes")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("ORBITFED_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        scn = scenario.load(args.scenario)
        if args.seed is not None:
            scn = replace(scn, seed=args.seed)
        if args.strategy is not None:
            scn = replace(scn, strategy=args.strategy)
        if args.axis is not None and args.axis[0] not in AXIS_NAMES:
            raise scenario.ScenarioError(f"unknown sweep axis {args.axis[0]!r}")
        return COMMANDS[args.command](scn, args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except scenario.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransferIncompleteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE


if __name__ == "__main__":
    sys.exit(main())
