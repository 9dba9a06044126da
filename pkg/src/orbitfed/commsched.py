"""Communication strategy planners and their exact latency models.

Implements the intra-orbit ring collective, the max-flow satellite-ground
scheduler, the minimum-latency inter-orbit path selection, and the three
comparison baselines (sequential ring, no inter-satellite cooperation,
inter-orbit gossip timing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C_LIGHT
from .constellation import SatId, TimeGrid
from .netgraph import (
    FlowNetwork,
    SglEdge,
    TopologySnapshot,
    all_pairs_shortest,
    build_flow_network,
    max_flow,
    slice_capacity,
)

RESIDUAL_TOL = 1e-12


# ---------------------------------------------------------------------------
# Ring collective
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingSend:
    sender: int  # 1-based slot; receiver is the ring successor sender % N + 1
    chunk: int   # 1-based chunk index


@dataclass(frozen=True)
class RingSchedule:
    n: int
    phase: str  # "scatter_reduce" | "gather"
    rounds: tuple[tuple[RingSend, ...], ...]


def ring_allreduce_schedule(n: int) -> tuple[RingSchedule, RingSchedule]:
    """Scatter-reduce and gather schedules for an N-satellite ring.

    In scatter-reduce round r, satellite i sends chunk ((i - r) mod N) + 1
    to its successor; the gather phase circulates the finished chunks,
    shifted by one round. N = 1 needs no communication.
    """
    if n < 1:
        raise ValueError("ring size must be >= 1")
    scatter = []
    gather = []
    for r in range(1, n):
        scatter.append(tuple(RingSend(i, (i - r) % n + 1) for i in range(1, n + 1)))
        gather.append(tuple(RingSend(i, (i - r + 1) % n + 1) for i in range(1, n + 1)))
    return (
        RingSchedule(n, "scatter_reduce", tuple(scatter)),
        RingSchedule(n, "gather", tuple(gather)),
    )


def execute_allreduce(scatter: RingSchedule, gather: RingSchedule, data: list[np.ndarray]) -> list[np.ndarray]:
    """Run both phases on per-satellite vectors; every satellite ends with the sum.

    Vectors are split into N chunks (padded with zeros when the length is
    not divisible). Used by the tests as a full symbolic execution of the
    schedule; the simulator itself only needs the latency formulas.
    """
    n = scatter.n
    if len(data) != n:
        raise ValueError("need one vector per ring participant")
    length = len(data[0])
    padded = math.ceil(length / n) * n if n > 1 else length
    chunks = [np.array_split(np.pad(np.asarray(d, dtype=float), (0, padded - length)), n) for d in data]
    # chunks[sat][chunk]; sat and chunk 0-based internally.
    for sends in scatter.rounds:
        incoming = {}
        for send in sends:
            receiver = send.sender % n + 1
            incoming[(receiver, send.chunk)] = chunks[send.sender - 1][send.chunk - 1].copy()
        for (receiver, chunk), payload in incoming.items():
            chunks[receiver - 1][chunk - 1] += payload
    for sends in gather.rounds:
        incoming = {}
        for send in sends:
            receiver = send.sender % n + 1
            incoming[(receiver, send.chunk)] = chunks[send.sender - 1][send.chunk - 1].copy()
        for (receiver, chunk), payload in incoming.items():
            chunks[receiver - 1][chunk - 1] = payload
    return [np.concatenate(c)[:length] for c in chunks]


def ring_allreduce_time(n: int, size_bits: float, rate_bps: float) -> float:
    """Latency of the two-phase ring collective: 2*(N-1)*size/(N*rate)."""
    if n < 1:
        raise ValueError("ring size must be >= 1")
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    if n == 1:
        return 0.0
    return 2.0 * (n - 1) * size_bits / (n * rate_bps)


def ring_broadcast_time(n: int, payload_bits: float, rate_bps: float) -> float:
    """Latency of the concatenating ring broadcast: (N-1)*c_em/rate."""
    if n < 1:
        raise ValueError("ring size must be >= 1")
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    return (n - 1) * payload_bits / rate_bps


# ---------------------------------------------------------------------------
# Satellite-ground max-flow scheduling
# ---------------------------------------------------------------------------


@dataclass
class OrbitTransferTrace:
    plane: int
    residuals: list[float]            # residual fraction after each processed slice
    completion_s: float | None = None  # seconds after the transfer start


@dataclass
class TransmissionPlan:
    """Per-slice link assignments and per-orbit completion for one transfer."""

    start_s: float
    direction: str  # "up" | "down"
    slice_flows: list[tuple[int, int, str, str, float]]  # (slice, plane, from, to, bits)
    orbits: dict[int, OrbitTransferTrace]

    @property
    def completed(self) -> bool:
        return all(o.completion_s is not None for o in self.orbits.values())

    @property
    def total_time_s(self) -> float:
        """max over orbits of completion time; inf when any orbit never finishes."""
        times = [o.completion_s for o in self.orbits.values()]
        if any(t is None for t in times):
            return math.inf
        return max(times) if times else 0.0

    def incomplete_orbits(self) -> list[int]:
        return [p for p, o in self.orbits.items() if o.completion_s is None]


def sgl_transfer(
    grid: TimeGrid,
    snapshots,
    start_s: float,
    orbit_bits: dict[int, float],
    direction: str = "up",
) -> TransmissionPlan:
    """Schedule per-orbit payloads over SGLs with per-slice max-flow.

    ``snapshots`` maps a step index to a TopologySnapshot (callable or
    indexable). Each slice builds one flow network per unfinished orbit,
    pushes the max-flow fraction, and interpolates the completion instant
    linearly inside the final slice. Orbits that cannot finish by the end
    of the grid are reported as incomplete rather than looping forever.
    """
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    for p, bits in orbit_bits.items():
        if bits <= 0:
            raise ValueError(f"orbit {p} payload must be positive")
    get_snap = snapshots if callable(snapshots) else snapshots.__getitem__

    plan = TransmissionPlan(
        start_s,
        direction,
        [],
        {p: OrbitTransferTrace(p, [1.0]) for p in sorted(orbit_bits)},
    )
    step = grid.step_s
    t = int(start_s // step)
    while t < grid.steps and not plan.completed:
        slice_start = max(start_s, t * step)
        slice_len = (t + 1) * step - slice_start
        snap = get_snap(t)
        active = plan.incomplete_orbits()
        for p in active:
            trace = plan.orbits[p]
            remaining = trace.residuals[-1]
            net = build_flow_network(
                snap, p, remaining, slice_len, orbit_bits[p], gs_ps_capacity_divisor=len(active)
            )
            res = max_flow(net)
            value = min(res.max_flow_value, remaining)
            scale = value / res.max_flow_value if res.max_flow_value > 0 else 0.0
            for (u, v), f in sorted(res.edge_flows.items(), key=lambda kv: str(kv[0])):
                if f > RESIDUAL_TOL and isinstance(u, SatId):
                    plan.slice_flows.append((t, p, str(u), str(v[1]), f * scale * orbit_bits[p]))
            new_remaining = remaining - value
            if new_remaining <= RESIDUAL_TOL and value > 0:
                # Interpolate against the uncapped link capacity of the slice
                # so finishing early in a slice is not rounded to its end.
                cap = slice_capacity(
                    snap, p, slice_len, orbit_bits[p], gs_ps_capacity_divisor=len(active)
                )
                used = min(remaining / cap, 1.0) if cap > 0 else 1.0
                trace.completion_s = slice_start + used * slice_len - start_s
                new_remaining = 0.0
            trace.residuals.append(new_remaining)
        t += 1
    return plan


# ---------------------------------------------------------------------------
# Inter-orbit path selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hop:
    frm: SatId
    to: SatId
    propagation_s: float
    transmission_s: float


@dataclass(frozen=True)
class InterOrbitPath:
    hops: tuple[Hop, ...]
    covered_orbits: frozenset[int]

    @property
    def total_time_s(self) -> float:
        return sum(h.propagation_s + h.transmission_s for h in self.hops)

    @property
    def satellites(self) -> list[SatId]:
        if not self.hops:
            return []
        return [self.hops[0].frm] + [h.to for h in self.hops]


class OrbitCoverageError(RuntimeError):
    def __init__(self, missing: set[int]):
        super().__init__(f"no inter-orbit path covers orbits {sorted(missing)}")
        self.missing = missing


def inter_orbit_aggregation_path(snap: TopologySnapshot, planes: int, z_bits: float) -> InterOrbitPath:
    """Minimum-weight relay path from orbit 1 to orbit P over ISLs.

    Edge weight is distance/rate; the chosen path must touch every orbit
    1..P so hop-by-hop aggregation covers the whole constellation. Per-hop
    delay is distance/c propagation plus Z/rate transmission, summed
    store-and-forward.
    """
    if planes == 1:
        return InterOrbitPath((), frozenset({1}))
    edges = snap.isl_edges()
    edge_map = {}
    for e in edges:
        edge_map[(e.a, e.b)] = e
        edge_map[(e.b, e.a)] = e
    pm = all_pairs_shortest(snap, lambda e: e.distance_m / e.rate_bps)
    sources = [v for v in pm.vertices if v.plane == 1]
    targets = [v for v in pm.vertices if v.plane == planes]
    best = None
    for s in sources:
        for d in targets:
            w = pm.distance(s, d)
            if math.isfinite(w) and (best is None or w < best[0]):
                best = (w, s, d)
    if best is None:
        raise OrbitCoverageError(set(range(1, planes + 1)))
    _, s, d = best
    verts = pm.path(s, d)
    covered = {v.plane for v in verts}
    missing = set(range(1, planes + 1)) - covered
    if missing:
        raise OrbitCoverageError(missing)
    hops = []
    for u, v in zip(verts, verts[1:]):
        e = edge_map[(u, v)]
        hops.append(Hop(u, v, e.distance_m / C_LIGHT, z_bits / e.rate_bps))
    return InterOrbitPath(tuple(hops), frozenset(covered))


def global_broadcast_time(
    path: InterOrbitPath, n: int, z_bits: float, intra_rate_bps: float
) -> tuple[float, float]:
    """(inter-orbit seconds, intra-orbit seconds) for the global head broadcast.

    The inter-orbit leg reverses the aggregation path with identical
    per-hop delays; each orbit then disseminates the head on its ring.
    """
    inter = path.total_time_s
    intra = ring_broadcast_time(n, z_bits, intra_rate_bps) if z_bits > 0 else 0.0
    return inter, intra


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def baseline_sequential_intra_orbit(n: int, hop_time_s: float) -> float:
    """Strategy 1: sequential collect-then-distribute ring, T = 2*N*c.

    The published formula counts N hops per phase (not N-1); it is applied
    verbatim, including the degenerate N = 1 case.
    """
    if n < 1:
        raise ValueError("ring size must be >= 1")
    return 2.0 * n * hop_time_s


def baseline_no_isc_upload(
    grid: TimeGrid, snapshots, start_s: float, sat_bits: dict[SatId, float]
) -> tuple[float, dict[SatId, float | None]]:
    """Strategy 2: each satellite ships only its own payload over its own windows.

    Per step, a satellite uses its best visible SGL. Returns the
    straggler-bound completion time (inf when some satellite never
    finishes) and the per-satellite completion times.
    """
    for sat, bits in sat_bits.items():
        if bits <= 0:
            raise ValueError(f"payload of {sat} must be positive")
    get_snap = snapshots if callable(snapshots) else snapshots.__getitem__
    remaining = dict(sat_bits)
    done: dict[SatId, float | None] = {s: None for s in sat_bits}
    step = grid.step_s
    t = int(start_s // step)
    while t < grid.steps and any(v is None for v in done.values()):
        slice_start = max(start_s, t * step)
        slice_len = (t + 1) * step - slice_start
        snap = get_snap(t)
        best_rate: dict[SatId, float] = {}
        for e in snap.sgl_edges:
            if e.sat in remaining and done[e.sat] is None:
                best_rate[e.sat] = max(best_rate.get(e.sat, 0.0), e.rate_bps)
        for sat, rate in best_rate.items():
            sendable = rate * slice_len
            if sendable >= remaining[sat] - RESIDUAL_TOL:
                done[sat] = slice_start + remaining[sat] / rate - start_s
                remaining[sat] = 0.0
            else:
                remaining[sat] -= sendable
        t += 1
    total = math.inf if any(v is None for v in done.values()) else max(done.values())
    return total, done


def baseline_gossip_time(per_round_time_s: float, rounds: int, consensus_factor: float) -> float:
    """Strategy 3 timing model: gossip needs consensus_factor x more epochs."""
    if consensus_factor < 1:
        raise ValueError("consensus_factor must be >= 1")
    return per_round_time_s * rounds * consensus_factor
