"""Per-step topology snapshots plus the two graph algorithms the planners use.

The snapshot builder wires the constellation into P intra-orbit rings,
adjacent-plane inter-orbit links (seam excluded), and satellite-ground
edges for every visible pair. Max flow is Edmonds-Karp with deterministic
BFS ordering; all-pairs shortest paths is Floyd-Warshall with next-hop
reconstruction.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .constellation import (
    ConstellationSpec,
    GroundStation,
    SatId,
    TimeGrid,
    closed_form_distance,
    elevation_deg,
    propagate,
)
from .linkbudget import IslParams, SglParams, isl_rate, sgl_rate


@dataclass(frozen=True)
class IslEdge:
    a: SatId
    b: SatId
    rate_bps: float
    distance_m: float


@dataclass(frozen=True)
class SglEdge:
    sat: SatId
    gs_id: int
    rate_bps: float
    slant_range_m: float


@dataclass(frozen=True)
class TopologySnapshot:
    """Communication topology at one time step."""

    step: int
    intra_orbit_edges: tuple[IslEdge, ...]
    inter_orbit_edges: tuple[IslEdge, ...]
    sgl_edges: tuple[SglEdge, ...]
    gs_ps_rate_bps: float | None  # None = uncapacitated star links to the PS

    def isl_edges(self) -> tuple[IslEdge, ...]:
        return self.intra_orbit_edges + self.inter_orbit_edges

    def sgl_edges_of_orbit(self, plane: int) -> list[SglEdge]:
        return [e for e in self.sgl_edges if e.sat.plane == plane]


def snapshot(
    spec: ConstellationSpec,
    gs_list: list[GroundStation],
    grid: TimeGrid,
    t: int,
    isl_params: IslParams,
    sgl_params: SglParams,
    gs_ps_rate_bps: float | None = None,
) -> TopologySnapshot:
    """Build the topology snapshot for step ``t``.

    Inter-orbit neighbors are chosen per adjacent plane pair as the slot
    offset minimizing total link distance, which keeps the assignment a
    bijection so every satellite carries at most two inter-orbit links.
    The seam between plane 1 and plane P is never bridged.
    """
    P, N = spec.planes, spec.sats_per_plane
    pos = propagate(spec, grid, t)

    intra = []
    for p in range(P):
        for n in range(N):
            m = (n + 1) % N
            if N == 1:
                continue
            if N == 2 and m < n:
                break  # avoid duplicating the single two-node link
            d = float(np.linalg.norm(pos[p, n] - pos[p, m]))
            intra.append(IslEdge(SatId(p + 1, n + 1), SatId(p + 1, m + 1), isl_rate(isl_params, d), d))

    inter = []
    for p in range(P - 1):  # plane p+1 <-> p+2; seam (P, 1) excluded
        dists = closed_form_distance(pos[p][:, None, :], pos[p + 1][None, :, :])
        offsets = [float(np.sum(dists[np.arange(N), (np.arange(N) + k) % N])) for k in range(N)]
        k = int(np.argmin(offsets))
        for n in range(N):
            m = (n + k) % N
            d = float(np.linalg.norm(pos[p, n] - pos[p + 1, m]))
            inter.append(IslEdge(SatId(p + 1, n + 1), SatId(p + 2, m + 1), isl_rate(isl_params, d), d))

    sgl = []
    for gs in gs_list:
        gs_pos = gs.ecef()
        el = elevation_deg(pos.reshape(-1, 3), gs_pos).reshape(P, N)
        for p in range(P):
            for n in range(N):
                if el[p, n] >= gs.min_elevation_deg:
                    slant = float(np.linalg.norm(pos[p, n] - gs_pos))
                    sgl.append(SglEdge(SatId(p + 1, n + 1), gs.id, sgl_rate(sgl_params, slant), slant))

    return TopologySnapshot(t, tuple(intra), tuple(inter), tuple(sgl), gs_ps_rate_bps)


# ---------------------------------------------------------------------------
# Max flow (Edmonds-Karp)
# ---------------------------------------------------------------------------

INF = float("inf")


@dataclass
class FlowNetwork:
    """Directed flow network with a designated source and sink.

    Vertices may be any hashable labels; edges are added in a fixed order
    and BFS scans them in that order, which makes the computed flow
    deterministic.
    """

    source: object
    sink: object
    edges: list[tuple[object, object, float]] = field(default_factory=list)

    def add_edge(self, u, v, capacity: float):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.edges.append((u, v, capacity))


@dataclass(frozen=True)
class FlowResult:
    max_flow_value: float
    edge_flows: dict[tuple[object, object], float]


def max_flow(net: FlowNetwork) -> FlowResult:
    """Exact maximum s-t flow via Edmonds-Karp (BFS augmenting paths)."""
    verts: dict[object, int] = {}
    for u, v, _ in net.edges:
        verts.setdefault(u, len(verts))
        verts.setdefault(v, len(verts))
    verts.setdefault(net.source, len(verts))
    verts.setdefault(net.sink, len(verts))
    n = len(verts)
    s, t = verts[net.source], verts[net.sink]

    # Residual arcs: forward and reverse pairs, adjacency in insertion order.
    to: list[int] = []
    cap: list[float] = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, c in net.edges:
        ui, vi = verts[u], verts[v]
        adj[ui].append(len(to)); to.append(vi); cap.append(c)
        adj[vi].append(len(to)); to.append(ui); cap.append(0.0)

    total = 0.0
    while True:
        parent_edge = [-1] * n
        parent_edge[s] = -2
        q = deque([s])
        while q and parent_edge[t] == -1:
            u = q.popleft()
            for eid in adj[u]:
                v = to[eid]
                if parent_edge[v] == -1 and cap[eid] > 1e-15:
                    parent_edge[v] = eid
                    q.append(v)
        if parent_edge[t] == -1:
            break
        # Bottleneck along the BFS path.
        push = INF
        v = t
        while v != s:
            eid = parent_edge[v]
            push = min(push, cap[eid])
            v = to[eid ^ 1]
        v = t
        while v != s:
            eid = parent_edge[v]
            cap[eid] -= push
            cap[eid ^ 1] += push
            v = to[eid ^ 1]
        total += push

    flows: dict[tuple[object, object], float] = {}
    for i, (u, v, c) in enumerate(net.edges):
        flows[(u, v)] = flows.get((u, v), 0.0) + (c - cap[2 * i])
    return FlowResult(total, flows)


SOURCE = "source"
SUPER_SOURCE = "super_source"
SINK = "sink"


def build_flow_network(
    snap: TopologySnapshot,
    plane: int,
    remaining: float,
    slice_s: float,
    alpha_bits: float,
    gs_ps_capacity_divisor: int = 1,
) -> FlowNetwork:
    """Flow network for uplinking orbit ``plane``'s data in one time slice.

    Capacities are fractions of the orbit payload ``alpha_bits``: an SGL of
    rate r contributes slice_s*r/alpha_bits. Every satellite of the orbit
    holds the full broadcast payload, so each gets a source edge of
    capacity ``remaining``, with total outflow capped at ``remaining`` by
    the super-source edge.
    """
    if alpha_bits <= 0:
        raise ValueError("orbit payload must be positive")
    if not 0.0 <= remaining <= 1.0 + 1e-12:
        raise ValueError("remaining fraction must be in [0, 1]")
    net = FlowNetwork(SUPER_SOURCE, SINK)
    net.add_edge(SUPER_SOURCE, SOURCE, remaining)
    sats = sorted({e.sat for e in snap.sgl_edges_of_orbit(plane)})
    for sat in sats:
        net.add_edge(SOURCE, sat, remaining)
    gs_seen = []
    for e in sorted(snap.sgl_edges_of_orbit(plane), key=lambda e: (e.sat, e.gs_id)):
        net.add_edge(e.sat, ("gs", e.gs_id), slice_s * e.rate_bps / alpha_bits)
        if e.gs_id not in gs_seen:
            gs_seen.append(e.gs_id)
    for gs_id in sorted(gs_seen):
        if snap.gs_ps_rate_bps is None:
            cap = INF
        else:
            cap = slice_s * snap.gs_ps_rate_bps / alpha_bits / max(gs_ps_capacity_divisor, 1)
        net.add_edge(("gs", gs_id), SINK, cap)
    return net


def slice_capacity(
    snap: TopologySnapshot,
    plane: int,
    slice_s: float,
    alpha_bits: float,
    gs_ps_capacity_divisor: int = 1,
) -> float:
    """Deliverable payload fraction in one slice, ignoring how much is left.

    Same network as ``build_flow_network`` but with uncapped source edges,
    so the value reflects the links alone. Used to interpolate completion
    instants inside the final slice of a transfer.
    """
    net = build_flow_network(snap, plane, 1.0, slice_s, alpha_bits, gs_ps_capacity_divisor)
    net.edges = [
        (u, v, INF if u in (SUPER_SOURCE, SOURCE) else c) for u, v, c in net.edges
    ]
    return max_flow(net).max_flow_value


# ---------------------------------------------------------------------------
# All-pairs shortest paths (Floyd-Warshall)
# ---------------------------------------------------------------------------


@dataclass
class PathMatrix:
    vertices: list
    dist: np.ndarray
    next_hop: np.ndarray

    def distance(self, u, v) -> float:
        return float(self.dist[self.vertices.index(u), self.vertices.index(v)])

    def path(self, u, v) -> list:
        """Vertex sequence of the shortest u->v path; [] if unreachable."""
        i, j = self.vertices.index(u), self.vertices.index(v)
        if i == j:
            return [u]
        if not np.isfinite(self.dist[i, j]):
            return []
        out = [i]
        while i != j:
            i = int(self.next_hop[i, j])
            out.append(i)
        return [self.vertices[k] for k in out]


def floyd_warshall(vertices: list, weighted_edges: list[tuple], directed: bool = False) -> PathMatrix:
    """All-pairs shortest paths over (u, v, weight) edges.

    Weights must be non-negative. For parallel edges the smaller weight
    wins. Returns exact distances and a next-hop matrix for path
    reconstruction.
    """
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    dist = np.full((n, n), INF)
    nxt = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0.0)
    for i in range(n):
        nxt[i, i] = i
    for u, v, w in weighted_edges:
        if w < 0:
            raise ValueError("negative edge weight")
        i, j = index[u], index[v]
        if w < dist[i, j]:
            dist[i, j] = w
            nxt[i, j] = j
        if not directed and w < dist[j, i]:
            dist[j, i] = w
            nxt[j, i] = i
    for k in range(n):
        alt = dist[:, k, None] + dist[None, k, :]
        better = alt < dist
        dist = np.where(better, alt, dist)
        nxt = np.where(better, nxt[:, k, None], nxt)
    return PathMatrix(list(vertices), dist, nxt)


def all_pairs_shortest(snap: TopologySnapshot, weight_fn) -> PathMatrix:
    """Floyd-Warshall over the snapshot's ISL edges only (no SGLs).

    ``weight_fn(edge)`` maps an IslEdge to a non-negative weight in
    seconds-equivalent units.
    """
    edges = snap.isl_edges()
    verts = sorted({e.a for e in edges} | {e.b for e in edges})
    return floyd_warshall(verts, [(e.a, e.b, weight_fn(e)) for e in edges])


def snapshot_to_rows(snap: TopologySnapshot) -> list[tuple]:
    """Flatten a snapshot into (step, kind, from, to, rate_bps) CSV rows."""
    rows = []
    for e in snap.intra_orbit_edges:
        rows.append((snap.step, "intra_orbit", str(e.a), str(e.b), e.rate_bps))
    for e in snap.inter_orbit_edges:
        rows.append((snap.step, "inter_orbit", str(e.a), str(e.b), e.rate_bps))
    for e in snap.sgl_edges:
        rows.append((snap.step, "sgl", str(e.sat), f"GS{e.gs_id}", e.rate_bps))
    return rows
