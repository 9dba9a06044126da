"""Independent reference implementations used to cross-check the algorithms.

Nothing here imports algorithmic code from the package under test beyond
plain data containers; results are computed by different methods (cut
enumeration, heap-based Dijkstra, scipy's preflow max flow).
"""
import heapq
import itertools
import random

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow as scipy_maximum_flow


def min_cut_value(edges, source, sink) -> float:
    """Exact min s-t cut by enumerating all vertex partitions."""
    verts = {source, sink}
    for u, v, _ in edges:
        verts.add(u)
        verts.add(v)
    middle = sorted(verts - {source, sink}, key=str)
    best = float("inf")
    for mask in range(2 ** len(middle)):
        s_side = {source}
        for i, v in enumerate(middle):
            if mask >> i & 1:
                s_side.add(v)
        cut = sum(c for u, v, c in edges if u in s_side and v not in s_side)
        best = min(best, cut)
    return best


def scipy_max_flow_value(edges, source, sink, scale: int = 10) -> float:
    """Max flow via scipy's preflow-push on integer-scaled capacities."""
    verts = sorted({source, sink} | {u for u, _, _ in edges} | {v for _, v, _ in edges}, key=str)
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    cap = np.zeros((n, n), dtype=np.int64)
    for u, v, c in edges:
        scaled = round(c * scale)
        assert abs(scaled - c * scale) < 1e-9, "capacities must be multiples of 1/scale"
        cap[index[u], index[v]] += scaled
    res = scipy_maximum_flow(csr_matrix(cap), index[source], index[sink])
    return res.flow_value / scale


def check_flow_feasible(edges, flows, source, sink, tol=1e-12):
    """Assert capacity and conservation constraints; return the flow value."""
    out_flow = {}
    in_flow = {}
    by_edge = {}
    for u, v, c in edges:
        by_edge[(u, v)] = by_edge.get((u, v), 0.0) + c
    for (u, v), f in flows.items():
        assert f >= -tol, f"negative flow on {(u, v)}"
        assert f <= by_edge[(u, v)] + tol, f"capacity violated on {(u, v)}"
        out_flow[u] = out_flow.get(u, 0.0) + f
        in_flow[v] = in_flow.get(v, 0.0) + f
    verts = set(out_flow) | set(in_flow)
    for v in verts - {source, sink}:
        assert abs(out_flow.get(v, 0.0) - in_flow.get(v, 0.0)) <= tol * max(
            1.0, out_flow.get(v, 0.0)
        ), f"conservation violated at {v}"
    return out_flow.get(source, 0.0) - in_flow.get(source, 0.0)


def random_flow_instance(rng: random.Random):
    """Random s-t network with <= 8 edges, capacities in {0.1, ..., 1.0}."""
    inner = ["a", "b", "c", "d"][: rng.randint(0, 4)]
    verts = ["s"] + inner + ["t"]
    n_edges = rng.randint(1, 8)
    edges = []
    for _ in range(n_edges):
        u = rng.choice(verts[:-1])
        v = rng.choice([x for x in verts if x != u and x != "s"])
        edges.append((u, v, rng.randint(1, 10) / 10.0))
    return edges


def dijkstra_all_pairs(vertices, edges):
    """Shortest-path distance matrix via binary-heap Dijkstra per source."""
    index = {v: i for i, v in enumerate(vertices)}
    adj = [[] for _ in vertices]
    for u, v, w in edges:
        adj[index[u]].append((index[v], w))
        adj[index[v]].append((index[u], w))
    n = len(vertices)
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dist[s, s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[s, u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < dist[s, v]:
                    dist[s, v] = nd
                    heapq.heappush(heap, (nd, v))
    return dist


def random_connected_graph(rng: random.Random, max_vertices: int = 40):
    """Connected undirected graph with small integer weights (exact in float)."""
    n = rng.randint(2, max_vertices)
    vertices = list(range(n))
    edges = []
    order = vertices[1:]
    rng.shuffle(order)
    reached = [0]
    for v in order:  # random spanning tree first
        edges.append((rng.choice(reached), v, float(rng.randint(1, 10))))
        reached.append(v)
    for _ in range(rng.randint(0, 2 * n)):
        u, v = rng.sample(vertices, 2)
        edges.append((u, v, float(rng.randint(1, 10))))
    return vertices, edges
