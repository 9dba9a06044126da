"""Round pipeline, latency accounting, and the exact toy federated core.

The simulator books every interval of a training round into one of five
categories (on-board compute, terrestrial compute, intra-orbit,
inter-orbit, satellite-ground) and advances wall clock along the critical
path. Aggregation semantics are verified with a small quadratic
federated-averaging problem rather than real model weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .commsched import (
    baseline_no_isc_upload,
    baseline_sequential_intra_orbit,
    inter_orbit_aggregation_path,
    ring_allreduce_time,
    ring_broadcast_time,
    sgl_transfer,
)
from .constellation import ConstellationSpec, GroundStation, SatId, TimeGrid
from .linkbudget import IslParams, SglParams
from .netgraph import TopologySnapshot, snapshot


# ---------------------------------------------------------------------------
# Workload model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    """Transformer dimensions the flops and payload formulas consume.

    Defaults describe the SpectralGPT-style fine-tuning workload: 12
    transformer blocks over 576 tokens of hidden width 768, a linear
    task head, and 13-band 4800x2800 source imagery.
    """

    patch_number: int = 576
    patch_size: int = 256
    embedding_dim: int = 768
    tokens: int = 576
    hidden_dim: int = 768
    blocks: int = 12
    head_input_dim: int = 1000
    head_output_dim: int = 1100
    feature_dim: int = 1000
    image_width: int = 4800
    image_height: int = 2800
    image_channels: int = 13
    bits_per_pixel: int = 8
    # The published embedding payload (20 MB/sample) is given directly;
    # it is not derivable from the token/width defaults above.
    embedding_bits_per_sample: float = 1.6e8


@dataclass(frozen=True)
class WorkloadModel:
    """Per-round compute and payload accounting inputs."""

    samples_per_satellite: int = 10
    embedding_bits_per_sample: float = 1.6e8
    feature_bits_per_sample: float = 32_000.0
    head_param_bits: float = 3.52e7
    raw_bits_per_sample: float = 1.39776e9
    embedding_flops_per_sample: float = 1.13246208e8
    block_flops: float = 5.94542592e8
    blocks: int = 12
    head_flops_per_sample: float = 1.1e6
    satellite_flops_per_s: float = 1e7
    ground_flops_per_s: float = 1e14
    local_epochs: int = 1
    backward_multiplier: float = 2.0

    def __post_init__(self):
        for name in (
            "samples_per_satellite",
            "embedding_bits_per_sample",
            "feature_bits_per_sample",
            "head_param_bits",
            "raw_bits_per_sample",
            "embedding_flops_per_sample",
            "block_flops",
            "blocks",
            "head_flops_per_sample",
            "satellite_flops_per_s",
            "ground_flops_per_s",
            "local_epochs",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def backbone_flops_per_sample(self) -> float:
        return self.blocks * self.block_flops


def workload_from_model(cfg: ModelConfig, **overrides) -> WorkloadModel:
    """Derive flops and payload sizes from model dimensions.

    embedding flops = patch_number * patch_size * embedding_dim;
    block flops = tokens^2 * hidden + tokens * hidden^2;
    head flops = head input dim * head output dim;
    feature bits = feature dim * 32; raw bits = W * H * channels * 8.
    """
    derived = dict(
        embedding_flops_per_sample=float(cfg.patch_number * cfg.patch_size * cfg.embedding_dim),
        block_flops=float(cfg.tokens**2 * cfg.hidden_dim + cfg.tokens * cfg.hidden_dim**2),
        blocks=cfg.blocks,
        head_flops_per_sample=float(cfg.head_input_dim * cfg.head_output_dim),
        feature_bits_per_sample=float(cfg.feature_dim * 32),
        head_param_bits=float(cfg.head_input_dim * cfg.head_output_dim * 32),
        raw_bits_per_sample=float(
            cfg.image_width * cfg.image_height * cfg.image_channels * cfg.bits_per_pixel
        ),
        embedding_bits_per_sample=cfg.embedding_bits_per_sample,
    )
    derived.update(overrides)
    return WorkloadModel(**derived)


def centralized_overhead(workload: WorkloadModel) -> float:
    """Transmitted bits (embedding + feature) over raw bits, per sample."""
    return (
        workload.embedding_bits_per_sample + workload.feature_bits_per_sample
    ) / workload.raw_bits_per_sample


# ---------------------------------------------------------------------------
# Topology provider and round timing
# ---------------------------------------------------------------------------


class TransferIncompleteError(RuntimeError):
    """Raised when an SGL transfer cannot finish within the time grid."""

    def __init__(self, direction: str, orbits: list[int]):
        super().__init__(
            f"satellite-ground {direction}link did not complete for orbits {orbits} "
            "within the scenario horizon"
        )
        self.direction = direction
        self.orbits = orbits


class TopologyProvider:
    """Caches per-step topology snapshots for one scenario."""

    def __init__(
        self,
        spec: ConstellationSpec,
        gs_list: list[GroundStation],
        grid: TimeGrid,
        isl_params: IslParams,
        sgl_params: SglParams,
        gs_ps_rate_bps: float | None = None,
    ):
        self.spec = spec
        self.gs_list = gs_list
        self.grid = grid
        self.isl_params = isl_params
        self.sgl_params = sgl_params
        self.gs_ps_rate_bps = gs_ps_rate_bps
        self._cache: dict[int, TopologySnapshot] = {}

    def __call__(self, t: int) -> TopologySnapshot:
        if t not in self._cache:
            self._cache[t] = snapshot(
                self.spec, self.gs_list, self.grid, t,
                self.isl_params, self.sgl_params, self.gs_ps_rate_bps,
            )
        return self._cache[t]

    def intra_rate_bps(self, t: int) -> float:
        """Reference intra-orbit ring rate: the slowest ring link at step t."""
        snap = self(t)
        if not snap.intra_orbit_edges:
            raise ValueError("constellation has no intra-orbit links")
        return min(e.rate_bps for e in snap.intra_orbit_edges)


@dataclass(frozen=True)
class RoundTiming:
    """Five latency components of one round plus the wall-clock total."""

    on_board_s: float
    terrestrial_s: float
    intra_orbit_s: float
    inter_orbit_s: float
    sat_ground_s: float
    wall_clock_s: float

    def as_row(self) -> tuple[float, ...]:
        return (
            self.on_board_s,
            self.terrestrial_s,
            self.intra_orbit_s,
            self.inter_orbit_s,
            self.sat_ground_s,
            self.wall_clock_s,
        )


def _step_at(grid: TimeGrid, wall_s: float) -> int:
    return min(int(wall_s // grid.step_s), grid.steps - 1)


def round_timing(
    topo: TopologyProvider,
    workload: WorkloadModel,
    start_s: float = 0.0,
    strategy: str = "proposed",
    sequential_intra: bool = False,
) -> RoundTiming:
    """Latency of one synchronous round of the two-phase pipeline.

    Composes: on-board embedding compute, intra-orbit embedding broadcast,
    max-flow uplink, terrestrial backbone pass, max-flow downlink with
    intra-orbit forwarding, local head update, intra-orbit head collective,
    inter-orbit aggregation, and the global broadcast. Orbits progress in
    parallel; with identical per-orbit parameters the per-orbit maximum
    equals the common value, and the satellite-ground phases already take
    the max over orbits internally.
    """
    spec, grid = topo.spec, topo.grid
    N, P = spec.sats_per_plane, spec.planes
    m = workload.samples_per_satellite
    wall = start_s
    on_board = terrestrial = intra = inter = sat_ground = 0.0

    # (1) on-board embedding computation, all satellites in parallel
    t_embed = m * workload.embedding_flops_per_sample / workload.satellite_flops_per_s
    on_board += t_embed
    wall += t_embed

    rate = topo.intra_rate_bps(_step_at(grid, wall))
    c_em = m * workload.embedding_bits_per_sample

    # (2) intra-orbit embedding broadcast (skipped without cooperation)
    if strategy != "no_isc":
        if sequential_intra:
            t_bc = baseline_sequential_intra_orbit(N, c_em / rate)
        else:
            t_bc = ring_broadcast_time(N, c_em, rate)
        intra += t_bc
        wall += t_bc

    # (3) embedding uplink over SGLs
    if strategy == "no_isc":
        t_up, _ = baseline_no_isc_upload(
            grid, topo, wall, {s: c_em for s in spec.sat_ids()}
        )
        if math.isinf(t_up):
            raise TransferIncompleteError("up", list(range(1, P + 1)))
    else:
        plan = sgl_transfer(
            grid, topo, wall, {p: N * c_em for p in range(1, P + 1)}, "up"
        )
        if not plan.completed:
            raise TransferIncompleteError("up", plan.incomplete_orbits())
        t_up = plan.total_time_s
    sat_ground += t_up
    wall += t_up

    # (4) terrestrial backbone pass over all received embeddings
    t_gr = P * N * m * workload.backbone_flops_per_sample / workload.ground_flops_per_s
    terrestrial += t_gr
    wall += t_gr

    # (5) feature downlink plus intra-orbit forwarding of per-satellite slices
    c_ft = m * workload.feature_bits_per_sample
    if strategy == "no_isc":
        t_down, _ = baseline_no_isc_upload(
            grid, topo, wall, {s: c_ft for s in spec.sat_ids()}
        )
        if math.isinf(t_down):
            raise TransferIncompleteError("down", list(range(1, P + 1)))
        sat_ground += t_down
        wall += t_down
    else:
        plan = sgl_transfer(
            grid, topo, wall, {p: N * c_ft for p in range(1, P + 1)}, "down"
        )
        if not plan.completed:
            raise TransferIncompleteError("down", plan.incomplete_orbits())
        t_down = plan.total_time_s
        sat_ground += t_down
        wall += t_down
        rate = topo.intra_rate_bps(_step_at(grid, wall))
        t_fwd = ring_broadcast_time(N, c_ft, rate)
        intra += t_fwd
        wall += t_fwd

    # (6) local head update
    t_head = (
        m
        * workload.head_flops_per_sample
        * (1.0 + workload.backward_multiplier)
        * workload.local_epochs
        / workload.satellite_flops_per_s
    )
    on_board += t_head
    wall += t_head

    # (7) intra-orbit head collective
    rate = topo.intra_rate_bps(_step_at(grid, wall))
    if sequential_intra:
        t_agg = baseline_sequential_intra_orbit(N, workload.head_param_bits / rate)
    else:
        t_agg = ring_allreduce_time(N, workload.head_param_bits, rate)
    intra += t_agg
    wall += t_agg

    # (8) inter-orbit aggregation and (9) reversed global broadcast
    snap = topo(_step_at(grid, wall))
    path = inter_orbit_aggregation_path(snap, P, workload.head_param_bits)
    t_path = path.total_time_s
    inter += 2.0 * t_path  # aggregation plus the reversed broadcast
    wall += 2.0 * t_path
    t_gbc = ring_broadcast_time(N, workload.head_param_bits, rate)
    intra += t_gbc
    wall += t_gbc

    return RoundTiming(on_board, terrestrial, intra, inter, sat_ground, wall - start_s)


def tos_round_timing(
    topo: TopologyProvider, workload: WorkloadModel, start_s: float = 0.0
) -> RoundTiming:
    """Training-on-satellites baseline: full-model epochs on-board.

    Full forward plus backward (costed at backward_multiplier x forward)
    per sample per local epoch; head aggregation still uses the ring
    collective and the inter-orbit path, with no satellite-ground leg.
    """
    spec, grid = topo.spec, topo.grid
    N, P = spec.sats_per_plane, spec.planes
    m = workload.samples_per_satellite
    full_flops = (
        workload.embedding_flops_per_sample
        + workload.backbone_flops_per_sample
        + workload.head_flops_per_sample
    )
    t_compute = (
        m * full_flops * (1.0 + workload.backward_multiplier) * workload.local_epochs
        / workload.satellite_flops_per_s
    )
    wall = start_s + t_compute
    rate = topo.intra_rate_bps(_step_at(grid, wall))
    t_agg = ring_allreduce_time(N, workload.head_param_bits, rate)
    wall += t_agg
    snap = topo(_step_at(grid, wall))
    path = inter_orbit_aggregation_path(snap, P, workload.head_param_bits)
    t_inter = 2.0 * path.total_time_s
    wall += t_inter
    t_gbc = ring_broadcast_time(N, workload.head_param_bits, rate)
    wall += t_gbc
    return RoundTiming(
        t_compute, 0.0, t_agg + t_gbc, t_inter, 0.0, wall - start_s
    )


def centralized_round_timing(
    topo: TopologyProvider, workload: WorkloadModel, start_s: float = 0.0
) -> RoundTiming:
    """Centralized baseline: download raw data, train the full model on the PS."""
    spec, grid = topo.spec, topo.grid
    N, P = spec.sats_per_plane, spec.planes
    m = workload.samples_per_satellite
    plan = sgl_transfer(
        grid, topo, start_s,
        {p: N * m * workload.raw_bits_per_sample for p in range(1, P + 1)}, "up",
    )
    if not plan.completed:
        raise TransferIncompleteError("up", plan.incomplete_orbits())
    t_up = plan.total_time_s
    full_flops = (
        workload.embedding_flops_per_sample
        + workload.backbone_flops_per_sample
        + workload.head_flops_per_sample
    )
    t_gr = (
        P * N * m * full_flops * (1.0 + workload.backward_multiplier)
        * workload.local_epochs / workload.ground_flops_per_s
    )
    wall = start_s + t_up + t_gr
    return RoundTiming(0.0, t_gr, 0.0, 0.0, t_up, wall - start_s)


STRATEGIES = ("proposed", "strategy1", "strategy2", "strategy3", "tos", "centralized")


@dataclass
class TrainingReport:
    strategy: str
    rounds: list[RoundTiming]
    effective_rounds: float

    @property
    def total_wall_clock_s(self) -> float:
        base = sum(r.wall_clock_s for r in self.rounds)
        if not self.rounds:
            return 0.0
        # Gossip repeats the same per-round schedule for extra epochs.
        return base * self.effective_rounds / len(self.rounds)

    def component_totals(self) -> RoundTiming:
        scale = self.effective_rounds / len(self.rounds) if self.rounds else 1.0
        return RoundTiming(
            sum(r.on_board_s for r in self.rounds) * scale,
            sum(r.terrestrial_s for r in self.rounds) * scale,
            sum(r.intra_orbit_s for r in self.rounds) * scale,
            sum(r.inter_orbit_s for r in self.rounds) * scale,
            sum(r.sat_ground_s for r in self.rounds) * scale,
            self.total_wall_clock_s,
        )


def run_training(
    topo: TopologyProvider,
    workload: WorkloadModel,
    rounds: int,
    strategy: str = "proposed",
    consensus_factor: float = 2.0,
) -> TrainingReport:
    """Simulate ``rounds`` synchronous rounds under one strategy."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    wall = 0.0
    timings: list[RoundTiming] = []
    effective = float(rounds)
    for _ in range(rounds):
        if strategy == "tos":
            rt = tos_round_timing(topo, workload, wall)
        elif strategy == "centralized":
            rt = centralized_round_timing(topo, workload, wall)
        elif strategy == "strategy1":
            rt = round_timing(topo, workload, wall, sequential_intra=True)
        elif strategy == "strategy2":
            rt = round_timing(topo, workload, wall, strategy="no_isc")
        else:
            rt = round_timing(topo, workload, wall)
        timings.append(rt)
        wall += rt.wall_clock_s
    if strategy == "strategy3":
        effective = rounds * consensus_factor
    return TrainingReport(strategy, timings, effective)


# ---------------------------------------------------------------------------
# Aggregation semantics and the toy federated core
# ---------------------------------------------------------------------------


def hierarchical_aggregate(heads: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Orbit-wise then global head averaging.

    ``heads`` has shape (P, N, d). With equal weights the result is the
    orbit means averaged across orbits, which equals the flat mean when
    every orbit has the same size. ``weights`` of shape (P, N) switches to
    dataset-size weighting and reduces to the flat weighted mean.
    """
    heads = np.asarray(heads, dtype=float)
    if heads.ndim != 3:
        raise ValueError("heads must have shape (planes, sats_per_plane, dim)")
    if weights is None:
        orbit_means = heads.mean(axis=1)
        return orbit_means.mean(axis=0)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != heads.shape[:2]:
        raise ValueError("weights must have shape (planes, sats_per_plane)")
    orbit_w = weights.sum(axis=1)
    orbit_means = (weights[:, :, None] * heads).sum(axis=1) / orbit_w[:, None]
    return (orbit_w[:, None] * orbit_means).sum(axis=0) / orbit_w.sum()


@dataclass
class ToyFederatedProblem:
    """Quadratic head-only fine-tuning on a shared frozen random backbone.

    Each satellite (p, n) holds a local least-squares problem
    L = 1/(2m) * ||X B w - y||^2 with the backbone B common to all.
    """

    planes: int
    sats_per_plane: int
    dim_in: int = 8
    dim_head: int = 6
    samples: int = 16
    seed: int = 0
    backbone: np.ndarray = field(init=False)
    features: np.ndarray = field(init=False)  # (P, N, m, dim_head)
    targets: np.ndarray = field(init=False)   # (P, N, m)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.backbone = rng.normal(size=(self.dim_in, self.dim_head)) / math.sqrt(self.dim_in)
        x = rng.normal(size=(self.planes, self.sats_per_plane, self.samples, self.dim_in))
        self.features = x @ self.backbone
        w_true = rng.normal(size=self.dim_head)
        noise = 0.1 * rng.normal(size=(self.planes, self.sats_per_plane, self.samples))
        self.targets = self.features @ w_true + noise

    def local_loss(self, p: int, n: int, w: np.ndarray) -> float:
        f = self.features[p, n]
        r = f @ w - self.targets[p, n]
        return float(0.5 * r @ r / self.samples)

    def local_gradient(self, p: int, n: int, w: np.ndarray) -> np.ndarray:
        f = self.features[p, n]
        return f.T @ (f @ w - self.targets[p, n]) / self.samples

    def global_loss(self, w: np.ndarray) -> float:
        return float(
            np.mean(
                [
                    self.local_loss(p, n, w)
                    for p in range(self.planes)
                    for n in range(self.sats_per_plane)
                ]
            )
        )

    def smoothness_bound(self) -> float:
        """Largest local curvature; step sizes below 1/L descend."""
        bounds = []
        for p in range(self.planes):
            for n in range(self.sats_per_plane):
                f = self.features[p, n]
                bounds.append(np.linalg.eigvalsh(f.T @ f / self.samples)[-1])
        return float(max(bounds))


def toy_fedavg_round(
    problem: ToyFederatedProblem, heads: np.ndarray, learning_rate: float
) -> tuple[np.ndarray, float]:
    """One local gradient step per satellite, then hierarchical averaging.

    Returns the broadcast heads (all satellites hold the aggregate) and
    the post-aggregation global loss.
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    heads = np.asarray(heads, dtype=float)
    updated = np.empty_like(heads)
    for p in range(problem.planes):
        for n in range(problem.sats_per_plane):
            g = problem.local_gradient(p, n, heads[p, n])
            updated[p, n] = heads[p, n] - learning_rate * g
    agg = hierarchical_aggregate(updated)
    out = np.broadcast_to(agg, heads.shape).copy()
    return out, problem.global_loss(agg)


def toy_fedavg_training(
    problem: ToyFederatedProblem, rounds: int, learning_rate: float
) -> list[float]:
    """Global loss trace, starting from the zero head."""
    heads = np.zeros((problem.planes, problem.sats_per_plane, problem.dim_head))
    losses = [problem.global_loss(heads[0, 0])]
    for _ in range(rounds):
        heads, loss = toy_fedavg_round(problem, heads, learning_rate)
        losses.append(loss)
    return losses
