"""Workload accounting, round pipeline timing, and the toy federated core."""
import math
from dataclasses import replace

import numpy as np
import pytest

from orbitfed.fedsim import (
    ModelConfig,
    TopologyProvider,
    TransferIncompleteError,
    WorkloadModel,
    centralized_overhead,
    centralized_round_timing,
    hierarchical_aggregate,
    round_timing,
    run_training,
    tos_round_timing,
    toy_fedavg_round,
    toy_fedavg_training,
    ToyFederatedProblem,
    workload_from_model,
)


# ---------------------------------------------------------------------------
# Workload model
# ---------------------------------------------------------------------------


def test_workload_from_model_defaults_match_published_table():
    w = workload_from_model(ModelConfig())
    assert w.embedding_flops_per_sample == pytest.approx(1.13246208e8)
    assert w.block_flops == pytest.approx(5.94542592e8)
    assert w.backbone_flops_per_sample == pytest.approx(7.13e9, rel=0.01)
    assert w.head_flops_per_sample == pytest.approx(1.1e6)
    assert w.feature_bits_per_sample == pytest.approx(32_000.0)
    assert w.head_param_bits == pytest.approx(3.52e7)
    assert w.raw_bits_per_sample == pytest.approx(1.39776e9)
    assert w.embedding_bits_per_sample == pytest.approx(1.6e8)  # 20 MB


def test_workload_single_block():
    w = workload_from_model(ModelConfig(blocks=1))
    assert w.backbone_flops_per_sample == w.block_flops


def test_workload_rejects_non_positive():
    with pytest.raises(ValueError):
        WorkloadModel(samples_per_satellite=0)
    with pytest.raises(ValueError):
        WorkloadModel(satellite_flops_per_s=-1.0)


def test_centralized_overhead_values():
    w = WorkloadModel()
    assert centralized_overhead(w) == pytest.approx(0.114492, rel=1e-4)
    no_benefit = replace(w, embedding_bits_per_sample=w.raw_bits_per_sample)
    assert centralized_overhead(no_benefit) > 1.0


# ---------------------------------------------------------------------------
# Round pipeline
# ---------------------------------------------------------------------------


def _provider(scn, stations=None):
    return TopologyProvider(
        scn.constellation,
        scn.ground_stations if stations is None else stations,
        scn.grid,
        scn.isl,
        scn.sgl,
        scn.gs_ps_rate_bps,
    )


def test_round_timing_components_positive(bundled_scenario, bundled_provider):
    rt = round_timing(bundled_provider, bundled_scenario.workload)
    assert rt.on_board_s > 0 and rt.terrestrial_s > 0
    assert rt.intra_orbit_s > 0 and rt.inter_orbit_s > 0 and rt.sat_ground_s > 0
    # the pipeline is sequential: the critical path is the component sum
    assert rt.wall_clock_s == pytest.approx(
        rt.on_board_s + rt.terrestrial_s + rt.intra_orbit_s + rt.inter_orbit_s + rt.sat_ground_s,
        rel=1e-9,
    )


def test_round_timing_communication_free_limit(bundled_scenario, dense_ground_stations):
    """With extreme link rates the wall clock collapses to pure compute."""
    scn = bundled_scenario
    fast = replace(
        scn,
        isl=replace(scn.isl, fixed_rate_bps=1e18),
        sgl=replace(scn.sgl, fixed_rate_bps=1e18),
    )
    topo = _provider(fast, dense_ground_stations)
    w = scn.workload
    rt = round_timing(topo, w)
    m = w.samples_per_satellite
    compute = (
        m * w.embedding_flops_per_sample / w.satellite_flops_per_s
        + m * w.head_flops_per_sample * (1 + w.backward_multiplier) / w.satellite_flops_per_s
        + 80 * m * w.backbone_flops_per_sample / w.ground_flops_per_s
    )
    assert rt.wall_clock_s == pytest.approx(compute, rel=1e-2)


def test_round_timing_linear_compute_scaling(bundled_provider, bundled_scenario):
    w = bundled_scenario.workload
    single = round_timing(bundled_provider, replace(w, samples_per_satellite=5))
    double = round_timing(bundled_provider, replace(w, samples_per_satellite=10))
    assert double.on_board_s == pytest.approx(2.0 * single.on_board_s, rel=1e-12)
    assert double.terrestrial_s == pytest.approx(2.0 * single.terrestrial_s, rel=1e-12)


def test_round_timing_no_ground_stations_raises(bundled_scenario):
    scn = bundled_scenario
    short = replace(scn, grid=replace(scn.grid, steps=10))
    topo = _provider(short, [])
    with pytest.raises(TransferIncompleteError) as err:
        round_timing(topo, scn.workload)
    assert err.value.direction == "up"
    assert err.value.orbits == [1, 2, 3, 4]


def test_strategy_orderings(bundled_scenario, bundled_provider):
    """Baselines are never faster than the proposed pipeline end to end."""
    w = bundled_scenario.workload
    proposed = round_timing(bundled_provider, w)
    sequential = round_timing(bundled_provider, w, sequential_intra=True)
    no_isc = round_timing(bundled_provider, w, strategy="no_isc")
    assert sequential.intra_orbit_s > proposed.intra_orbit_s
    assert no_isc.wall_clock_s > proposed.wall_clock_s


def test_tos_round_has_no_ground_segment(bundled_scenario, bundled_provider):
    rt = tos_round_timing(bundled_provider, bundled_scenario.workload)
    assert rt.sat_ground_s == 0.0 and rt.terrestrial_s == 0.0
    assert rt.on_board_s > 0


def test_centralized_round_ships_raw_data(bundled_scenario, dense_ground_stations):
    scn = bundled_scenario
    topo = _provider(scn, dense_ground_stations)
    w = replace(scn.workload, raw_bits_per_sample=1e7, samples_per_satellite=2)
    rt = centralized_round_timing(topo, w)
    assert rt.on_board_s == 0.0 and rt.intra_orbit_s == 0.0
    assert rt.sat_ground_s > 0 and rt.terrestrial_s > 0


def test_run_training_accumulates_rounds(tiny_scenario):
    topo = _provider(tiny_scenario)
    report = run_training(topo, tiny_scenario.workload, rounds=2)
    assert len(report.rounds) == 2
    assert report.total_wall_clock_s == pytest.approx(
        sum(r.wall_clock_s for r in report.rounds), rel=1e-12
    )


def test_gossip_consensus_factor_scales_totals(tiny_scenario):
    topo = _provider(tiny_scenario)
    proposed = run_training(topo, tiny_scenario.workload, 1, "proposed")
    gossip1 = run_training(topo, tiny_scenario.workload, 1, "strategy3", consensus_factor=1.0)
    gossip2 = run_training(topo, tiny_scenario.workload, 1, "strategy3", consensus_factor=2.0)
    assert gossip1.total_wall_clock_s == pytest.approx(proposed.total_wall_clock_s, rel=1e-12)
    assert gossip2.total_wall_clock_s == pytest.approx(
        2.0 * proposed.total_wall_clock_s, rel=1e-12
    )


def test_run_training_rejects_bad_inputs(tiny_scenario):
    topo = _provider(tiny_scenario)
    with pytest.raises(ValueError):
        run_training(topo, tiny_scenario.workload, 0)
    with pytest.raises(ValueError):
        run_training(topo, tiny_scenario.workload, 1, "warp_drive")


# ---------------------------------------------------------------------------
# Aggregation semantics
# ---------------------------------------------------------------------------


def test_hierarchical_aggregate_scalar_example():
    heads = np.array([[[1.0], [3.0]], [[5.0], [7.0]]])  # P=2, N=2
    assert hierarchical_aggregate(heads) == pytest.approx([4.0])


def test_hierarchical_equals_flat_mean():
    rng = np.random.default_rng(3)
    heads = rng.normal(size=(4, 20, 64))
    np.testing.assert_allclose(
        hierarchical_aggregate(heads), heads.reshape(-1, 64).mean(axis=0), rtol=1e-12
    )


def test_hierarchical_weighted_reduces_to_weighted_flat_mean():
    rng = np.random.default_rng(4)
    heads = rng.normal(size=(3, 5, 8))
    weights = rng.uniform(1.0, 10.0, size=(3, 5))
    expected = (weights[..., None] * heads).sum(axis=(0, 1)) / weights.sum()
    np.testing.assert_allclose(hierarchical_aggregate(heads, weights), expected, rtol=1e-12)


def test_hierarchical_rejects_bad_shapes():
    with pytest.raises(ValueError):
        hierarchical_aggregate(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        hierarchical_aggregate(np.zeros((2, 3, 4)), np.zeros((2, 2)))


def test_toy_gradient_matches_finite_differences():
    problem = ToyFederatedProblem(2, 2, seed=11)
    rng = np.random.default_rng(12)
    w = rng.normal(size=problem.dim_head)
    g = problem.local_gradient(0, 1, w)
    eps = 1e-6
    for k in range(problem.dim_head):
        delta = np.zeros_like(w)
        delta[k] = eps
        fd = (problem.local_loss(0, 1, w + delta) - problem.local_loss(0, 1, w - delta)) / (2 * eps)
        assert g[k] == pytest.approx(fd, rel=1e-6)


def test_toy_fedavg_identical_data_equals_centralized_gd():
    problem = ToyFederatedProblem(2, 3, seed=5)
    # make every satellite hold the same dataset
    problem.features[:] = problem.features[0, 0]
    problem.targets[:] = problem.targets[0, 0]
    lr = 0.5 / problem.smoothness_bound()
    heads = np.zeros((2, 3, problem.dim_head))
    w_manual = np.zeros(problem.dim_head)
    for _ in range(5):
        heads, _ = toy_fedavg_round(problem, heads, lr)
        w_manual = w_manual - lr * problem.local_gradient(0, 0, w_manual)
        np.testing.assert_allclose(heads[0, 0], w_manual, rtol=1e-12)


def test_toy_fedavg_loss_decreases():
    problem = ToyFederatedProblem(2, 4, seed=9)
    lr = 0.9 / problem.smoothness_bound()
    losses = toy_fedavg_training(problem, 10, lr)
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_toy_fedavg_rejects_bad_learning_rate():
    problem = ToyFederatedProblem(1, 2)
    with pytest.raises(ValueError):
        toy_fedavg_round(problem, np.zeros((1, 2, problem.dim_head)), 0.0)
