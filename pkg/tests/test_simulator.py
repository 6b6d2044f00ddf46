import numpy as np
import pytest

from bdsbm.exceptions import InputError
from bdsbm.model import ModelParams, TemporalNetwork
from bdsbm.simulator import PI_HIGH, SimConfig, make_rng, sample_snapshot, simulate, uniform_times


def shared(lam, mu, K=1, pi=None):
    pi = np.full((K, K), 0.5) if pi is None else pi
    return ModelParams(lam, mu, np.full(K, 1.0 / K), pi)


def test_no_rates_means_no_events():
    sim = simulate(SimConfig(shared(0.0, 0.0, 2), sizes=(3, 4), tT=10.0))
    assert sim.history.n_events == 0
    np.testing.assert_array_equal(sim.history.sizes, [7])
    assert not sim.extinct
    assert len(sim.snapshots.times) == 11


def test_same_seed_is_bit_identical():
    cfg = SimConfig(ModelParams(0.1, 0.05, [0.5, 0.5], [[0.6, 0.1], [0.1, 0.5]]),
                    n0=10, tT=20.0, seed=12345)
    a, b = simulate(cfg), simulate(cfg)
    np.testing.assert_array_equal(a.history.times, b.history.times)
    np.testing.assert_array_equal(a.history.ids, b.history.ids)
    np.testing.assert_array_equal(a.labels, b.labels)
    for ea, eb in zip(a.snapshots.edges, b.snapshots.edges):
        np.testing.assert_array_equal(ea, eb)


def test_different_seeds_differ():
    params = shared(0.1, 0.05)
    a = simulate(SimConfig(params, n0=20, tT=20.0, seed=1))
    b = simulate(SimConfig(params, n0=20, tT=20.0, seed=2))
    assert not np.array_equal(a.history.times, b.history.times)


def test_mean_population_tracks_exponential_growth():
    lam, mu, n0 = 0.04, 0.02, 40
    params = shared(lam, mu)
    checks = (25.0, 50.0)
    counts = np.empty((200, len(checks)))
    for seed in range(200):
        h = simulate(SimConfig(params, n0=n0, tT=50.0, snapshot_times=[], seed=seed)).history
        counts[seed] = [h.sizes[np.searchsorted(h.times, t, side="right")] for t in checks]
    for col, t in enumerate(checks):
        se = counts[:, col].std(ddof=1) / np.sqrt(len(counts))
        assert abs(counts[:, col].mean() - n0 * np.exp((lam - mu) * t)) < 3 * se


def test_pi_zero_and_one():
    labels = np.array([0, 1, 0, 1, 1])
    alive = np.arange(5)
    rng = make_rng(np.random.SeedSequence(0))
    assert sample_snapshot(labels, alive, np.zeros((2, 2)), rng).shape == (0, 2)
    full = sample_snapshot(labels, alive, np.ones((2, 2)), rng)
    assert len(full) == 10
    assert np.all(full[:, 0] < full[:, 1])


def test_within_block_density_of_high_signal_matrix():
    labels = np.zeros(142, dtype=int)
    rng = make_rng(np.random.SeedSequence(7))
    # 142 * 141 / 2 = 10011 pair slots
    edges = sample_snapshot(labels, np.arange(142), PI_HIGH, rng)
    n = 142 * 141 // 2
    p = PI_HIGH[0, 0]
    assert abs(len(edges) / n - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_snapshot_streams_are_independent_of_other_times():
    params = ModelParams(0.05, 0.02, [0.5, 0.5], [[0.6, 0.1], [0.1, 0.5]])
    a = simulate(SimConfig(params, n0=15, tT=20.0, snapshot_times=[0.0, 5.0, 10.0], seed=3))
    b = simulate(SimConfig(params, n0=15, tT=20.0, snapshot_times=[0.0, 5.0, 10.0, 15.0], seed=3))
    np.testing.assert_array_equal(a.history.times, b.history.times)
    for ea, eb in zip(a.snapshots.edges, b.snapshots.edges):
        np.testing.assert_array_equal(ea, eb)


def test_history_invariants_and_valid_network():
    params = ModelParams(0.1, 0.08, [0.3, 0.7], [[0.6, 0.1], [0.1, 0.5]])
    for seed in range(10):
        sim = simulate(SimConfig(params, n0=8, tT=15.0, seed=seed))
        h = sim.history
        assert np.all(np.diff(h.times) > 0)
        assert np.all(h.sizes >= 0)
        np.testing.assert_array_equal(h.ids[h.kinds == 1], h.n0 + np.arange(h.birth_events.size))
        TemporalNetwork(h, sim.snapshots)
        if sim.extinct:
            assert h.sizes[-1] == 0


def test_newborns_inherit_in_proportion_to_sizes():
    # shared rates: the newborn's community given sizes is N_k / N
    params = ModelParams(0.05, 0.0, [0.5, 0.5], np.full((2, 2), 0.5))
    observed, expected = 0.0, 0.0
    n_births = 0
    for seed in range(40):
        sim = simulate(SimConfig(params, sizes=(5, 15), tT=20.0, snapshot_times=[], seed=seed))
        h = sim.history
        sizes = np.array([5.0, 15.0])
        for i in h.ids:
            k = sim.labels[i]
            observed += k == 0
            expected += sizes[0] / sizes.sum()
            sizes[k] += 1
            n_births += 1
    se = np.sqrt(expected * (1 - expected / n_births))
    assert n_births > 300
    assert abs(observed - expected) < 4 * se


def test_sizes_are_respected():
    sim = simulate(SimConfig(shared(0.0, 0.0, 3), sizes=(2, 0, 5), tT=1.0))
    np.testing.assert_array_equal(np.bincount(sim.labels, minlength=3), [2, 0, 5])


def test_extinction_is_flagged():
    sim = simulate(SimConfig(shared(0.0, 5.0), n0=3, tT=100.0, seed=0))
    assert sim.extinct
    assert all(len(e) == 0 for e in sim.snapshots.edges[-10:])


def test_uniform_times():
    np.testing.assert_allclose(uniform_times(0.0, 1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(InputError):
        uniform_times(0.0, 1.0, 0.0)


def test_config_validation():
    params = shared(0.1, 0.1, 2)
    with pytest.raises(InputError):
        SimConfig(params, n0=3, t0=1.0, tT=1.0)
    with pytest.raises(InputError):
        SimConfig(params, sizes=(1, 2, 3))
    with pytest.raises(InputError):
        SimConfig(params, n0=3, snapshot_times=[-1.0])
    with pytest.raises(InputError):
        SimConfig(params)
