import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdsbm.exceptions import InputError
from bdsbm.initialization import (
    InitOptions,
    init_params,
    initialize,
    kmeans_rows,
    similarity_matrix,
    soften,
)
from bdsbm.model import EventHistory, SnapshotSeries, TemporalNetwork
from bdsbm.evaluation import align_labels

from conftest import small_network


def pair_network(pattern):
    """Two immortal individuals observed once per entry of ``pattern``."""
    snaps = SnapshotSeries(np.arange(len(pattern), dtype=float),
                           tuple([[0, 1]] if e else () for e in pattern))
    return TemporalNetwork(EventHistory(0.0, float(len(pattern)), 2), snaps)


@pytest.mark.parametrize("pattern, expected", [
    ([1, 1, 1, 1], 1.0), ([0, 0, 0], -1.0), ([1, 0, 1, 0], 0.0)])
def test_similarity_examples(pattern, expected):
    S = similarity_matrix(pair_network(pattern))
    assert S.values[0, 1] == S.values[1, 0] == expected
    assert S.defined[0, 1]


def test_similarity_undefined_pairs_are_zero():
    h = EventHistory(0.0, 10.0, 1, [1.0, 5.5], [-1, 1], [0, 1])
    net = TemporalNetwork(h, SnapshotSeries([0.0, 6.0], ((), ())))
    S = similarity_matrix(net)
    assert S.values[0, 1] == 0.0 and not S.defined[0, 1]


@given(st.integers(0, 300))
@settings(max_examples=20, deadline=None)
def test_similarity_range_and_symmetry(seed):
    _, _, net = small_network(seed, n_max=12)
    S = similarity_matrix(net).values
    assert np.all((S >= -1) & (S <= 1))
    np.testing.assert_array_equal(S, S.T)


def block_matrix(labels):
    labels = np.asarray(labels)
    return np.where(labels[:, None] == labels[None, :], 1.0, -1.0)


def test_two_separated_blocks():
    truth = np.array([0, 0, 1, 1, 0, 1, 1, 0])
    got = kmeans_rows(block_matrix(truth), 2)
    perm = align_labels(got, truth, 2)
    np.testing.assert_array_equal(perm[got], truth)


def test_single_cluster():
    np.testing.assert_array_equal(kmeans_rows(np.eye(5), 1), np.zeros(5))


def test_k_too_large():
    with pytest.raises(InputError):
        kmeans_rows(np.eye(3), 4)


def wcss(X, labels, K):
    return sum(((X[labels == k] - X[labels == k].mean(axis=0)) ** 2).sum()
               for k in range(K) if np.any(labels == k))


def test_planted_three_blocks_match_exhaustive_best_partition():
    rng = np.random.default_rng(5)
    truth = np.repeat([0, 1, 2], 4)
    S = block_matrix(truth) + rng.normal(0, 0.3, (12, 12))
    S = (S + S.T) / 2
    got = kmeans_rows(S, 3, InitOptions(kmeans_restarts=20, seed=0))
    best = np.inf
    # the first item is fixed to cluster 0 to skip relabelled duplicates
    for rest in itertools.product(range(3), repeat=11):
        labels = np.array((0,) + rest)
        if len(set(rest) | {0}) == 3:
            best = min(best, wcss(S, labels, 3))
    assert wcss(S, got, 3) == pytest.approx(best, rel=1e-12)


def test_soften_example():
    delta = soften([2], 4, 0.9)
    np.testing.assert_allclose(delta, [[0.025, 0.025, 0.925, 0.025]])


@given(st.lists(st.integers(0, 4), min_size=1, max_size=30), st.floats(1e-6, 1 - 1e-6))
def test_soften_rows_and_argmax(labels, omega):
    delta = soften(labels, 5, omega)
    np.testing.assert_allclose(delta.sum(axis=1), 1.0, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(delta.argmax(axis=1), labels)


def test_soften_small_omega_is_nearly_uniform():
    np.testing.assert_allclose(soften([0, 1, 2], 3, 1e-12), 1 / 3, atol=1e-12)


def test_init_params_one_hot():
    _, sim, net = small_network(4, K=2, n0=3, n_max=10)
    delta = np.eye(2)[sim.labels]
    beta, pi = init_params(delta, net)
    np.testing.assert_allclose(beta, np.bincount(sim.labels[:3], minlength=2) / 3)
    z = sim.labels
    for a in range(2):
        for b in range(2):
            mask = np.outer(z == a, z == b)
            den = net.pair_exposure[mask].sum()
            if den:
                assert pi[a, b] == pytest.approx(net.edge_counts[mask].sum() / den)


@given(st.integers(0, 200))
@settings(max_examples=20, deadline=None)
def test_init_params_direct_formula(seed):
    _, _, net = small_network(seed, K=3, n0=4, n_max=12)
    rng = np.random.default_rng(seed)
    N, K = net.n_individuals, 3
    delta = rng.dirichlet(np.ones(K), N)
    beta, pi = init_params(delta, net)
    np.testing.assert_allclose(beta, delta[:4].mean(axis=0), rtol=1e-12)
    for k in range(K):
        for l in range(K):
            num = den = 0.0
            for i in range(N):
                for j in range(i + 1, N):
                    w = delta[i, k] * delta[j, l] + delta[i, l] * delta[j, k]
                    num += w * net.edge_counts[i, j]
                    den += w * net.pair_exposure[i, j]
            if den > 0:
                assert pi[k, l] == pytest.approx(num / den, rel=1e-12, abs=1e-15)


def test_initialize_has_no_size_structure():
    _, _, net = small_network(6, K=2, n0=4, n_max=12)
    delta, params = initialize(net, 2)
    assert delta.shape == (net.n_individuals, 2)
    assert params.K == 2 and params.lam == 0.0 and params.mu == 0.0
    np.testing.assert_allclose(delta.sum(axis=1), 1.0)


def test_options_validation():
    with pytest.raises(InputError):
        InitOptions(omega=1.0)
    with pytest.raises(InputError):
        InitOptions(kmeans_restarts=0)
