import math

import numpy as np
import pytest

from bdsbm.exceptions import SelectionError
from bdsbm.initialization import initialize
from bdsbm.model import EventHistory, SnapshotSeries, TemporalNetwork
from bdsbm.selection import icl, icl_penalty, select_k
from bdsbm.vem import FitOptions, fit

from conftest import small_network


def test_penalty_arithmetic():
    assert icl_penalty(2, 100, 10_000) == pytest.approx(-16.1181, abs=1e-4)
    assert icl_penalty(2, 100, 10_000) == pytest.approx(
        -0.5 * math.log(100) - 1.5 * math.log(10_000), rel=1e-15)


def test_penalty_single_community():
    assert icl_penalty(1, 37, 5000) == pytest.approx(-0.5 * math.log(5000), rel=1e-15)


@pytest.mark.parametrize("n0, slots", [(2, 3), (40, 1e4), (1000, 1e7)])
def test_penalty_strictly_decreasing(n0, slots):
    values = [icl_penalty(K, n0, slots) for K in range(1, 12)]
    assert np.all(np.diff(values) < 0)


def test_no_pair_observations_is_an_error():
    net = TemporalNetwork(EventHistory(0.0, 1.0, 1), SnapshotSeries([0.0], ((),)))
    with pytest.raises(SelectionError):
        icl_penalty(2, 1, net.total_pair_slots)
    with pytest.raises(SelectionError):
        select_k(net, [1, 2], n_inits=1)


@pytest.fixture(scope="module")
def medium():
    return small_network(3, K=2, n0=10, n_max=40, n_min=20, tT=6.0)[2]


def test_singleton_range(medium):
    table = select_k(medium, [3], n_inits=2, fit_options=FitOptions(max_iterations=5))
    assert table.selected_K == 3
    assert sum(table.histogram.values()) == 2
    assert table.row_for(3) is not None


def test_sweep_is_deterministic(medium):
    opts = FitOptions(max_iterations=5)
    a = select_k(medium, [1, 2, 3], n_inits=2, fit_options=opts)
    b = select_k(medium, [1, 2, 3], n_inits=2, fit_options=opts)
    assert [(r.K, r.seed, r.icl) for r in a.rows] == [(r.K, r.seed, r.icl) for r in b.rows]
    assert a.selected_K == b.selected_K


def test_parallel_sweep_matches_serial(medium):
    opts = FitOptions(max_iterations=5)
    a = select_k(medium, [1, 2], n_inits=2, fit_options=opts, n_jobs=1)
    b = select_k(medium, [1, 2], n_inits=2, fit_options=opts, n_jobs=2)
    assert [(r.K, r.seed, r.icl) for r in a.rows] == [(r.K, r.seed, r.icl) for r in b.rows]


def test_selected_k_maximizes_best_icl(medium):
    table = select_k(medium, [1, 2, 3], n_inits=2, fit_options=FitOptions(max_iterations=5))
    best = {K: max(r.icl for r in table.rows if r.K == K) for K in (1, 2, 3)}
    assert best == table.best_icl
    assert table.selected_K == max(best, key=lambda K: (best[K], -K))


def test_icl_is_permutation_invariant(medium):
    delta, params = initialize(medium, 3)
    result = fit(medium, delta, params, FitOptions(max_iterations=5))
    perm = np.array([1, 2, 0])
    result.params = result.params.permuted(perm)
    before = icl(fit(medium, delta, params, FitOptions(max_iterations=5)), medium)
    result.labels = perm[result.labels]
    assert icl(result, medium) == pytest.approx(before, rel=1e-12)


def test_empty_range():
    _, _, net = small_network(1)
    with pytest.raises(SelectionError):
        select_k(net, [])
