import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

from bdsbm.model import EventHistory, ModelParams, SnapshotSeries, TemporalNetwork
from bdsbm.simulator import PI_HIGH, SimConfig, simulate


def random_params(rng, K, lam=0.3, mu=0.15, rate_mode="shared"):
    pi = rng.uniform(0.1, 0.9, (K, K))
    pi = (pi + pi.T) / 2
    beta = rng.dirichlet(np.ones(K))
    if rate_mode == "shared":
        return ModelParams(lam, mu, beta, pi)
    return ModelParams(rng.uniform(0.1, 0.5, K), rng.uniform(0.05, 0.3, K), beta, pi,
                       rate_mode)


def small_network(seed, K=2, n0=3, n_max=8, tT=3.0, lam=0.3, mu=0.15, n_min=4,
                  rate_mode="shared"):
    """A simulated instance with between ``n_min`` and ``n_max`` individuals."""
    rng = np.random.default_rng(seed)
    params = random_params(rng, K, lam, mu, rate_mode)
    for s in range(1000):
        sim = simulate(SimConfig(params, n0=n0, t0=0.0, tT=tT, snapshot_spacing=1.0,
                                 seed=seed * 1000 + s))
        if n_min <= sim.history.n_individuals <= n_max:
            return params, sim, TemporalNetwork(sim.history, sim.snapshots)
    raise RuntimeError("no instance of the requested size")


def all_labelings(N, K):
    return (np.array(z) for z in itertools.product(range(K), repeat=N))


def exact_log_evidence(params, network):
    """log of the sum over every labelling of the complete-data likelihood."""
    from bdsbm.model import complete_log_likelihood

    values = [complete_log_likelihood(params, z, network)
              for z in all_labelings(network.n_individuals, params.K)]
    return float(logsumexp(values))


def high_signal(seed=1, tT=60.0, mu=0.02, sizes=(20, 22, 14, 24)):
    sizes = np.asarray(sizes)
    params = ModelParams(0.04, mu, sizes / sizes.sum(), PI_HIGH)
    sim = simulate(SimConfig(params, sizes=tuple(sizes), t0=0.0, tT=tT, seed=seed))
    return params, sim, TemporalNetwork(sim.history, sim.snapshots)


@pytest.fixture
def two_node_static():
    history = EventHistory(0.0, 1.0, 2)
    return history


@pytest.fixture(scope="session")
def bd_high():
    return high_signal(seed=1)
