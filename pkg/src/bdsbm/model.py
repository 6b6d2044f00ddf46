"""Core data types and the complete-data log-likelihood of the BD-SBM.

Individuals carry dense integer ids. The initial population is
``0 .. N0 - 1`` and newborns receive ``N0, N0 + 1, ...`` in birth order.
Community labels are 0-based everywhere in the Python API; the file formats
written by :mod:`bdsbm.io` use 1-based communities.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .exceptions import InputError
from .rates import exposure_intervals, integrated_exposure

SHARED = "shared"
PER_COMMUNITY = "per-community"
RATE_MODES = (SHARED, PER_COMMUNITY)


@dataclass(frozen=True)
class ModelParams:
    """Model parameters ``(lambda, mu, pi, beta)``.

    In ``"shared"`` mode ``lam`` and ``mu`` are scalars; in
    ``"per-community"`` mode they are length-K arrays.
    """

    lam: object
    mu: object
    beta: np.ndarray
    pi: np.ndarray
    rate_mode: str = SHARED

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        pi = np.array(self.pi, dtype=float)
        K = beta.size
        if self.rate_mode not in RATE_MODES:
            raise InputError(f"unknown rate_mode {self.rate_mode!r}")
        if pi.shape != (K, K):
            raise InputError(f"pi has shape {pi.shape}, expected {(K, K)}")
        if np.any(beta < 0) or abs(beta.sum() - 1.0) > 1e-12:
            raise InputError("beta must be a probability vector")
        if np.any(pi < 0) or np.any(pi > 1) or not np.allclose(pi, pi.T, rtol=0, atol=1e-12):
            raise InputError("pi must be symmetric with entries in [0, 1]")
        if self.rate_mode == SHARED:
            lam, mu = float(self.lam), float(self.mu)
        else:
            lam = np.broadcast_to(np.asarray(self.lam, dtype=float), (K,)).copy()
            mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (K,)).copy()
        if np.any(np.asarray(lam) < 0) or np.any(np.asarray(mu) < 0):
            raise InputError("rates must be non-negative")
        for name, value in (("beta", beta), ("pi", pi), ("lam", lam), ("mu", mu)):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def K(self):
        return self.beta.size

    def birth_rates(self):
        """Birth rate per community as a length-K array."""
        return np.broadcast_to(np.asarray(self.lam, dtype=float), (self.K,))

    def death_rates(self):
        """Death rate per community as a length-K array."""
        return np.broadcast_to(np.asarray(self.mu, dtype=float), (self.K,))

    def permuted(self, perm):
        """Relabel communities so that new community ``perm[k]`` is old ``k``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        lam, mu = self.lam, self.mu
        if self.rate_mode == PER_COMMUNITY:
            lam, mu = lam[inv], mu[inv]
        return ModelParams(lam, mu, self.beta[inv], self.pi[np.ix_(inv, inv)], self.rate_mode)


@dataclass(frozen=True)
class EventHistory:
    """Fully observed birth-death history on ``[t0, tT]``.

    Attributes
    ----------
    t0, tT : float
        Observation window.
    n0 : int
        Size of the initial population (ids ``0 .. n0 - 1``).
    times : ndarray, shape (M,)
        Strictly increasing event times.
    kinds : ndarray, shape (M,)
        ``+1`` for a birth, ``-1`` for a death.
    ids : ndarray, shape (M,)
        Individual undergoing each event.
    """

    t0: float
    tT: float
    n0: int
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kinds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        kinds = np.asarray(self.kinds, dtype=np.int64).reshape(-1)
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        t0, tT, n0 = float(self.t0), float(self.tT), int(self.n0)
        if not (np.isfinite(t0) and np.isfinite(tT) and tT > t0):
            raise InputError(f"invalid window [{t0}, {tT}]")
        if n0 < 0:
            raise InputError("n0 must be non-negative")
        if not (times.size == kinds.size == ids.size):
            raise InputError("times, kinds and ids must have equal length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise InputError("event times must be strictly increasing")
            if times[0] < t0 or times[-1] > tT:
                raise InputError("event times must lie in [t0, tT]")
            if not np.all(np.isin(kinds, (1, -1))):
                raise InputError("event kinds must be +1 or -1")

        n_ind = n0 + int(np.count_nonzero(kinds == 1))
        birth_time = np.full(n_ind, t0)
        death_time = np.full(n_ind, tT)
        dies = np.zeros(n_ind, dtype=bool)
        alive = np.zeros(n_ind, dtype=bool)
        alive[:n0] = True
        sizes = np.empty(times.size + 1, dtype=np.int64)
        sizes[0] = n0
        next_id = n0
        for ell, (t, b, i) in enumerate(zip(times, kinds, ids)):
            if b == 1:
                if i != next_id:
                    raise InputError(
                        f"event {ell}: newborn id {i} is not the next sequential id {next_id}"
                    )
                birth_time[i] = t
                alive[i] = True
                next_id += 1
            else:
                if not (0 <= i < next_id) or not alive[i]:
                    raise InputError(f"event {ell}: death of id {i} which is not alive")
                death_time[i] = t
                dies[i] = True
                alive[i] = False
            sizes[ell + 1] = sizes[ell] + b

        derived = dict(
            t0=t0, tT=tT, n0=n0, times=times, kinds=kinds, ids=ids,
            birth_time=birth_time, death_time=death_time, dies=dies, sizes=sizes,
        )
        for name, value in derived.items():
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_individuals(self):
        return self.birth_time.size

    @property
    def n_events(self):
        return self.times.size

    @property
    def v0(self):
        return np.arange(self.n0)

    @property
    def birth_events(self):
        return np.flatnonzero(self.kinds == 1)

    @property
    def death_events(self):
        return np.flatnonzero(self.kinds == -1)

    @property
    def exposure(self):
        return integrated_exposure(self)

    def alive_at(self, t):
        """Ids alive at time ``t`` under the closed-lifespan convention."""
        return np.flatnonzero((self.birth_time <= t) & (t <= self.death_time))

    def scaled(self, factor):
        """Copy with every time multiplied by ``factor``."""
        return EventHistory(self.t0 * factor, self.tT * factor, self.n0,
                            self.times * factor, self.kinds, self.ids)


@dataclass(frozen=True)
class SnapshotSeries:
    """Undirected edge sets observed at increasing snapshot times.

    ``edges[s]`` is an integer array of shape ``(E_s, 2)`` with ``i < j`` in
    every row.
    """

    times: np.ndarray
    edges: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if np.any(np.diff(times) <= 0):
            raise InputError("snapshot times must be strictly increasing")
        if len(self.edges) != times.size:
            raise InputError("one edge array is required per snapshot time")
        edges = []
        for s, e in enumerate(self.edges):
            e = np.asarray(e, dtype=np.int64).reshape(-1, 2)
            if e.size:
                if np.any(e[:, 0] >= e[:, 1]):
                    raise InputError(f"snapshot {s}: edges must satisfy i < j (no self-loops)")
                if np.unique(e, axis=0).shape[0] != e.shape[0]:
                    raise InputError(f"snapshot {s}: duplicate edges")
            e.setflags(write=False)
            edges.append(e)
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def n_edges(self):
        return sum(e.shape[0] for e in self.edges)


class TemporalNetwork:
    """An event history together with its snapshots and pairwise counts.

    The edge model only ever needs, for each pair ``(i, j)``, the number of
    co-alive snapshots and the number of those with an edge, so both are
    precomputed as dense symmetric matrices with a zero diagonal.

    Attributes
    ----------
    edge_counts : ndarray, shape (N, N)
        Number of snapshot times at which the edge ``(i, j)`` is present.
    pair_exposure : ndarray, shape (N, N)
        ``|Upsilon_ij|``, the number of snapshot times at which ``i`` and
        ``j`` are both alive.
    """

    def __init__(self, history, snapshots):
        self.history = history
        self.snapshots = snapshots
        n = history.n_individuals
        times = snapshots.times
        lo = np.searchsorted(times, history.birth_time, side="left")
        hi = np.searchsorted(times, history.death_time, side="right")
        counts = np.minimum.outer(hi, hi) - np.maximum.outer(lo, lo)
        np.clip(counts, 0, None, out=counts)
        np.fill_diagonal(counts, 0)
        self.pair_exposure = counts.astype(float)

        A = np.zeros((n, n))
        for s, e in enumerate(snapshots.edges):
            if not e.size:
                continue
            if e.max() >= n:
                raise InputError(f"snapshot {s}: edge endpoint is not a known individual")
            t = times[s]
            ok = ((history.birth_time[e] <= t) & (t <= history.death_time[e])).all(axis=1)
            if not ok.all():
                bad = e[~ok][0]
                raise InputError(
                    f"snapshot {s} (t={t}): edge {tuple(bad)} has an endpoint that is not alive"
                )
            np.add.at(A, (e[:, 0], e[:, 1]), 1.0)
        A += A.T
        self.edge_counts = A
        self.non_edge_counts = self.pair_exposure - A
        if np.any(self.non_edge_counts < 0):
            raise InputError("an edge is recorded more often than its pair is co-alive")

    @property
    def n_individuals(self):
        return self.history.n_individuals

    @property
    def total_pair_slots(self):
        """``sum_{i<j} |Upsilon_ij|``."""
        return float(self.pair_exposure.sum() / 2.0)


def upsilon(i, j, history, times):
    """Snapshot times at which individuals ``i`` and ``j`` are both alive.

    Parameters
    ----------
    i, j : int
        Distinct individual ids.
    history : EventHistory
    times : array-like
        Snapshot times.

    Returns
    -------
    ndarray
        The times ``t`` with ``max(b_i, b_j) <= t <= min(d_i, d_j)``.
    """
    n = history.n_individuals
    if i == j:
        raise InputError("upsilon needs two distinct individuals")
    for x in (i, j):
        if not 0 <= x < n:
            raise InputError(f"unknown individual id {x}")
    times = np.asarray(times, dtype=float)
    start = max(history.birth_time[i], history.birth_time[j])
    stop = min(history.death_time[i], history.death_time[j])
    return times[(times >= start) & (times <= stop)]


def edge_log_prob(e, k1, k2, pi):
    """Bernoulli log-probability of edge indicator ``e`` between blocks ``k1``, ``k2``."""
    p = float(np.asarray(pi)[k1, k2])
    return float(xlogy(e, p) + xlogy(1 - e, 1.0 - p))


def check_labels(labels, n_individuals, K):
    labels = np.asarray(labels)
    if labels.shape != (n_individuals,):
        raise InputError(f"labels must have shape ({n_individuals},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise InputError(f"labels must lie in 0..{K - 1}")
    return labels.astype(np.int64)


def community_size_path(labels, history, K):
    """Per-community sizes just after every event.

    Returns an integer array of shape ``(M + 1, K)`` whose row ``l`` holds the
    community sizes on ``[tau_l, tau_{l+1})``.
    """
    sizes = np.zeros((history.n_events + 1, K), dtype=np.int64)
    sizes[0] = np.bincount(labels[: history.n0], minlength=K)
    for ell in range(history.n_events):
        sizes[ell + 1] = sizes[ell]
        sizes[ell + 1, labels[history.ids[ell]]] += history.kinds[ell]
    return sizes


def complete_log_likelihood(params, labels, network):
    """Complete-data log-likelihood of labels and observations.

    Parameters
    ----------
    params : ModelParams
    labels : array-like of int, shape (N,)
        0-based community of every individual.
    network : TemporalNetwork

    Returns
    -------
    float
        May be ``-inf`` when the labels or data have zero probability, for
        instance a positive event count under a zero rate, or a newborn
        labelled into a community that is empty at its birth.
    """
    history = network.history
    K = params.K
    z = check_labels(labels, history.n_individuals, K)
    onehot = np.eye(K)[z]

    s1 = onehot.T @ network.edge_counts @ onehot
    s0 = onehot.T @ (network.pair_exposure - network.edge_counts) @ onehot
    value = 0.5 * float(np.sum(xlogy(s1, params.pi) + xlogy(s0, 1.0 - params.pi)))

    value += float(np.sum(xlogy(np.bincount(z[: history.n0], minlength=K), params.beta)))

    size_path = community_size_path(z, history, K)
    births = history.birth_events
    deaths = history.death_events
    parent_sizes = size_path[births, z[history.ids[births]]]
    with np.errstate(divide="ignore"):
        value += float(np.sum(np.log(parent_sizes.astype(float))))

    if params.rate_mode == SHARED:
        value += float(xlogy(births.size, params.lam) + xlogy(deaths.size, params.mu))
        value -= (params.lam + params.mu) * integrated_exposure(history)
    else:
        _, durations = exposure_intervals(history)
        community_exposure = durations @ size_path
        lam, mu = params.birth_rates(), params.death_rates()
        b_counts = np.bincount(z[history.ids[births]], minlength=K)
        d_counts = np.bincount(z[history.ids[deaths]], minlength=K)
        value += float(np.sum(xlogy(b_counts, lam) + xlogy(d_counts, mu)))
        value -= float(np.dot(lam + mu, community_exposure))
    return value
