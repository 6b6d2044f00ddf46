"""Exact simulation of the BD-SBM and of its snapshot observations.

Randomness comes from a counter-based Philox generator. The root seed is
split into an event stream and a snapshot root; the snapshot root is split
again into one independent stream per snapshot time, so resampling or adding
a snapshot never perturbs the event process or the other snapshots.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import InputError
from .model import EventHistory, ModelParams, SnapshotSeries

#: High-signal connectivity of the reference four-community experiment.
PI_HIGH = np.array([
    [0.75, 0.36, 0.20, 0.16],
    [0.36, 0.91, 0.22, 0.24],
    [0.20, 0.22, 0.82, 0.28],
    [0.16, 0.24, 0.28, 0.66],
])
#: Low-signal counterpart.
PI_LOW = np.array([
    [0.05, 0.09, 0.05, 0.04],
    [0.09, 0.10, 0.055, 0.06],
    [0.05, 0.055, 0.20, 0.07],
    [0.04, 0.06, 0.07, 0.06],
])

#: Bit generator used for every stream; part of the reproducibility contract.
BIT_GENERATOR = "Philox"


def make_rng(seed_seq):
    return np.random.Generator(np.random.Philox(seed_seq))


def uniform_times(t0, tT, spacing):
    """Snapshot grid ``t0, t0 + spacing, ...`` up to and including ``tT``."""
    if not spacing > 0:
        raise InputError("snapshot spacing must be positive")
    n = int(np.floor((tT - t0) / spacing + 1e-9))
    return t0 + spacing * np.arange(n + 1)


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one simulated temporal network.

    Parameters
    ----------
    params : ModelParams
    sizes : sequence of int, optional
        Initial community sizes. If omitted, ``n0`` labels are drawn i.i.d.
        from ``params.beta``.
    n0 : int, optional
        Initial population size when ``sizes`` is omitted.
    t0, tT : float
    snapshot_times : sequence of float, optional
    snapshot_spacing : float, optional
        Used when ``snapshot_times`` is omitted; defaults to 1.
    seed : int
    """

    params: ModelParams
    sizes: Optional[Sequence[int]] = None
    n0: Optional[int] = None
    t0: float = 0.0
    tT: float = 100.0
    snapshot_times: Optional[Sequence[float]] = None
    snapshot_spacing: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.tT) and self.tT > self.t0):
            raise InputError("tT must exceed t0")
        if self.sizes is None and self.n0 is None:
            raise InputError("give either initial sizes or n0")
        if self.sizes is not None:
            sizes = np.asarray(self.sizes)
            if sizes.shape != (self.params.K,) or np.any(sizes < 0):
                raise InputError("sizes must be K non-negative integers")
            if self.n0 is not None and int(sizes.sum()) != self.n0:
                raise InputError("sizes must sum to n0")
        elif self.n0 < 0:
            raise InputError("n0 must be non-negative")
        times = self.times()
        if times.size and (times[0] < self.t0 or times[-1] > self.tT):
            raise InputError("snapshot times must lie in [t0, tT]")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")

    def times(self):
        if self.snapshot_times is not None:
            return np.asarray(self.snapshot_times, dtype=float)
        return uniform_times(self.t0, self.tT, self.snapshot_spacing or 1.0)


class Simulation(NamedTuple):
    history: EventHistory
    labels: np.ndarray
    snapshots: SnapshotSeries
    extinct: bool


def sample_snapshot(labels, alive, pi, rng):
    """Draw one SBM snapshot over the alive individuals.

    Returns
    -------
    ndarray, shape (E, 2)
        Edges ``(i, j)`` with ``i < j``.
    """
    alive = np.sort(np.asarray(alive, dtype=np.int64))
    if alive.size < 2:
        return np.zeros((0, 2), dtype=np.int64)
    r, c = np.triu_indices(alive.size, 1)
    z = np.asarray(labels)[alive]
    p = np.asarray(pi)[z[r], z[c]]
    keep = rng.random(p.size) < p
    return np.column_stack((alive[r[keep]], alive[c[keep]]))


def _initial_labels(config, rng):
    K = config.params.K
    if config.sizes is not None:
        labels = np.repeat(np.arange(K), np.asarray(config.sizes, dtype=np.int64))
        return rng.permutation(labels)
    return rng.choice(K, size=config.n0, p=config.params.beta)


def simulate(config):
    """Simulate the birth-death process and the snapshot series.

    Events follow exponential clocks: with community sizes ``N_k`` the total
    rate is ``R = sum_k (lambda_k + mu_k) N_k``; the next event is a birth in
    ``k`` with probability ``lambda_k N_k / R`` (the newborn inherits ``k``) or
    the death of a uniformly chosen member of ``k`` with probability
    ``mu_k N_k / R``. The process stops at extinction or when the next event
    would fall after ``tT``.

    Returns
    -------
    Simulation
        ``(history, labels, snapshots, extinct)``; labels are 0-based.
    """
    params = config.params
    K = params.K
    lam, mu = params.birth_rates(), params.death_rates()
    event_seq, snap_seq = np.random.SeedSequence(int(config.seed)).spawn(2)
    rng = make_rng(event_seq)

    labels = list(_initial_labels(config, rng))
    n0 = len(labels)
    members = [[] for _ in range(K)]
    position = {}
    for i, k in enumerate(labels):
        position[i] = len(members[k])
        members[k].append(i)

    times, kinds, ids = [], [], []
    t = config.t0
    extinct = n0 == 0
    while not extinct:
        sizes = np.array([len(m) for m in members], dtype=float)
        weights = np.concatenate((lam * sizes, mu * sizes))
        total = weights.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > config.tT:
            break
        slot = min(int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right")),
                   2 * K - 1)
        k = slot % K
        if slot < K:
            i = len(labels)
            labels.append(k)
            position[i] = len(members[k])
            members[k].append(i)
            kinds.append(1)
        else:
            group = members[k]
            pos = int(rng.integers(len(group)))
            i = group[pos]
            last = group.pop()
            if last != i:
                group[pos] = last
                position[last] = pos
            del position[i]
            kinds.append(-1)
        times.append(t)
        ids.append(i)
        extinct = not position

    history = EventHistory(config.t0, config.tT, n0, times, kinds, ids)
    labels = np.asarray(labels, dtype=np.int64)
    snap_times = config.times()
    edges = []
    for t_s, seq in zip(snap_times, snap_seq.spawn(snap_times.size)):
        edges.append(sample_snapshot(labels, history.alive_at(t_s), params.pi, make_rng(seq)))
    return Simulation(history, labels, SnapshotSeries(snap_times, tuple(edges)), extinct)
