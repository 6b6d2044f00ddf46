"""Similarity-based starting point for variational EM.

Pairs are scored by how often they are linked while co-alive, individuals are
clustered with k-means on the rows of the score matrix, and the hard clusters
are softened into initial memberships.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .exceptions import InputError
from .model import SHARED, ModelParams

DEFAULT_OMEGA = 0.9
DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class InitOptions:
    omega: float = DEFAULT_OMEGA
    kmeans_restarts: int = DEFAULT_RESTARTS
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.omega < 1:
            raise InputError("omega must lie strictly between 0 and 1")
        if self.kmeans_restarts < 1:
            raise InputError("kmeans_restarts must be at least 1")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise scores in ``[-1, 1]``; ``defined`` marks pairs ever co-alive."""

    values: np.ndarray
    defined: np.ndarray


def similarity_matrix(network):
    """``s_ij = (2 * edges_ij - |Upsilon_ij|) / |Upsilon_ij|``, 0 where undefined."""
    counts = network.pair_exposure
    defined = counts > 0
    safe = np.where(defined, counts, 1.0)
    values = np.where(defined, (2.0 * network.edge_counts - counts) / safe, 0.0)
    return SimilarityMatrix(values, defined)


def kmeans_rows(S, K, options=None):
    """Hard k-means labels of the rows of the similarity matrix.

    Parameters
    ----------
    S : SimilarityMatrix or ndarray
    K : int
    options : InitOptions, optional

    Returns
    -------
    ndarray of int, shape (N,)
    """
    options = options or InitOptions()
    X = np.asarray(getattr(S, "values", S), dtype=float)
    n = X.shape[0]
    if not 1 <= K <= n:
        raise InputError(f"K={K} must lie between 1 and the number of individuals ({n})")
    if K == 1:
        return np.zeros(n, dtype=np.int64)
    km = KMeans(n_clusters=K, n_init=options.kmeans_restarts, random_state=options.seed)
    return km.fit_predict(X).astype(np.int64)


def soften(labels, K, omega=DEFAULT_OMEGA):
    """``delta[i, k] = omega * 1{labels[i] == k} + (1 - omega) / K``."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise InputError("labels out of range")
    delta = np.full((labels.size, K), (1.0 - omega) / K)
    delta[np.arange(labels.size), labels] += omega
    return delta


def init_params(delta, network):
    """Starting ``beta`` and ``pi`` from initial memberships.

    ``beta`` averages the memberships of the initial population and ``pi``
    is the membership-weighted edge density over co-alive pair slots.

    Returns
    -------
    beta : ndarray, shape (K,)
    pi : ndarray, shape (K, K)
    """
    delta = np.asarray(delta, dtype=float)
    history = network.history
    if history.n0 < 1:
        raise InputError("the initial population is empty")
    beta = delta[: history.n0].mean(axis=0)
    beta = beta / beta.sum()

    upper_edges = np.triu(network.edge_counts, 1)
    upper_slots = np.triu(network.pair_exposure, 1)
    num = delta.T @ upper_edges @ delta
    den = delta.T @ upper_slots @ delta
    num, den = num + num.T, den + den.T
    total = upper_slots.sum()
    density = upper_edges.sum() / total if total > 0 else 0.0
    empty = den <= 0
    pi = np.where(empty, density, num / np.where(empty, 1.0, den))
    return beta, np.clip(pi, 0.0, 1.0)


def initialize(network, K, options=None, rate_mode=SHARED):
    """Full starting point ``(delta, params)`` for :func:`bdsbm.vem.fit`.

    Rates are set to zero here; the fitting routine replaces them.
    """
    options = options or InitOptions()
    labels = kmeans_rows(similarity_matrix(network), K, options)
    delta = soften(labels, K, options.omega)
    beta, pi = init_params(delta, network)
    zero = 0.0 if rate_mode == SHARED else np.zeros(K)
    return delta, ModelParams(zero, zero, beta, pi, rate_mode)
