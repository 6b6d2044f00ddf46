"""scikit-learn style front end.

The model is transductive: it labels the individuals of the temporal network
it was fitted on, so ``predict`` only accepts that same network.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .exceptions import InputError
from .initialization import InitOptions, initialize
from .model import RATE_MODES, SHARED, EventHistory, SnapshotSeries, TemporalNetwork
from .selection import icl
from .vem import FitOptions, fit


def check_network(X):
    """Coerce ``X`` to a :class:`TemporalNetwork`.

    Accepts a network or an ``(EventHistory, SnapshotSeries)`` pair.
    """
    if isinstance(X, TemporalNetwork):
        return X
    if isinstance(X, tuple) and len(X) == 2:
        history, snaps = X
        if isinstance(history, EventHistory) and isinstance(snaps, SnapshotSeries):
            return TemporalNetwork(history, snaps)
    raise InputError("X must be a TemporalNetwork or an (EventHistory, SnapshotSeries) pair")


class BDSBM(ClusterMixin, BaseEstimator):
    """Birth-death stochastic block model fitted by variational EM.

    Parameters
    ----------
    n_clusters : int
    rate_mode : {"shared", "per-community"}
    omega : float
        Softening weight of the k-means initialization.
    kmeans_restarts : int
    max_iter : int
    tol : float
        Relative ELBO tolerance.
    fixed_point_sweeps : int
    random_state : int

    Attributes
    ----------
    labels_ : ndarray of int
        MAP community of every individual (0-based).
    delta_ : ndarray, shape (N, n_clusters)
    params_ : ModelParams
    elbo_trace_ : list of float
    converged_ : bool
    n_iter_ : int
    result_ : FitResult
    """

    def __init__(self, n_clusters=4, rate_mode=SHARED, omega=0.9, kmeans_restarts=10,
                 max_iter=100, tol=1e-6, fixed_point_sweeps=1, random_state=0):
        self.n_clusters = n_clusters
        self.rate_mode = rate_mode
        self.omega = omega
        self.kmeans_restarts = kmeans_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.fixed_point_sweeps = fixed_point_sweeps
        self.random_state = random_state

    def _validate(self):
        if int(self.n_clusters) < 1:
            raise InputError("n_clusters must be positive")
        if self.rate_mode not in RATE_MODES:
            raise InputError(f"unknown rate_mode {self.rate_mode!r}")

    def fit(self, X, y=None):
        self._validate()
        network = check_network(X)
        seed = 0 if self.random_state is None else int(self.random_state)
        init = InitOptions(self.omega, self.kmeans_restarts, seed)
        delta, params = initialize(network, int(self.n_clusters), init, self.rate_mode)
        options = FitOptions(self.max_iter, self.tol, self.fixed_point_sweeps, seed,
                             self.rate_mode)
        result = fit(network, delta, params, options)
        self.network_ = network
        self.result_ = result
        self.labels_ = result.labels
        self.delta_ = result.state.delta
        self.params_ = result.params
        self.elbo_trace_ = list(result.elbo_trace)
        self.converged_ = result.converged
        self.n_iter_ = result.n_iter
        return self

    def _check_fitted(self, X):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit before using this estimator")
        if X is not None:
            network = check_network(X)
            if network is not self.network_ and (
                network.n_individuals != self.network_.n_individuals
                or not np.array_equal(network.edge_counts, self.network_.edge_counts)
                or not np.array_equal(network.pair_exposure, self.network_.pair_exposure)
            ):
                raise InputError("the model is transductive; pass the fitted network")

    def predict(self, X=None):
        self._check_fitted(X)
        return self.labels_.copy()

    def predict_proba(self, X=None):
        self._check_fitted(X)
        return self.delta_.copy()

    def score(self, X=None, y=None):
        """Final ELBO of the fit."""
        self._check_fitted(X)
        return float(self.elbo_trace_[-1])

    def icl(self, X=None):
        self._check_fitted(X)
        return icl(self.result_, self.network_)
