"""Choosing the number of communities with the integrated completed likelihood."""
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BDSBMError, SelectionError
from .initialization import InitOptions, initialize
from .model import complete_log_likelihood
from .vem import FitOptions, fit

THREADS_ENV = "BDSBM_NUM_THREADS"


def icl_penalty(K, n0, total_pair_slots):
    """``-(K - 1)/2 log N0 - K(K + 1)/4 log(sum |Upsilon_ij|)``."""
    if not total_pair_slots > 0:
        raise SelectionError("no co-alive pair was ever observed; ICL is undefined")
    if n0 < 1:
        raise SelectionError("the initial population is empty")
    return -0.5 * (K - 1) * np.log(n0) - 0.5 * (K * (K + 1) / 2) * np.log(total_pair_slots)


def icl(fit_result, network):
    """Integrated completed likelihood of a fit at its MAP labels.

    The birth and death rates are not penalized.
    """
    history = network.history
    penalty = icl_penalty(fit_result.K, history.n0, network.total_pair_slots)
    return complete_log_likelihood(fit_result.params, fit_result.labels, network) + penalty


@dataclass
class IclRow:
    K: int
    seed: int
    elbo: float
    icl: float
    converged: bool = False
    n_iter: int = 0
    error: str = ""


@dataclass
class IclTable:
    """Every ``(K, seed)`` cell of a sweep plus the two summaries.

    ``selected_K`` maximizes the best ICL over seeds (ties go to the smaller
    K); ``histogram[K]`` counts the seeds whose own best ICL is at ``K``.
    """

    rows: list
    selected_K: int
    best_icl: dict = field(default_factory=dict)
    histogram: dict = field(default_factory=dict)

    def row_for(self, K):
        """Row of the best ICL at ``K``."""
        cells = [r for r in self.rows if r.K == K and np.isfinite(r.icl)]
        return max(cells, key=lambda r: r.icl) if cells else None


def _run_cell(network, K, seed, fit_options, init_options):
    try:
        init = InitOptions(init_options.omega, init_options.kmeans_restarts, seed)
        delta, params = initialize(network, K, init, fit_options.rate_mode)
        opts = FitOptions(fit_options.max_iterations, fit_options.elbo_rel_tolerance,
                          fit_options.fixed_point_sweeps, seed, fit_options.rate_mode)
        result = fit(network, delta, params, opts)
        return IclRow(K, seed, result.elbo, icl(result, network), result.converged, result.n_iter)
    except (BDSBMError, ValueError) as exc:
        return IclRow(K, seed, float("nan"), float("nan"), error=str(exc))


def _summarize(rows, K_range, seeds):
    best = {}
    for K in K_range:
        values = [r.icl for r in rows if r.K == K and np.isfinite(r.icl)]
        best[K] = max(values) if values else float("-inf")
    if not np.isfinite(max(best.values())):
        raise SelectionError("every fit in the sweep failed")
    top = max(best.values())
    selected = min(K for K in K_range if best[K] == top)
    histogram = {K: 0 for K in K_range}
    for seed in seeds:
        cells = [r for r in rows if r.seed == seed and np.isfinite(r.icl)]
        if cells:
            winner = max(cells, key=lambda r: (r.icl, -r.K))
            histogram[winner.K] += 1
    return selected, best, histogram


def select_k(network, K_range, n_inits=10, fit_options=None, init_options=None,
             seeds=None, n_jobs=None):
    """Sweep ``K`` over seeded initializations and pick the best ICL.

    Parameters
    ----------
    network : TemporalNetwork
    K_range : iterable of int
    n_inits : int
        Number of seeds per ``K`` (seeds ``0 .. n_inits - 1`` unless given).
    fit_options : FitOptions, optional
    init_options : InitOptions, optional
    seeds : sequence of int, optional
    n_jobs : int, optional
        Parallel workers; defaults to the ``BDSBM_NUM_THREADS`` environment
        variable, else 1. Results do not depend on it.

    Returns
    -------
    IclTable
    """
    K_range = sorted({int(K) for K in K_range})
    if not K_range:
        raise SelectionError("K_range is empty")
    if min(K_range) < 1:
        raise SelectionError("K must be positive")
    if seeds is None:
        if n_inits < 1:
            raise SelectionError("n_inits must be at least 1")
        seeds = list(range(n_inits))
    seeds = [int(s) for s in seeds]
    fit_options = fit_options or FitOptions()
    init_options = init_options or InitOptions()
    icl_penalty(1, network.history.n0, network.total_pair_slots)  # fail early

    if n_jobs is None:
        n_jobs = int(os.environ.get(THREADS_ENV, "1") or 1)
    cells = [(K, s) for K in K_range for s in seeds]
    if n_jobs == 1:
        rows = [_run_cell(network, K, s, fit_options, init_options) for K, s in cells]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=n_jobs)(
            delayed(_run_cell)(network, K, s, fit_options, init_options) for K, s in cells
        )
    selected, best, histogram = _summarize(rows, K_range, seeds)
    return IclTable(rows, selected, best, histogram)
