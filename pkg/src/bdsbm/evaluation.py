"""Clustering accuracy against ground truth after resolving label switching."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import InputError


@dataclass
class AlignedReport:
    """Accuracy summary of a predicted labelling.

    Attributes
    ----------
    permutation : ndarray, shape (K,)
        ``permutation[p]`` is the true community matched to predicted ``p``.
    confusion : ndarray, shape (K, K)
        Rows are true communities, columns aligned predictions.
    accuracy : float
    times : ndarray
    accuracy_series : ndarray
        Accuracy over the individuals alive at each time; NaN when nobody is.
    """

    permutation: np.ndarray
    confusion: np.ndarray
    accuracy: float
    times: np.ndarray
    accuracy_series: np.ndarray


def _check_pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise InputError("prediction and truth must label the same individuals")
    return pred.astype(np.int64), truth.astype(np.int64)


def cooccurrence(pred, truth, K):
    """``C[p, t]`` counts individuals predicted ``p`` with true label ``t``."""
    pred, truth = _check_pair(pred, truth)
    if pred.size and (min(pred.min(), truth.min()) < 0 or max(pred.max(), truth.max()) >= K):
        raise InputError(f"labels must lie in 0..{K - 1}")
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (pred, truth), 1)
    return C


def align_labels(pred, truth, K):
    """Permutation of predicted labels maximizing agreement with the truth.

    Returns
    -------
    ndarray, shape (K,)
        ``perm[p]`` is the true label assigned to predicted label ``p``.
    """
    C = cooccurrence(pred, truth, K)
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(K, dtype=np.int64)
    perm[rows] = cols
    return perm


def report(pred, truth, history=None, times=None, K=None):
    """Aligned confusion matrix, overall accuracy and accuracy over time.

    Parameters
    ----------
    pred, truth : array-like of int, shape (N,)
    history : EventHistory, optional
        Needed for the accuracy series.
    times : array-like, optional
        Evaluation times of the series.
    K : int, optional
        Defaults to one more than the largest label seen.
    """
    pred, truth = _check_pair(pred, truth)
    if K is None:
        K = int(max(pred.max(initial=-1), truth.max(initial=-1))) + 1
    perm = align_labels(pred, truth, K)
    aligned = perm[pred] if pred.size else pred
    confusion = np.zeros((K, K), dtype=np.int64)
    np.add.at(confusion, (truth, aligned), 1)
    accuracy = float(np.trace(confusion) / pred.size) if pred.size else float("nan")

    times = np.asarray([] if times is None else times, dtype=float)
    series = np.full(times.size, np.nan)
    if times.size:
        if history is None:
            raise InputError("an event history is needed for the accuracy series")
        if history.n_individuals != pred.size:
            raise InputError("labels do not match the history")
        hit = aligned == truth
        for s, t in enumerate(times):
            alive = history.alive_at(t)
            if alive.size:
                series[s] = hit[alive].mean()
    return AlignedReport(perm, confusion, accuracy, times, series)
