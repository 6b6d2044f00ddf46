"""Closed-form maximum-likelihood estimates of shared birth and death rates.

The shared-rate estimators never look at community labels: they only need the
number of births, the number of deaths and the integrated population size
over the observation window.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import EstimationError


@dataclass(frozen=True)
class RateEstimate:
    lambda_hat: float
    mu_hat: float
    exposure: float
    birth_count: int
    death_count: int


def exposure_intervals(history):
    """Population sizes and interval lengths of the piecewise-constant N(t).

    Returns ``(sizes, durations)`` of length ``M + 1``: entry ``l`` holds the
    population size on ``[tau_l, tau_{l+1})`` with ``tau_0 = t0`` and
    ``tau_{M+1} = tT`` (the censored tail).
    """
    bounds = np.concatenate(([history.t0], history.times, [history.tT]))
    return history.sizes.astype(float), np.diff(bounds)


def integrated_exposure(history):
    """Integral of N(t) over [t0, tT], censored final interval included."""
    sizes, durations = exposure_intervals(history)
    return float(np.dot(sizes, durations))


def estimate_rates(history):
    """Maximum-likelihood shared birth and death rates.

    Parameters
    ----------
    history : EventHistory

    Returns
    -------
    RateEstimate

    Raises
    ------
    EstimationError
        If the integrated exposure is zero.
    """
    exposure = integrated_exposure(history)
    if not exposure > 0:
        raise EstimationError(
            f"integrated exposure is {exposure!r}; rates are undefined"
        )
    n_birth = int(np.count_nonzero(history.kinds == 1))
    n_death = int(np.count_nonzero(history.kinds == -1))
    return RateEstimate(
        lambda_hat=n_birth / exposure,
        mu_hat=n_death / exposure,
        exposure=exposure,
        birth_count=n_birth,
        death_count=n_death,
    )
